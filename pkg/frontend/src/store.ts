// Client-side state for the review session.
//
// The store never invents or mutates server data: `page`, `batches` and
// `current` are always verbatim responses, refetched after every action.
// The only client-owned state is the filter selection and the idempotency
// tokens for decisions.

import {
  ApiError,
  type BatchesEnvelope,
  type ItemEnvelope,
  type QueuePage,
  type ReviewApi,
  type ReviewItemFull,
} from './api.js';

export interface QueueFilters {
  kind: string; // '' = all kinds
  status: string; // '' = all statuses
  category: string; // display filter only; applied when rendering rows
  offset: number;
  limit: number;
}

export interface StoreState {
  filters: QueueFilters;
  page: QueuePage | null;
  batches: BatchesEnvelope | null;
  current: ItemEnvelope | null;
  /** Set when a decision bounced with 409: the decision recorded elsewhere. */
  conflict: ReviewItemFull | null;
  /** Set on network/server failure; the UI offers a retry, nothing is assumed. */
  error: string | null;
}

type Listener = () => void;

const DEFAULT_FILTERS: QueueFilters = {
  kind: 'strategy',
  status: '',
  category: '',
  offset: 0,
  limit: 100,
};

export class QueueStore {
  private state: StoreState = {
    filters: { ...DEFAULT_FILTERS },
    page: null,
    batches: null,
    current: null,
    conflict: null,
    error: null,
  };
  private tokens = new Map<string, string>();
  private listeners = new Set<Listener>();
  private retryAction: (() => Promise<void>) | null = null;

  constructor(private readonly api: ReviewApi) {}

  getState(): StoreState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  private patch(partial: Partial<StoreState>): void {
    this.state = { ...this.state, ...partial };
    this.emit();
  }

  /** One idempotency token per item, held for the whole session so repeat
   * submissions of the same decision collapse server-side. */
  private tokenFor(itemId: string): string {
    let token = this.tokens.get(itemId);
    if (!token) {
      token = `${itemId}:${Date.now().toString(36)}:${Math.random().toString(36).slice(2, 10)}`;
      this.tokens.set(itemId, token);
    }
    return token;
  }

  async refresh(): Promise<void> {
    const { filters } = this.state;
    try {
      const [page, batches] = await Promise.all([
        this.api.queue({
          kind: filters.kind || undefined,
          status: filters.status || undefined,
          offset: filters.offset,
          limit: filters.limit,
        }),
        this.api.batches(filters.kind || undefined),
      ]);
      const current = this.state.current
        ? await this.api.item(this.state.current.item.item_id)
        : null;
      this.retryAction = null;
      this.patch({ page, batches, current, error: null });
    } catch (err) {
      this.retryAction = () => this.refresh();
      this.patch({ error: describe(err) });
    }
  }

  async setFilters(partial: Partial<QueueFilters>): Promise<void> {
    this.patch({ filters: { ...this.state.filters, ...partial, offset: partial.offset ?? 0 } });
    await this.refresh();
  }

  async open(itemId: string): Promise<void> {
    try {
      const current = await this.api.item(itemId);
      this.retryAction = null;
      this.patch({ current, conflict: null, error: null });
    } catch (err) {
      this.retryAction = () => this.open(itemId);
      this.patch({ error: describe(err) });
    }
  }

  close(): void {
    this.patch({ current: null, conflict: null });
  }

  /** POST a decision and re-sync from the service. On 409 the decision
   * recorded by someone else is surfaced instead; on network failure the
   * state is left exactly as it was and a retry is offered. */
  async submitDecision(
    itemId: string,
    verdict: 'approve' | 'reject',
    notes = '',
    reviewer = '',
  ): Promise<void> {
    const token = this.tokenFor(itemId);
    try {
      await this.api.decide(itemId, { verdict, notes, reviewer, token });
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        const envelope = await this.api.item(itemId);
        this.patch({ conflict: envelope.item });
        await this.refresh();
        return;
      }
      this.retryAction = () => this.submitDecision(itemId, verdict, notes, reviewer);
      this.patch({ error: describe(err) });
      return;
    }
    this.patch({ conflict: null });
    await this.refresh();
  }

  /** Re-run the action that failed; no-op when nothing is pending. */
  async retry(): Promise<void> {
    const action = this.retryAction;
    if (!action) return;
    this.retryAction = null;
    this.patch({ error: null });
    await action();
  }

  hasPendingRetry(): boolean {
    return this.retryAction !== null;
  }

  /** item_id of the next pending row after the currently open item. */
  nextPendingId(): string | null {
    const page = this.state.page;
    if (!page) return null;
    const currentId = this.state.current?.item.item_id ?? null;
    const ids = page.items.map((item) => item.item_id);
    const start = currentId ? ids.indexOf(currentId) + 1 : 0;
    for (let i = 0; i < ids.length; i += 1) {
      const candidate = page.items[(start + i) % ids.length];
      if (candidate && candidate.status === 'pending' && candidate.item_id !== currentId) {
        return candidate.item_id;
      }
    }
    return null;
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `service error ${err.status}: ${err.message}`;
  if (err instanceof Error) return `request failed: ${err.message}`;
  return 'request failed';
}
