// Typed client for the review service HTTP API. Field names mirror the
// service's JSON exactly; nothing is renamed or reshaped on the way in.

export interface ReviewItemSummary {
  item_id: string;
  kind: string;
  category: string;
  status: string;
  notes: string;
  reviewer: string;
  decision_token: string;
}

export interface ReviewItemFull extends ReviewItemSummary {
  payload: Record<string, unknown>;
}

export interface QueuePage {
  items: ReviewItemSummary[];
  total: number;
  offset: number;
  limit: number;
}

export interface ItemEnvelope {
  item: ReviewItemFull;
  media_url: string | null;
}

export interface BatchStats {
  kind: string;
  index: number;
  total: number;
  decided: number;
  approved: number;
  flagged: number;
  passed: boolean;
  complete: boolean;
  category_counts: Record<string, number>;
}

export interface BatchesEnvelope {
  batches: BatchStats[];
  batch_size: number;
  flag_threshold: number;
}

export interface DecisionBody {
  verdict: string;
  notes?: string;
  reviewer?: string;
  token?: string;
}

export interface QueueQuery {
  kind?: string;
  status?: string;
  offset?: number;
  limit?: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = 'ApiError';
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ReviewApi {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = `request failed with status ${response.status}`;
      try {
        const body = await response.json();
        if (body && typeof body.detail === 'string') {
          detail = body.detail;
        }
      } catch {
        // non-JSON error body; the status line is all we have
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  queue(query: QueueQuery = {}): Promise<QueuePage> {
    const params = new URLSearchParams();
    if (query.kind) params.set('kind', query.kind);
    if (query.status) params.set('status', query.status);
    if (query.offset !== undefined) params.set('offset', String(query.offset));
    if (query.limit !== undefined) params.set('limit', String(query.limit));
    const suffix = params.size > 0 ? `?${params.toString()}` : '';
    return this.request<QueuePage>(`/queue${suffix}`);
  }

  item(itemId: string): Promise<ItemEnvelope> {
    return this.request<ItemEnvelope>(`/item/${encodeURIComponent(itemId)}`);
  }

  batches(kind?: string): Promise<BatchesEnvelope> {
    const suffix = kind ? `?kind=${encodeURIComponent(kind)}` : '';
    return this.request<BatchesEnvelope>(`/batches${suffix}`);
  }

  decide(itemId: string, body: DecisionBody): Promise<{ item: ReviewItemFull }> {
    return this.request<{ item: ReviewItemFull }>(
      `/item/${encodeURIComponent(itemId)}/decision`,
      {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(body),
      },
    );
  }

  health(): Promise<{ status: string; items: number }> {
    return this.request<{ status: string; items: number }>('/health');
  }

  /** Absolute URL for a service-relative media path, or null when absent. */
  mediaUrl(path: string | null): string | null {
    return path ? `${this.baseUrl}${path}` : null;
  }
}
