// Queue view: filter controls, batch banner, and the item table.
// Renders exactly what the service returned; rows are never restyled to
// anticipate a decision that has not been confirmed.

import type { BatchStats } from './api.js';
import { CATEGORIES, REVIEW_KINDS } from './constants.js';
import { categoryLabel } from './format.js';
import type { QueueStore } from './store.js';

export interface QueueActions {
  onOpen: (itemId: string) => void;
}

/** Wording for the batch banner; the newest batch speaks for the queue. */
export function bannerText(stats: BatchStats | null, batchSize: number): string {
  if (!stats) return 'no batches yet';
  const position = `batch ${stats.index + 1} · flagged ${stats.flagged}/${batchSize}`;
  if (!stats.passed) return `${position} · batch failing`;
  if (stats.complete) return `${position} · batch passed`;
  return `${position} · in review (${stats.decided}/${stats.total} decided)`;
}

export function renderQueue(
  container: HTMLElement,
  store: QueueStore,
  actions: QueueActions,
): void {
  const state = store.getState();
  container.textContent = '';

  container.appendChild(renderFilters(store));

  const banner = document.createElement('div');
  banner.className = 'banner';
  banner.dataset.role = 'batch-banner';
  const batches = state.batches?.batches ?? [];
  const latest = batches.length > 0 ? batches[batches.length - 1]! : null;
  const text = document.createElement('span');
  text.textContent = bannerText(latest, state.batches?.batch_size ?? 50);
  banner.classList.toggle('banner-failing', latest !== null && !latest.passed);
  banner.appendChild(text);
  banner.appendChild(renderBalanceBars(batches));
  container.appendChild(banner);

  if (state.error) {
    container.appendChild(renderError(state.error, store));
  }

  const table = document.createElement('table');
  table.className = 'queue-table';
  const head = table.createTHead().insertRow();
  for (const title of ['Item', 'Kind', 'Category', 'Status', 'Reviewer']) {
    const cell = document.createElement('th');
    cell.textContent = title;
    head.appendChild(cell);
  }
  const body = table.createTBody();
  const categoryFilter = state.filters.category;
  for (const item of state.page?.items ?? []) {
    if (categoryFilter && item.category !== categoryFilter) continue;
    const row = body.insertRow();
    row.dataset.itemId = item.item_id;
    row.className = `status-${item.status}`;
    row.insertCell().textContent = item.item_id;
    row.insertCell().textContent = item.kind;
    row.insertCell().textContent = item.category ? categoryLabel(item.category) : '–';
    row.insertCell().textContent = item.status;
    row.insertCell().textContent = item.reviewer || '–';
    row.addEventListener('click', () => actions.onOpen(item.item_id));
  }
  container.appendChild(table);

  const footer = document.createElement('div');
  footer.className = 'queue-footer';
  const total = state.page?.total ?? 0;
  const shown = body.rows.length;
  footer.textContent = `${shown} shown of ${total} matching`;
  container.appendChild(footer);
}

function renderFilters(store: QueueStore): HTMLElement {
  const state = store.getState();
  const bar = document.createElement('div');
  bar.className = 'filters';

  bar.appendChild(
    select('kind', ['', ...REVIEW_KINDS], state.filters.kind, (value) => {
      void store.setFilters({ kind: value });
    }),
  );
  bar.appendChild(
    select(
      'status',
      ['', 'pending', 'approved', 'rejected'],
      state.filters.status,
      (value) => {
        void store.setFilters({ status: value });
      },
    ),
  );
  bar.appendChild(
    select('category', ['', ...CATEGORIES], state.filters.category, (value) => {
      void store.setFilters({ category: value });
    }),
  );
  return bar;
}

function select(
  name: string,
  options: string[],
  selected: string,
  onChange: (value: string) => void,
): HTMLElement {
  const wrap = document.createElement('label');
  wrap.className = 'filter';
  wrap.textContent = `${name}: `;
  const control = document.createElement('select');
  control.dataset.filter = name;
  for (const option of options) {
    const el = document.createElement('option');
    el.value = option;
    el.textContent = option === '' ? 'all' : option;
    el.selected = option === selected;
    control.appendChild(el);
  }
  control.addEventListener('change', () => onChange(control.value));
  wrap.appendChild(control);
  return wrap;
}

function renderBalanceBars(batches: BatchStats[]): HTMLElement {
  // Approved-per-category histogram across every batch of the current kind,
  // so reviewers can see a category starving before the corpus does.
  const counts = new Map<string, number>();
  for (const batch of batches) {
    for (const [category, count] of Object.entries(batch.category_counts)) {
      counts.set(category, (counts.get(category) ?? 0) + count);
    }
  }
  const wrap = document.createElement('div');
  wrap.className = 'balance';
  wrap.dataset.role = 'balance-bars';
  const max = Math.max(1, ...counts.values());
  for (const [category, count] of [...counts.entries()].sort()) {
    const row = document.createElement('div');
    row.className = 'balance-row';
    const label = document.createElement('span');
    label.textContent = `${categoryLabel(category)} (${count})`;
    const bar = document.createElement('span');
    bar.className = 'balance-bar';
    bar.style.width = `${Math.round((count / max) * 120)}px`;
    row.append(label, bar);
    wrap.appendChild(row);
  }
  return wrap;
}

function renderError(message: string, store: QueueStore): HTMLElement {
  const box = document.createElement('div');
  box.className = 'error';
  box.dataset.role = 'error';
  const text = document.createElement('span');
  text.textContent = message;
  box.appendChild(text);
  if (store.hasPendingRetry()) {
    const retry = document.createElement('button');
    retry.textContent = 'Retry';
    retry.dataset.role = 'retry';
    retry.addEventListener('click', () => void store.retry());
    box.appendChild(retry);
  }
  return box;
}
