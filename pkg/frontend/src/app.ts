// Bootstraps the review session: one store, hash routing between the queue
// and a single open item, and the a/r/n keyboard shortcuts.

import { ReviewApi, type FetchLike } from './api.js';
import { renderItem, type ItemActions } from './item.js';
import { renderQueue, type QueueActions } from './queue.js';
import { QueueStore } from './store.js';

export interface AppOptions {
  baseUrl: string;
  fetchFn?: FetchLike;
  document?: Document;
}

export interface App {
  store: QueueStore;
  dispose: () => void;
}

export function boot(root: HTMLElement, options: AppOptions): App {
  const doc = options.document ?? document;
  const api = new ReviewApi(options.baseUrl, options.fetchFn);
  const store = new QueueStore(api);
  const readyMedia = new Set<string>();

  const queueActions: QueueActions = {
    onOpen: (itemId) => {
      void store.open(itemId);
    },
  };
  const itemActions: ItemActions = {
    onDecide: (itemId, verdict, notes) => {
      void store.submitDecision(itemId, verdict, notes);
    },
    onMediaReady: (itemId) => {
      readyMedia.add(itemId);
      render();
    },
    isMediaReady: (itemId) => readyMedia.has(itemId),
    onBack: () => store.close(),
    resolveMedia: (path) => api.mediaUrl(path) ?? path,
  };

  const render = () => {
    const state = store.getState();
    if (state.current) {
      renderItem(root, store, itemActions);
    } else {
      renderQueue(root, store, queueActions);
    }
  };

  const unsubscribe = store.subscribe(render);

  const onKey = (event: KeyboardEvent) => {
    const target = event.target as HTMLElement | null;
    if (target && (target.tagName === 'TEXTAREA' || target.tagName === 'INPUT')) {
      return; // never steal keys from the notes field
    }
    const state = store.getState();
    if (event.key === 'n') {
      const next = store.nextPendingId();
      if (next) void store.open(next);
      return;
    }
    if (!state.current) return;
    if (event.key === 'a') {
      const button = root.querySelector<HTMLButtonElement>('[data-role="approve"]');
      if (button && !button.disabled) button.click();
    } else if (event.key === 'r') {
      const button = root.querySelector<HTMLButtonElement>('[data-role="reject"]');
      if (button && !button.disabled) button.click();
    }
  };
  doc.addEventListener('keydown', onKey);

  render();
  void store.refresh();

  return {
    store,
    dispose: () => {
      unsubscribe();
      doc.removeEventListener('keydown', onKey);
    },
  };
}
