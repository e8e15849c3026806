// Item view: one reviewable unit with its media, plan details, and the
// approve/reject controls. Boundaries are never editable here; a bad plan
// is rejected with notes and goes back to planning.

import { eventFields, payloadWindows, planFields } from './format.js';
import { categoryLabel } from './format.js';
import type { QueueStore } from './store.js';

export interface ItemActions {
  onDecide: (itemId: string, verdict: 'approve' | 'reject', notes: string) => void;
  onMediaReady: (itemId: string) => void;
  isMediaReady: (itemId: string) => boolean;
  onBack: () => void;
  /** Service-relative media path to an absolute URL on the API origin. */
  resolveMedia: (path: string) => string;
}

// What a constructed-video QC reviewer confirms before deciding.
const VIDEO_CHECKLIST = [
  'Does what you hear match the label the item carries?',
  'Is the tagged category the right name for the problem?',
  'Do the time bounds and the written reasoning line up with the audio?',
];

export function renderItem(
  container: HTMLElement,
  store: QueueStore,
  actions: ItemActions,
): void {
  const state = store.getState();
  container.textContent = '';
  const envelope = state.current;
  if (!envelope) return;
  const item = envelope.item;

  const header = document.createElement('div');
  header.className = 'item-header';
  const back = document.createElement('button');
  back.textContent = '← queue';
  back.dataset.role = 'back';
  back.addEventListener('click', () => actions.onBack());
  const title = document.createElement('h2');
  title.textContent = item.item_id;
  const meta = document.createElement('span');
  meta.className = `status-${item.status}`;
  meta.dataset.role = 'item-status';
  const category = item.category ? ` · ${categoryLabel(item.category)}` : '';
  meta.textContent = `${item.kind}${category} · ${item.status}`;
  header.append(back, title, meta);
  container.appendChild(header);

  if (state.conflict && state.conflict.item_id === item.item_id) {
    const box = document.createElement('div');
    box.className = 'conflict';
    box.dataset.role = 'conflict';
    const reviewer = state.conflict.reviewer || 'another reviewer';
    box.textContent = `Already ${state.conflict.status} by ${reviewer}; showing the recorded decision.`;
    container.appendChild(box);
  }
  if (state.error) {
    const box = document.createElement('div');
    box.className = 'error';
    box.dataset.role = 'error';
    box.textContent = state.error;
    if (store.hasPendingRetry()) {
      const retry = document.createElement('button');
      retry.textContent = 'Retry';
      retry.dataset.role = 'retry';
      retry.addEventListener('click', () => void store.retry());
      box.appendChild(retry);
    }
    container.appendChild(box);
  }

  container.appendChild(renderMedia(envelope.media_url, item, actions));

  const fields =
    item.kind === 'video' ? eventFields(item.payload) : planFields(item.payload);
  const list = document.createElement('dl');
  list.className = 'plan-fields';
  for (const field of fields) {
    const dt = document.createElement('dt');
    dt.textContent = field.label;
    const dd = document.createElement('dd');
    dd.textContent = field.value;
    list.append(dt, dd);
  }
  container.appendChild(list);

  if (item.kind === 'video') {
    const checklist = document.createElement('ul');
    checklist.className = 'qc-checklist';
    checklist.dataset.role = 'qc-checklist';
    for (const question of VIDEO_CHECKLIST) {
      const row = document.createElement('li');
      const box = document.createElement('input');
      box.type = 'checkbox';
      const text = document.createElement('label');
      text.textContent = question;
      row.append(box, text);
      checklist.appendChild(row);
    }
    container.appendChild(checklist);
  }

  container.appendChild(renderControls(item.item_id, item.status, envelope.media_url, actions));
}

function renderMedia(
  mediaUrl: string | null,
  item: { item_id: string; payload: Record<string, unknown> },
  actions: ItemActions,
): HTMLElement {
  const wrap = document.createElement('div');
  wrap.className = 'media';
  if (!mediaUrl) {
    const note = document.createElement('p');
    note.className = 'media-missing';
    note.textContent = 'No media attached to this item.';
    wrap.appendChild(note);
    return wrap;
  }
  const audio = document.createElement('audio');
  audio.controls = true;
  audio.preload = 'metadata';
  audio.src = actions.resolveMedia(mediaUrl);
  audio.dataset.role = 'media';
  audio.addEventListener('canplay', () => actions.onMediaReady(item.item_id), { once: true });
  wrap.appendChild(audio);

  const windows = payloadWindows(item.payload);
  if (windows.length > 0) {
    wrap.appendChild(renderTimeline(audio, windows));
  }
  return wrap;
}

function renderTimeline(
  audio: HTMLAudioElement,
  windows: Array<[number, number]>,
): HTMLElement {
  const bar = document.createElement('div');
  bar.className = 'timeline';
  bar.dataset.role = 'timeline';

  const draw = () => {
    bar.textContent = '';
    const duration = audio.duration;
    if (!Number.isFinite(duration) || duration <= 0) return;
    for (const [start, end] of windows) {
      const marker = document.createElement('span');
      marker.className = 'timeline-window';
      marker.style.left = `${(start / duration) * 100}%`;
      marker.style.width = `${(Math.min(end, duration) - start) / duration * 100}%`;
      marker.title = `${start.toFixed(3)}s – ${end.toFixed(3)}s`;
      bar.appendChild(marker);
    }
  };
  audio.addEventListener('loadedmetadata', draw);
  draw();

  // Scrubbing snaps to the nearest window edge: inspection nearly always
  // starts at a boundary, and batches of 50 reward fast positioning.
  bar.addEventListener('click', (event) => {
    const rect = bar.getBoundingClientRect();
    const duration = audio.duration;
    if (!Number.isFinite(duration) || duration <= 0 || rect.width === 0) return;
    const clicked = ((event.clientX - rect.left) / rect.width) * duration;
    const edges = windows.flat();
    let snapped = clicked;
    let distance = 0.75; // snap radius in seconds
    for (const edge of edges) {
      if (Math.abs(edge - clicked) < distance) {
        snapped = edge;
        distance = Math.abs(edge - clicked);
      }
    }
    audio.currentTime = snapped;
  });
  return bar;
}

function renderControls(
  itemId: string,
  status: string,
  mediaUrl: string | null,
  actions: ItemActions,
): HTMLElement {
  const wrap = document.createElement('div');
  wrap.className = 'decision';

  const notes = document.createElement('textarea');
  notes.dataset.role = 'notes';
  notes.placeholder = 'Notes (required to reject)';
  // a decided item keeps its record read-only
  notes.disabled = status !== 'pending';

  const ready = mediaUrl === null || actions.isMediaReady(itemId);
  const approve = document.createElement('button');
  approve.textContent = 'Approve (a)';
  approve.dataset.role = 'approve';
  approve.disabled = status !== 'pending' || !ready;
  approve.addEventListener('click', () => actions.onDecide(itemId, 'approve', notes.value));

  const reject = document.createElement('button');
  reject.textContent = 'Reject (r)';
  reject.dataset.role = 'reject';
  reject.disabled = status !== 'pending' || !ready;
  reject.addEventListener('click', () => {
    if (notes.value.trim() === '') {
      notes.focus();
      notes.classList.add('notes-required');
      return;
    }
    actions.onDecide(itemId, 'reject', notes.value);
  });
  notes.addEventListener('input', () => notes.classList.remove('notes-required'));

  if (!ready) {
    const hint = document.createElement('span');
    hint.className = 'media-hint';
    hint.dataset.role = 'media-hint';
    hint.textContent = 'Listen first: controls unlock when the media has loaded.';
    wrap.appendChild(hint);
  }
  wrap.append(approve, reject, notes);
  return wrap;
}
