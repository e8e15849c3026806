import { CATEGORY_LABELS, CLASS_LABELS } from './constants.js';

export function formatSeconds(value: number): string {
  const minutes = Math.floor(value / 60);
  const seconds = value - minutes * 60;
  const text = seconds.toFixed(3).padStart(6, '0');
  return minutes > 0 ? `${minutes}:${text}` : `${text}s`;
}

export function categoryLabel(name: string): string {
  return CATEGORY_LABELS[name] ?? name;
}

export function classLabel(name: string): string {
  return CLASS_LABELS[name] ?? name;
}

export interface PlanField {
  label: string;
  value: string;
}

interface PlanJson {
  start?: number;
  end?: number;
  class_label?: string;
  injection_type?: string;
  injection_params?: Record<string, unknown>;
  reasoning?: string;
  dataset_sub_category?: string;
}

interface EventJson {
  start?: number;
  end?: number;
  injection_type?: string;
  class_label?: string;
  reasoning?: string;
}

/** Flatten a strategy payload into labeled rows for the item view. */
export function planFields(payload: Record<string, unknown>): PlanField[] {
  const fields: PlanField[] = [];
  const window = payload['window'] as { start?: number; end?: number } | undefined;
  if (window && typeof window.start === 'number' && typeof window.end === 'number') {
    fields.push({
      label: 'Window',
      value: `${formatSeconds(window.start)} – ${formatSeconds(window.end)}`,
    });
  }
  const plan = payload['plan'] as PlanJson | undefined;
  if (plan) {
    if (plan.class_label) fields.push({ label: 'Class', value: classLabel(plan.class_label) });
    if (plan.injection_type) {
      fields.push({ label: 'Category', value: categoryLabel(plan.injection_type) });
    }
    for (const [key, value] of Object.entries(plan.injection_params ?? {})) {
      fields.push({ label: `Param · ${key}`, value: stringify(value) });
    }
    if (plan.dataset_sub_category) {
      fields.push({ label: 'Sub-category', value: plan.dataset_sub_category });
    }
    if (plan.reasoning) fields.push({ label: 'Reasoning', value: plan.reasoning });
  }
  return fields;
}

/** Event rows for a constructed-video QC payload. */
export function eventFields(payload: Record<string, unknown>): PlanField[] {
  const events = (payload['events'] as EventJson[] | undefined) ?? [];
  return events.map((event, index) => {
    const span =
      typeof event.start === 'number' && typeof event.end === 'number'
        ? `${formatSeconds(event.start)} – ${formatSeconds(event.end)}`
        : 'unknown window';
    const category = event.injection_type ? categoryLabel(event.injection_type) : 'unlabeled';
    const reasoning = event.reasoning ? ` — ${event.reasoning}` : '';
    return { label: `Event ${index + 1}`, value: `${span} · ${category}${reasoning}` };
  });
}

/** Time windows (seconds) referenced by the payload, for timeline markers. */
export function payloadWindows(payload: Record<string, unknown>): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  const window = payload['window'] as { start?: number; end?: number } | undefined;
  if (window && typeof window.start === 'number' && typeof window.end === 'number') {
    out.push([window.start, window.end]);
  }
  for (const event of (payload['events'] as EventJson[] | undefined) ?? []) {
    if (typeof event.start === 'number' && typeof event.end === 'number') {
      out.push([event.start, event.end]);
    }
  }
  return out;
}

function stringify(value: unknown): string {
  if (typeof value === 'string') return value;
  if (typeof value === 'number' || typeof value === 'boolean') return String(value);
  return JSON.stringify(value);
}
