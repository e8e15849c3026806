// Generated by scripts/gen_constants.py from the backend vocabulary.
// Do not edit by hand; regenerate instead.

export const SEGMENT_CLASSES = ['class_1_active_speaker', 'class_2_voiceover', 'class_3_scenic'] as const;
export const CATEGORIES = ['TEMPORAL_SHIFT', 'LIP_SYNC', 'VOICE_IDENTITY', 'VOLUME_FLUCTUATION', 'SEMANTIC_DIVERGENCE', 'BACKGROUND_CONFLICT', 'EMOTION_MISMATCH', 'BACKGROUND_SOUND'] as const;
export const REVIEW_KINDS = ['strategy', 'video'] as const;

export type SegmentClassName = (typeof SEGMENT_CLASSES)[number];
export type CategoryName = (typeof CATEGORIES)[number];
export type ReviewKind = (typeof REVIEW_KINDS)[number];

export const CLASS_LABELS: Record<string, string> = {
  'class_1_active_speaker': 'Active speaker',
  'class_2_voiceover': 'Voiceover',
  'class_3_scenic': 'Scenic',
};

export const CATEGORY_LABELS: Record<string, string> = {
  'TEMPORAL_SHIFT': 'Temporal shift',
  'LIP_SYNC': 'Lip sync',
  'VOICE_IDENTITY': 'Voice identity',
  'VOLUME_FLUCTUATION': 'Volume fluctuation',
  'SEMANTIC_DIVERGENCE': 'Semantic divergence',
  'BACKGROUND_CONFLICT': 'Background conflict',
  'EMOTION_MISMATCH': 'Emotion mismatch',
  'BACKGROUND_SOUND': 'Background sound',
};

export const LEGAL_CATEGORIES: Record<string, readonly string[]> = {
  'class_1_active_speaker': ['LIP_SYNC', 'TEMPORAL_SHIFT', 'VOICE_IDENTITY', 'VOLUME_FLUCTUATION'],
  'class_2_voiceover': ['BACKGROUND_CONFLICT', 'SEMANTIC_DIVERGENCE'],
  'class_3_scenic': ['BACKGROUND_SOUND', 'EMOTION_MISMATCH'],
};
