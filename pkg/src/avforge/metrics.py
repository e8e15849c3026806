"""Scoring for the two evaluation tasks.

Covers binary detection, category classification over true positives,
temporal grounding (Recall@1 and mean IoU), reasoning text quality (BLEU-4,
ROUGE-L, METEOR) and the dense full-video score that combines interval
matching with text similarity.  All scores live in [0, 1] internally and are
scaled by 100 only at report serialization.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .responses import (
    GroundedEvent,
    GroundedPrediction,
    parse_fullvideo_response,
    parse_segment_response,
)
from .taxonomy import InconsistencyCategory, TimeInterval


class MetricInputError(ValueError):
    """Metric inputs were malformed: mismatched, missing or duplicate ids."""


@dataclass(frozen=True, slots=True)
class MetricConfig:
    """Knobs shared by the scoring functions; defaults are the reported setup."""

    iou_thresholds: tuple[float, ...] = (0.3, 0.5, 0.7)
    rouge_beta: float = 1.2
    meteor_gamma: float = 0.5
    meteor_theta: float = 3.0
    bleu_max_n: int = 4
    soda_text_metric: str = "meteor"

    def __post_init__(self) -> None:
        object.__setattr__(self, "iou_thresholds", tuple(self.iou_thresholds))
        if not self.iou_thresholds:
            raise ValueError("at least one IoU threshold is required")
        for alpha in self.iou_thresholds:
            if not 0.0 < alpha <= 1.0:
                raise ValueError(f"IoU threshold {alpha} outside (0, 1]")
        if self.rouge_beta <= 0:
            raise ValueError("rouge_beta must be positive")
        if not 0.0 <= self.meteor_gamma <= 1.0:
            raise ValueError("meteor_gamma must lie in [0, 1]")
        if self.meteor_theta <= 0:
            raise ValueError("meteor_theta must be positive")
        if self.bleu_max_n < 1:
            raise ValueError("bleu_max_n must be at least 1")
        if self.soda_text_metric != "meteor":
            raise ValueError(f"unsupported text metric {self.soda_text_metric!r}")


@dataclass(frozen=True, slots=True)
class BinaryPrediction:
    """Per-sample binary inconsistency label."""

    sample_id: str
    label: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True, slots=True)
class CategoryPrediction:
    """Binary label plus the claimed category, for type accuracy."""

    sample_id: str
    label: int
    category: InconsistencyCategory | None = None

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


def _indexed(items: Sequence, side: str) -> dict[str, object]:
    table: dict[str, object] = {}
    for item in items:
        if item.sample_id in table:
            raise MetricInputError(f"duplicate {side} id {item.sample_id!r}")
        table[item.sample_id] = item
    return table


def _paired_by_id(preds: Sequence, truths: Sequence) -> list[tuple[object, object]]:
    pred_table = _indexed(preds, "prediction")
    truth_table = _indexed(truths, "truth")
    if pred_table.keys() != truth_table.keys():
        missing = sorted(truth_table.keys() - pred_table.keys())
        extra = sorted(pred_table.keys() - truth_table.keys())
        raise MetricInputError(
            f"id mismatch: missing predictions {missing[:5]}, unknown ids {extra[:5]}"
        )
    return [(pred_table[key], truth_table[key]) for key in sorted(truth_table)]


@dataclass(frozen=True, slots=True)
class DetectionResult:
    accuracy: float
    precision: float
    recall: float
    f1: float
    fpr: float
    true_positives: int
    false_positives: int
    true_negatives: int
    false_negatives: int
    undefined: tuple[str, ...] = ()


def detection_metrics(
    preds: Sequence[BinaryPrediction], truths: Sequence[BinaryPrediction]
) -> DetectionResult:
    """Confusion-matrix scores over id-matched binary labels.

    Empty denominators yield 0.0 and the affected score's name appears in
    ``undefined`` rather than raising.
    """
    pairs = _paired_by_id(preds, truths)
    tp = fp = tn = fn = 0
    for pred, truth in pairs:
        if truth.label == 1:
            if pred.label == 1:
                tp += 1
            else:
                fn += 1
        elif pred.label == 1:
            fp += 1
        else:
            tn += 1
    undefined: list[str] = []

    def ratio(numerator: int, denominator: int, name: str) -> float:
        if denominator == 0:
            undefined.append(name)
            return 0.0
        return numerator / denominator

    accuracy = ratio(tp + tn, tp + fp + tn + fn, "accuracy")
    precision = ratio(tp, tp + fp, "precision")
    recall = ratio(tp, tp + fn, "recall")
    fpr = ratio(fp, fp + tn, "fpr")
    if precision + recall == 0.0:
        undefined.append("f1")
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return DetectionResult(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        fpr=fpr,
        true_positives=tp,
        false_positives=fp,
        true_negatives=tn,
        false_negatives=fn,
        undefined=tuple(undefined),
    )


@dataclass(frozen=True, slots=True)
class TypeAccuracyResult:
    accuracy: float
    true_positives: int
    matches: int
    defined: bool


def classification_accuracy(
    preds: Sequence[CategoryPrediction], truths: Sequence[CategoryPrediction]
) -> TypeAccuracyResult:
    """Top-1 category accuracy restricted to correctly detected positives."""
    pairs = _paired_by_id(preds, truths)
    positives = [(p, t) for p, t in pairs if p.label == 1 and t.label == 1]
    if not positives:
        return TypeAccuracyResult(accuracy=0.0, true_positives=0, matches=0, defined=False)
    matches = sum(
        1 for p, t in positives if p.category is not None and p.category == t.category
    )
    return TypeAccuracyResult(
        accuracy=matches / len(positives),
        true_positives=len(positives),
        matches=matches,
        defined=True,
    )


def temporal_iou(a: TimeInterval, b: TimeInterval) -> float:
    """Intersection over union of two intervals; disjoint intervals score 0."""
    intersection = min(a.end_ms, b.end_ms) - max(a.start_ms, b.start_ms)
    if intersection <= 0:
        return 0.0
    union = a.duration_ms + b.duration_ms - intersection
    return intersection / union


def optimal_event_pairs(
    truth_events: Sequence[GroundedEvent], predicted_events: Sequence[GroundedEvent]
) -> tuple[tuple[int, int, float], ...]:
    """One-to-one pairing maximizing total IoU, as (truth_idx, pred_idx, iou).

    Uses the Hungarian solver; with unequal list lengths the shorter side is
    fully matched.  Zero-overlap pairs are kept so callers can apply their own
    cutoff.
    """
    if not truth_events or not predicted_events:
        return ()
    iou = np.empty((len(truth_events), len(predicted_events)))
    for i, truth in enumerate(truth_events):
        for j, pred in enumerate(predicted_events):
            iou[i, j] = temporal_iou(truth.interval, pred.interval)
    rows, cols = linear_sum_assignment(iou, maximize=True)
    return tuple(
        sorted((int(i), int(j), float(iou[i, j])) for i, j in zip(rows, cols))
    )


def _paired_videos(
    preds: Sequence[GroundedPrediction], truths: Sequence[GroundedPrediction]
) -> list[tuple[GroundedPrediction, GroundedPrediction]]:
    pred_table: dict[str, GroundedPrediction] = {}
    truth_table: dict[str, GroundedPrediction] = {}
    for item in preds:
        if item.media_id in pred_table:
            raise MetricInputError(f"duplicate prediction id {item.media_id!r}")
        pred_table[item.media_id] = item
    for item in truths:
        if item.media_id in truth_table:
            raise MetricInputError(f"duplicate truth id {item.media_id!r}")
        truth_table[item.media_id] = item
    if pred_table.keys() != truth_table.keys():
        missing = sorted(truth_table.keys() - pred_table.keys())
        extra = sorted(pred_table.keys() - truth_table.keys())
        raise MetricInputError(
            f"id mismatch: missing predictions {missing[:5]}, unknown ids {extra[:5]}"
        )
    return [(pred_table[key], truth_table[key]) for key in sorted(truth_table)]


@dataclass(frozen=True, slots=True)
class GroundingResult:
    recall_at: tuple[tuple[float, float], ...]
    miou: float
    ground_truth_events: int
    predicted_events: int
    paired_events: int
    defined: bool


def grounding_metrics(
    preds: Sequence[GroundedPrediction],
    truths: Sequence[GroundedPrediction],
    thresholds: Sequence[float] = (0.3, 0.5, 0.7),
) -> GroundingResult:
    """Recall@1 per threshold and mean IoU, pooled over all truth events.

    Each truth event's IoU is the one from the per-video max-total-IoU
    pairing; truth events left unpaired contribute 0.
    """
    videos = _paired_videos(preds, truths)
    paired_ious: list[float] = []
    predicted_total = 0
    paired_total = 0
    for pred, truth in videos:
        predicted_total += len(pred.events)
        ious = [0.0] * len(truth.events)
        for i, _, value in optimal_event_pairs(truth.events, pred.events):
            ious[i] = value
            if value > 0.0:
                paired_total += 1
        paired_ious.extend(ious)
    total = len(paired_ious)
    if total == 0:
        recall_at = tuple((float(alpha), 0.0) for alpha in thresholds)
        return GroundingResult(
            recall_at=recall_at,
            miou=0.0,
            ground_truth_events=0,
            predicted_events=predicted_total,
            paired_events=0,
            defined=False,
        )
    recall_at = tuple(
        (float(alpha), sum(1 for value in paired_ious if value >= alpha) / total)
        for alpha in thresholds
    )
    return GroundingResult(
        recall_at=recall_at,
        miou=sum(paired_ious) / total,
        ground_truth_events=total,
        predicted_events=predicted_total,
        paired_events=paired_total,
        defined=True,
    )


_TOKEN = re.compile(r"[\w']+")


def tokenize(text: str) -> list[str]:
    """Lower-case and split on non-word characters, keeping apostrophes."""
    return _TOKEN.findall(text.lower())


def _ngram_counts(tokens: Sequence[str], order: int) -> Counter:
    return Counter(
        tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1)
    )


def bleu4(hypothesis: str, reference: str, *, max_n: int = 4) -> float:
    """Sentence BLEU with uniform weights and brevity penalty.

    Higher-order precisions use add-one smoothing so short sentences stay
    scoreable; a zero unigram precision short-circuits to 0.
    """
    hyp = tokenize(hypothesis)
    ref = tokenize(reference)
    if not hyp or not ref:
        return 0.0
    log_precision_sum = 0.0
    for order in range(1, max_n + 1):
        reference_counts = _ngram_counts(ref, order)
        total = max(len(hyp) - order + 1, 0)
        matched = sum(
            min(count, reference_counts[gram])
            for gram, count in _ngram_counts(hyp, order).items()
        )
        if order == 1:
            if matched == 0:
                return 0.0
            precision = matched / total
        else:
            precision = (matched + 1) / (total + 1)
        log_precision_sum += math.log(precision) / max_n
    if len(hyp) > len(ref):
        brevity = 1.0
    else:
        brevity = math.exp(1.0 - len(ref) / len(hyp))
    return brevity * math.exp(log_precision_sum)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token in a:
        current = [0]
        for j, other in enumerate(b, start=1):
            if token == other:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[-1]))
        previous = current
    return previous[-1]


def rouge_l(hypothesis: str, reference: str, *, beta: float = 1.2) -> float:
    """LCS-based F-measure with recall-favoring beta."""
    hyp = tokenize(hypothesis)
    ref = tokenize(reference)
    if not hyp or not ref:
        return 0.0
    lcs = _lcs_length(hyp, ref)
    if lcs == 0:
        return 0.0
    recall = lcs / len(ref)
    precision = lcs / len(hyp)
    return (1.0 + beta**2) * recall * precision / (recall + beta**2 * precision)


def _alignment(hyp: Sequence[str], ref: Sequence[str]) -> list[tuple[int, int]]:
    """Exact-match one-to-one unigram pairs, walking the hypothesis left to
    right and preferring continuation of the current run to keep chunk counts
    low and deterministic."""
    reference_counts = Counter(ref)
    quota = {
        token: min(count, reference_counts[token])
        for token, count in Counter(hyp).items()
        if token in reference_counts
    }
    occurrences: dict[str, list[int]] = {}
    for j, token in enumerate(ref):
        occurrences.setdefault(token, []).append(j)
    used = [False] * len(ref)
    pairs: list[tuple[int, int]] = []
    for i, token in enumerate(hyp):
        if quota.get(token, 0) <= 0:
            continue
        j = None
        if pairs:
            last_i, last_j = pairs[-1]
            follow = last_j + 1
            if last_i == i - 1 and follow < len(ref) and not used[follow] and ref[follow] == token:
                j = follow
        if j is None:
            j = next(index for index in occurrences[token] if not used[index])
        used[j] = True
        quota[token] -= 1
        pairs.append((i, j))
    return pairs


def _chunk_count(pairs: Sequence[tuple[int, int]]) -> int:
    chunks = 0
    last: tuple[int, int] | None = None
    for i, j in pairs:
        if last is None or i != last[0] + 1 or j != last[1] + 1:
            chunks += 1
        last = (i, j)
    return chunks


def meteor(
    hypothesis: str, reference: str, *, gamma: float = 0.5, theta: float = 3.0
) -> float:
    """Unigram F-mean weighted toward recall, discounted for fragmentation.

    Matching is exact-form only; the fragmentation penalty applies even to
    identical strings (one chunk over m matches), so the score tops out just
    below 1.
    """
    hyp = tokenize(hypothesis)
    ref = tokenize(reference)
    if not hyp or not ref:
        return 0.0
    pairs = _alignment(hyp, ref)
    matched = len(pairs)
    if matched == 0:
        return 0.0
    precision = matched / len(hyp)
    recall = matched / len(ref)
    f_mean = 10.0 * precision * recall / (recall + 9.0 * precision)
    fragmentation = _chunk_count(pairs) / matched
    return f_mean * (1.0 - gamma * fragmentation**theta)


def _text_metric_for(config: MetricConfig) -> Callable[[str, str], float]:
    # config validation already restricts the name to "meteor"
    return lambda hyp, ref: meteor(
        hyp, ref, gamma=config.meteor_gamma, theta=config.meteor_theta
    )


@dataclass(frozen=True, slots=True)
class SodaResult:
    score: float
    per_video: tuple[tuple[str, float | None], ...]
    scored_videos: int
    defined: bool


def soda_m(
    preds: Sequence[GroundedPrediction],
    truths: Sequence[GroundedPrediction],
    config: MetricConfig = MetricConfig(),
) -> SodaResult:
    """Dense full-video score: per matched pair IoU times text similarity,
    normalized by truth events plus unmatched predictions, averaged over
    videos.

    Pairs come from the max-total-IoU assignment; only pairs with positive
    IoU count as matches.  Videos with no events on either side carry no
    signal and are skipped (score None); if every video is skipped the
    aggregate is 0 and ``defined`` is False.
    """
    text_metric = _text_metric_for(config)
    per_video: list[tuple[str, float | None]] = []
    total = 0.0
    scored = 0
    for pred, truth in _paired_videos(preds, truths):
        n_truth = len(truth.events)
        n_pred = len(pred.events)
        if n_truth == 0 and n_pred == 0:
            per_video.append((truth.media_id, None))
            continue
        matched = [
            (i, j, value)
            for i, j, value in optimal_event_pairs(truth.events, pred.events)
            if value > 0.0
        ]
        pair_sum = sum(
            value * text_metric(pred.events[j].reasoning, truth.events[i].reasoning)
            for i, j, value in matched
        )
        video_score = pair_sum / (n_truth + (n_pred - len(matched)))
        per_video.append((truth.media_id, video_score))
        total += video_score
        scored += 1
    return SodaResult(
        score=total / scored if scored else 0.0,
        per_video=tuple(per_video),
        scored_videos=scored,
        defined=scored > 0,
    )


@dataclass(frozen=True, slots=True)
class SegmentTruth:
    """Ground truth for one segment clip."""

    sample_id: str
    label: int
    category: InconsistencyCategory | None
    reasoning: str

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if self.label == 1 and self.category is None:
            raise ValueError(f"{self.sample_id}: inconsistent sample needs a category")
        if self.label == 0 and self.category is not None:
            raise ValueError(f"{self.sample_id}: consistent sample must not carry a category")


@dataclass(frozen=True, slots=True)
class VideoTruth:
    """Ground truth for one full video: label and its annotated events."""

    media_id: str
    label: int
    events: tuple[GroundedEvent, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if (self.label == 1) != bool(self.events):
            raise ValueError(
                f"{self.media_id}: label and event list disagree "
                f"(label={self.label}, events={len(self.events)})"
            )


@dataclass(frozen=True, slots=True)
class MetricReport:
    """All task scores in [0, 1] plus audit counts; serialized at x100."""

    task: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    fpr: float
    bleu4: float
    rouge_l: float
    meteor: float
    type_accuracy: float | None = None
    recall_at: tuple[tuple[float, float], ...] | None = None
    miou: float | None = None
    soda_m: float | None = None
    counts: tuple[tuple[str, int], ...] = ()
    flags: tuple[str, ...] = ()

    def to_json(self) -> dict:
        def scaled(value: float | None) -> float | None:
            return None if value is None else value * 100.0

        return {
            "task": self.task,
            "accuracy": scaled(self.accuracy),
            "type_accuracy": scaled(self.type_accuracy),
            "bleu4": scaled(self.bleu4),
            "rouge_l": scaled(self.rouge_l),
            "meteor": scaled(self.meteor),
            "recall_at": None
            if self.recall_at is None
            else {f"{alpha:g}": value * 100.0 for alpha, value in self.recall_at},
            "miou": scaled(self.miou),
            "soda_m": scaled(self.soda_m),
            "precision": scaled(self.precision),
            "recall": scaled(self.recall),
            "f1": scaled(self.f1),
            "fpr": scaled(self.fpr),
            "counts": dict(self.counts),
            "flags": list(self.flags),
        }


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def evaluate_segment_responses(
    truths: Sequence[SegmentTruth],
    responses: Mapping[str, str],
    config: MetricConfig = MetricConfig(),
) -> MetricReport:
    """Score raw segment-task answers against ground truth.

    Missing or unparseable answers become abstentions (negative label, empty
    reasoning).  Text quality is averaged over truly inconsistent samples,
    where a reference explanation exists.
    """
    parses = {}
    missing = 0
    for truth in truths:
        raw = responses.get(truth.sample_id)
        if raw is None:
            missing += 1
            raw = ""
        parses[truth.sample_id] = parse_segment_response(raw)
    detection = detection_metrics(
        [BinaryPrediction(t.sample_id, parses[t.sample_id].label) for t in truths],
        [BinaryPrediction(t.sample_id, t.label) for t in truths],
    )
    classification = classification_accuracy(
        [
            CategoryPrediction(
                t.sample_id, parses[t.sample_id].label, parses[t.sample_id].category
            )
            for t in truths
        ],
        [CategoryPrediction(t.sample_id, t.label, t.category) for t in truths],
    )
    references = [t for t in truths if t.label == 1]
    bleu_scores = []
    rouge_scores = []
    meteor_scores = []
    for truth in references:
        hypothesis = parses[truth.sample_id].reasoning
        bleu_scores.append(bleu4(hypothesis, truth.reasoning, max_n=config.bleu_max_n))
        rouge_scores.append(rouge_l(hypothesis, truth.reasoning, beta=config.rouge_beta))
        meteor_scores.append(
            meteor(
                hypothesis,
                truth.reasoning,
                gamma=config.meteor_gamma,
                theta=config.meteor_theta,
            )
        )
    flags = [f"{name}_undefined" for name in detection.undefined]
    if not classification.defined:
        flags.append("type_accuracy_undefined")
    if not references:
        flags.append("reasoning_no_references")
    if missing:
        flags.append("missing_predictions")
    abstentions = sum(1 for parse in parses.values() if parse.abstained)
    counts = (
        ("samples", len(truths)),
        ("true_positives", detection.true_positives),
        ("false_positives", detection.false_positives),
        ("true_negatives", detection.true_negatives),
        ("false_negatives", detection.false_negatives),
        ("classified_true_positives", classification.true_positives),
        ("category_matches", classification.matches),
        ("reasoning_references", len(references)),
        ("abstentions", abstentions),
        ("missing_predictions", missing),
    )
    return MetricReport(
        task="segment",
        accuracy=detection.accuracy,
        precision=detection.precision,
        recall=detection.recall,
        f1=detection.f1,
        fpr=detection.fpr,
        bleu4=_mean(bleu_scores),
        rouge_l=_mean(rouge_scores),
        meteor=_mean(meteor_scores),
        type_accuracy=classification.accuracy,
        counts=counts,
        flags=tuple(flags),
    )


def evaluate_fullvideo_responses(
    truths: Sequence[VideoTruth],
    responses: Mapping[str, str],
    config: MetricConfig = MetricConfig(),
) -> MetricReport:
    """Score raw full-video answers against ground truth.

    Detection uses the verdict line; grounding and the dense score use the
    extracted event lists.  Text quality is scored per truth event through
    the same positive-IoU pairing the dense score uses, with unpaired truth
    events scoring 0.
    """
    parses = {}
    missing = 0
    for truth in truths:
        raw = responses.get(truth.media_id)
        if raw is None:
            missing += 1
            raw = ""
        parses[truth.media_id] = parse_fullvideo_response(raw)
    detection = detection_metrics(
        [BinaryPrediction(t.media_id, parses[t.media_id].label) for t in truths],
        [BinaryPrediction(t.media_id, t.label) for t in truths],
    )
    predicted = [
        GroundedPrediction(t.media_id, parses[t.media_id].events) for t in truths
    ]
    reference = [GroundedPrediction(t.media_id, t.events) for t in truths]
    grounding = grounding_metrics(predicted, reference, config.iou_thresholds)
    bleu_scores = []
    rouge_scores = []
    meteor_scores = []
    for truth in truths:
        events = parses[truth.media_id].events
        matched_text = {}
        for i, j, value in optimal_event_pairs(truth.events, events):
            if value > 0.0:
                matched_text[i] = events[j].reasoning
        for i, event in enumerate(truth.events):
            hypothesis = matched_text.get(i, "")
            bleu_scores.append(
                bleu4(hypothesis, event.reasoning, max_n=config.bleu_max_n)
            )
            rouge_scores.append(
                rouge_l(hypothesis, event.reasoning, beta=config.rouge_beta)
            )
            meteor_scores.append(
                meteor(
                    hypothesis,
                    event.reasoning,
                    gamma=config.meteor_gamma,
                    theta=config.meteor_theta,
                )
            )
    dense = soda_m(predicted, reference, config)
    flags = [f"{name}_undefined" for name in detection.undefined]
    if not grounding.defined:
        flags.append("grounding_undefined")
    if not dense.defined:
        flags.append("soda_undefined")
    if missing:
        flags.append("missing_predictions")
    abstentions = sum(1 for parse in parses.values() if parse.abstained)
    dropped = sum(len(parse.dropped_lines) for parse in parses.values())
    counts = (
        ("videos", len(truths)),
        ("true_positives", detection.true_positives),
        ("false_positives", detection.false_positives),
        ("true_negatives", detection.true_negatives),
        ("false_negatives", detection.false_negatives),
        ("ground_truth_events", grounding.ground_truth_events),
        ("predicted_events", grounding.predicted_events),
        ("paired_events", grounding.paired_events),
        ("dropped_lines", dropped),
        ("abstentions", abstentions),
        ("missing_predictions", missing),
    )
    return MetricReport(
        task="full",
        accuracy=detection.accuracy,
        precision=detection.precision,
        recall=detection.recall,
        f1=detection.f1,
        fpr=detection.fpr,
        bleu4=_mean(bleu_scores),
        rouge_l=_mean(rouge_scores),
        meteor=_mean(meteor_scores),
        recall_at=grounding.recall_at,
        miou=grounding.miou,
        soda_m=dense.score,
        counts=counts,
        flags=tuple(flags),
    )
