"""Human-review gate for planned strategies and constructed clips.

Items are reviewed in enqueue-order batches; a batch passes while fewer than
``flag_threshold`` of its items are rejected.  Only approved items whose batch
is passing are released for dispatch.  All state changes append to a JSON-lines
event log that is replayed on startup, so the gate survives restarts and stays
auditable.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, replace
from itertools import combinations
from pathlib import Path

REVIEW_KINDS = ("strategy", "video")
_STATUSES = ("pending", "approved", "rejected")
_VERDICT_ALIASES = {
    "approve": "approved",
    "approved": "approved",
    "reject": "rejected",
    "rejected": "rejected",
}


class ReviewError(Exception):
    """Base class for review-gate failures."""


class UnknownItemError(ReviewError):
    """The referenced item id is not in the queue."""


class DecisionConflictError(ReviewError):
    """The item already carries a different decision."""


class InvalidVerdictError(ReviewError):
    """The verdict is neither an approval nor a rejection."""


@dataclass(frozen=True, slots=True)
class ReviewItem:
    """One reviewable unit: a planned strategy or a constructed clip."""

    item_id: str
    kind: str
    payload: dict
    category: str = ""
    status: str = "pending"
    notes: str = ""
    reviewer: str = ""
    decision_token: str = ""

    def __post_init__(self) -> None:
        if not self.item_id:
            raise ValueError("item_id must be non-empty")
        if self.kind not in REVIEW_KINDS:
            raise ValueError(f"kind must be one of {REVIEW_KINDS}, got {self.kind!r}")
        if self.status not in _STATUSES:
            raise ValueError(f"invalid status {self.status!r}")

    def to_json(self) -> dict:
        return {
            "item_id": self.item_id,
            "kind": self.kind,
            "payload": self.payload,
            "category": self.category,
            "status": self.status,
            "notes": self.notes,
            "reviewer": self.reviewer,
            "decision_token": self.decision_token,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ReviewItem":
        return cls(
            item_id=str(data["item_id"]),
            kind=str(data["kind"]),
            payload=dict(data["payload"]),
            category=str(data.get("category", "")),
            status=str(data.get("status", "pending")),
            notes=str(data.get("notes", "")),
            reviewer=str(data.get("reviewer", "")),
            decision_token=str(data.get("decision_token", "")),
        )


@dataclass(frozen=True, slots=True)
class BatchStats:
    """Accounting for one enqueue-order batch of a single kind."""

    kind: str
    index: int
    total: int
    decided: int
    approved: int
    flagged: int
    passed: bool
    complete: bool
    category_counts: tuple[tuple[str, int], ...] = ()

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "index": self.index,
            "total": self.total,
            "decided": self.decided,
            "approved": self.approved,
            "flagged": self.flagged,
            "passed": self.passed,
            "complete": self.complete,
            "category_counts": dict(self.category_counts),
        }


def normalize_verdict(verdict: str) -> str:
    try:
        return _VERDICT_ALIASES[verdict.strip().lower()]
    except (KeyError, AttributeError):
        raise InvalidVerdictError(f"verdict must be approve or reject, got {verdict!r}")


class ReviewQueue:
    """Review state machine with an optional persistent event log.

    Mutations are serialized through one lock; readers snapshot under the same
    lock, so every observer sees a consistent state.
    """

    def __init__(
        self,
        log_path: str | Path | None = None,
        batch_size: int = 50,
        flag_threshold: int = 3,
    ) -> None:
        if batch_size <= 0:
            raise ValueError("batch_size must be positive")
        if not 0 < flag_threshold < batch_size:
            raise ValueError("flag_threshold must lie strictly between 0 and batch_size")
        self.batch_size = batch_size
        self.flag_threshold = flag_threshold
        self._lock = threading.Lock()
        self._items: dict[str, ReviewItem] = {}
        self._order: list[str] = []
        self._agreement: dict[str, dict[str, str]] = {}
        self._log_path = Path(log_path) if log_path is not None else None
        if self._log_path is not None and self._log_path.exists():
            self._replay(self._log_path)

    # -- persistence ---------------------------------------------------------

    def _append_event(self, record: dict) -> None:
        if self._log_path is None:
            return
        self._log_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self._log_path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, sort_keys=True) + "\n")

    def _replay(self, path: Path) -> None:
        with open(path, encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                event = record.get("event")
                if event == "enqueue":
                    self._apply_enqueue(ReviewItem.from_json(record["item"]))
                elif event == "decision":
                    self._apply_decision(
                        record["item_id"],
                        record["verdict"],
                        record.get("notes", ""),
                        record.get("reviewer", ""),
                        record.get("token", ""),
                    )
                elif event == "agreement":
                    self._apply_agreement(
                        record["item_id"], record["annotator"], record["label"]
                    )
                else:
                    raise ValueError(f"line {line_number}: unknown event {event!r}")

    # -- mutations -----------------------------------------------------------

    def _apply_enqueue(self, item: ReviewItem) -> None:
        if item.item_id in self._items:
            raise ValueError(f"duplicate item id {item.item_id!r}")
        self._items[item.item_id] = item
        self._order.append(item.item_id)

    def enqueue(self, item: ReviewItem) -> None:
        with self._lock:
            self._apply_enqueue(item)
            self._append_event({"event": "enqueue", "item": item.to_json(), "ts": time.time()})

    def enqueue_batch(self, items: list[ReviewItem]) -> None:
        for item in items:
            self.enqueue(item)

    def _apply_decision(
        self, item_id: str, verdict: str, notes: str, reviewer: str, token: str
    ) -> ReviewItem:
        status = normalize_verdict(verdict)
        item = self._items.get(item_id)
        if item is None:
            raise UnknownItemError(f"unknown item {item_id!r}")
        if item.status != "pending":
            # a retry carrying the original token is the same decision
            if token and token == item.decision_token and status == item.status:
                return item
            raise DecisionConflictError(
                f"item {item_id!r} already {item.status} by {item.reviewer!r}"
            )
        decided = replace(
            item, status=status, notes=notes, reviewer=reviewer, decision_token=token
        )
        self._items[item_id] = decided
        return decided

    def decide(
        self,
        item_id: str,
        verdict: str,
        notes: str = "",
        reviewer: str = "",
        token: str = "",
    ) -> ReviewItem:
        """Record one decision; repeat submissions with the same token are
        answered with the stored decision instead of a conflict."""
        with self._lock:
            before = self._items.get(item_id)
            item = self._apply_decision(item_id, verdict, notes, reviewer, token)
            if before is not None and before.status == "pending":
                self._append_event(
                    {
                        "event": "decision",
                        "item_id": item_id,
                        "verdict": item.status,
                        "notes": notes,
                        "reviewer": reviewer,
                        "token": token,
                        "ts": time.time(),
                    }
                )
            return item

    def auto_approve_pending(self, reviewer: str = "auto-approve") -> int:
        """Approve every pending item; used by hermetic runs, and recorded with
        a non-human reviewer name."""
        approved = 0
        for item in self.items(status="pending"):
            self.decide(item.item_id, "approve", reviewer=reviewer)
            approved += 1
        return approved

    def _apply_agreement(self, item_id: str, annotator: str, label: str) -> None:
        if item_id not in self._items:
            raise UnknownItemError(f"unknown item {item_id!r}")
        if not annotator:
            raise ValueError("annotator must be non-empty")
        self._agreement.setdefault(item_id, {})[annotator] = str(label)

    def record_agreement_label(self, item_id: str, annotator: str, label: str) -> None:
        """Store a non-binding label used only for inter-annotator agreement."""
        with self._lock:
            self._apply_agreement(item_id, annotator, label)
            self._append_event(
                {
                    "event": "agreement",
                    "item_id": item_id,
                    "annotator": annotator,
                    "label": str(label),
                    "ts": time.time(),
                }
            )

    # -- queries -------------------------------------------------------------

    def get(self, item_id: str) -> ReviewItem:
        with self._lock:
            item = self._items.get(item_id)
        if item is None:
            raise UnknownItemError(f"unknown item {item_id!r}")
        return item

    def items(
        self,
        kind: str | None = None,
        status: str | None = None,
        offset: int = 0,
        limit: int | None = None,
    ) -> list[ReviewItem]:
        with self._lock:
            selected = [self._items[item_id] for item_id in self._order]
        if kind is not None:
            selected = [item for item in selected if item.kind == kind]
        if status is not None:
            selected = [item for item in selected if item.status == status]
        if offset:
            selected = selected[offset:]
        if limit is not None:
            selected = selected[:limit]
        return selected

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)

    def batch_stats(self, kind: str | None = None) -> list[BatchStats]:
        """Per-batch accounting in enqueue order, chunked per kind."""
        kinds = REVIEW_KINDS if kind is None else (kind,)
        stats = []
        for current in kinds:
            members = self.items(kind=current)
            for index in range(0, len(members), self.batch_size):
                chunk = members[index : index + self.batch_size]
                decided = [item for item in chunk if item.status != "pending"]
                flagged = sum(1 for item in chunk if item.status == "rejected")
                approved = [item for item in chunk if item.status == "approved"]
                counts: dict[str, int] = {}
                for item in approved:
                    counts[item.category] = counts.get(item.category, 0) + 1
                stats.append(
                    BatchStats(
                        kind=current,
                        index=index // self.batch_size,
                        total=len(chunk),
                        decided=len(decided),
                        approved=len(approved),
                        flagged=flagged,
                        passed=flagged < self.flag_threshold,
                        complete=len(decided) == len(chunk),
                        category_counts=tuple(sorted(counts.items())),
                    )
                )
        return stats

    def approved_category_counts(self, kind: str | None = None) -> dict[str, int]:
        """Approved-item histogram for the category balance monitor."""
        counts: dict[str, int] = {}
        for item in self.items(kind=kind, status="approved"):
            counts[item.category] = counts.get(item.category, 0) + 1
        return counts

    def dispatchable(self, kind: str = "strategy") -> list[ReviewItem]:
        """Approved items whose batch is passing; failing batches hold all
        their items back regardless of individual approval."""
        passing = {
            stats.index for stats in self.batch_stats(kind=kind) if stats.passed
        }
        members = self.items(kind=kind)
        released = []
        for position, item in enumerate(members):
            if item.status != "approved":
                continue
            if position // self.batch_size in passing:
                released.append(item)
        return released

    def failed_batches(self, kind: str | None = None) -> list[BatchStats]:
        """Batches that crossed the flag threshold and need prompt revision."""
        return [stats for stats in self.batch_stats(kind=kind) if not stats.passed]

    # -- agreement -----------------------------------------------------------

    def agreement_labels(self) -> dict[str, dict[str, str]]:
        with self._lock:
            return {item: dict(labels) for item, labels in self._agreement.items()}

    def cohens_kappa(self) -> float | None:
        """Chance-corrected agreement averaged over annotator pairs.

        Pairs without commonly labelled items are skipped; returns None when
        no pair overlaps.
        """
        labels = self.agreement_labels()
        per_annotator: dict[str, dict[str, str]] = {}
        for item_id, votes in labels.items():
            for annotator, label in votes.items():
                per_annotator.setdefault(annotator, {})[item_id] = label
        kappas = []
        for first, second in combinations(sorted(per_annotator), 2):
            common = sorted(per_annotator[first].keys() & per_annotator[second].keys())
            if not common:
                continue
            total = len(common)
            observed = (
                sum(
                    1
                    for item_id in common
                    if per_annotator[first][item_id] == per_annotator[second][item_id]
                )
                / total
            )
            classes = {per_annotator[first][i] for i in common} | {
                per_annotator[second][i] for i in common
            }
            expected = 0.0
            for label in classes:
                share_first = (
                    sum(1 for i in common if per_annotator[first][i] == label) / total
                )
                share_second = (
                    sum(1 for i in common if per_annotator[second][i] == label) / total
                )
                expected += share_first * share_second
            if expected >= 1.0:
                kappas.append(1.0 if observed >= 1.0 else 0.0)
            else:
                kappas.append((observed - expected) / (1.0 - expected))
        if not kappas:
            return None
        return sum(kappas) / len(kappas)
