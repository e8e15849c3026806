"""Render a metric report to PNG files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # headless renders only; never touch a display

import matplotlib.pyplot as plt

from .metrics import MetricReport

# Order mirrors the delimited report so the two artifacts read the same way.
_SCORE_KEYS = (
    "accuracy",
    "precision",
    "recall",
    "f1",
    "fpr",
    "type_accuracy",
    "bleu4",
    "rouge_l",
    "meteor",
    "miou",
    "soda_m",
)


def _bar(ax, names: list[str], values: list[float]) -> None:
    bars = ax.bar(names, values, color="#4878a8")
    for rect, value in zip(bars, values):
        ax.annotate(
            f"{value:.1f}",
            (rect.get_x() + rect.get_width() / 2, rect.get_height()),
            ha="center",
            va="bottom",
            fontsize=8,
        )


def render_report_figures(report: MetricReport, out_dir: str | Path) -> list[Path]:
    """Write score, confusion and (when present) grounding charts; return paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = report.to_json()
    written: list[Path] = []

    names = [key for key in _SCORE_KEYS if payload.get(key) is not None]
    values = [float(payload[key]) for key in names]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.9 * len(names)), 4.0))
    _bar(ax, names, values)
    ax.set_ylim(0, 112)
    ax.set_ylabel("score x100")
    ax.set_title(f"{payload['task']} task scores")
    ax.tick_params(axis="x", rotation=45)
    fig.tight_layout()
    path = out / "report_scores.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    counts = payload.get("counts", {})
    cells = (
        ("TP", "true_positives"),
        ("FP", "false_positives"),
        ("TN", "true_negatives"),
        ("FN", "false_negatives"),
    )
    confusion = [(label, counts[key]) for label, key in cells if key in counts]
    if confusion:
        fig, ax = plt.subplots(figsize=(4.5, 3.5))
        _bar(ax, [label for label, _ in confusion], [float(v) for _, v in confusion])
        ax.set_ylabel("samples")
        ax.set_title("detection confusion counts")
        top = max((v for _, v in confusion), default=1)
        ax.set_ylim(0, max(1.0, top * 1.2))
        fig.tight_layout()
        path = out / "report_confusion.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    recall_at = payload.get("recall_at") or {}
    if recall_at:
        alphas = sorted(recall_at, key=float)
        fig, ax = plt.subplots(figsize=(4.5, 3.5))
        ax.plot([float(a) for a in alphas], [recall_at[a] for a in alphas], marker="o")
        ax.set_xlabel("IoU threshold")
        ax.set_ylabel("recall x100")
        ax.set_ylim(-2, 105)
        ax.set_title("grounding recall vs. overlap threshold")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = out / "report_grounding.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    return written
