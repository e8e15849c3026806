#!/usr/bin/env python3
"""Emit src/constants.ts from the backend's serialization names.

The UI must never hand-maintain category or class strings; regenerate this
file whenever the backend vocabulary changes:

    python3 scripts/gen_constants.py src/constants.ts
"""

import sys

from avforge.review import REVIEW_KINDS
from avforge.taxonomy import InconsistencyCategory, SegmentClass, legal_categories


def label(name: str) -> str:
    """LIP_SYNC -> 'Lip sync'; class_2_voiceover -> 'Voiceover'."""
    words = name.split("_")
    if words[0] == "class" and words[1].isdigit():
        words = words[2:]
    return " ".join(words).capitalize()


def ts_list(values: list[str]) -> str:
    inner = ", ".join(f"'{v}'" for v in values)
    return f"[{inner}] as const"


def ts_record(pairs: list[tuple[str, str]]) -> str:
    lines = "\n".join(f"  '{k}': '{v}'," for k, v in pairs)
    return "{\n" + lines + "\n}"


def main() -> None:
    classes = [c.value for c in SegmentClass]
    categories = [c.name for c in InconsistencyCategory]
    legal = {
        c.value: sorted(cat.name for cat in legal_categories(c)) for c in SegmentClass
    }

    out = []
    out.append("// Generated by scripts/gen_constants.py from the backend vocabulary.")
    out.append("// Do not edit by hand; regenerate instead.")
    out.append("")
    out.append(f"export const SEGMENT_CLASSES = {ts_list(classes)};")
    out.append(f"export const CATEGORIES = {ts_list(categories)};")
    out.append(f"export const REVIEW_KINDS = {ts_list(list(REVIEW_KINDS))};")
    out.append("")
    out.append("export type SegmentClassName = (typeof SEGMENT_CLASSES)[number];")
    out.append("export type CategoryName = (typeof CATEGORIES)[number];")
    out.append("export type ReviewKind = (typeof REVIEW_KINDS)[number];")
    out.append("")
    out.append("export const CLASS_LABELS: Record<string, string> = " + ts_record(
        [(c, label(c)) for c in classes]
    ) + ";")
    out.append("")
    out.append("export const CATEGORY_LABELS: Record<string, string> = " + ts_record(
        [(c, label(c)) for c in categories]
    ) + ";")
    out.append("")
    out.append(
        "export const LEGAL_CATEGORIES: Record<string, readonly string[]> = {\n"
        + "\n".join(
            f"  '{cls}': {ts_list(cats)[: -len(' as const')]},"
            for cls, cats in legal.items()
        )
        + "\n};"
    )
    out.append("")
    text = "\n".join(out)

    if len(sys.argv) > 1:
        with open(sys.argv[1], "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
