"""Layered cross-class heatmaps: spec construction and SVG/CSV rendering.

A word earns a heatmap column when it appears in the top-k lists of at
least half the classes (ceil(0.5 * n_classes)). Cells show the word's P/N
label in that class: positive ranks run dark-to-light green P1..P10,
negative ranks dark-to-light orange N1..N10, everything else stays white.
Rendering is plain SVG 1.1 text with deterministic byte output.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .aggregate import RankedWordList
from .errors import ValidationError

# fixed 10-step ramps (linear RGB interpolation; luminance strictly
# increases from rank 1 to rank 10)
GREEN_RAMP = (
    "#00441b", "#195831", "#336b47", "#4c7f5d", "#669373",
    "#7fa688", "#99ba9e", "#b2ceb4", "#cce1ca", "#e5f5e0",
)
ORANGE_RAMP = (
    "#7f2704", "#8d3c1a", "#9b5131", "#a96747", "#b77c5e",
    "#c69174", "#d4a68b", "#e2bca1", "#f0d1b8", "#fee6ce",
)

CELL = 30
LEFT_MARGIN = 110
TOP_MARGIN = 96
FONT = "monospace"


@dataclass(frozen=True)
class Palette:
    positive: tuple[str, ...] = GREEN_RAMP
    negative: tuple[str, ...] = ORANGE_RAMP

    def __post_init__(self):
        for ramp in (self.positive, self.negative):
            if len(ramp) != 10 or any(not _is_hex(c) for c in ramp):
                raise ValidationError("palette ramps must be 10 #rrggbb colors")

    def color_for(self, label: str) -> str | None:
        if len(label) < 2 or label[0] not in "PN":
            return None
        try:
            rank = int(label[1:])
        except ValueError:
            return None
        if not 1 <= rank <= 10:
            return None
        ramp = self.positive if label[0] == "P" else self.negative
        return ramp[rank - 1]


def _is_hex(color: str) -> bool:
    return (
        len(color) == 7
        and color[0] == "#"
        and all(c in "0123456789abcdef" for c in color[1:])
    )


def coverage_threshold(n_classes: int) -> int:
    """Minimum number of class lists a word must appear in: ceil(n/2)."""
    return math.ceil(0.5 * n_classes)


@dataclass(frozen=True)
class HeatmapSpec:
    dimension_name: str
    rows: tuple[str, ...]                      # class ids, declared order
    columns: tuple[str, ...]                   # qualifying words
    cells: Mapping[tuple[str, str], str]       # (class, word) -> P/N label


def build_heatmap(
    lists: Sequence[RankedWordList],
    class_order: Sequence[str],
    dimension_name: str = "dim",
) -> HeatmapSpec:
    """Filter words by class coverage and collect their per-class labels.

    Coverage counts membership in a class's ranked list regardless of
    label; cells only carry actual P/N labels. Columns are ordered by
    coverage (descending), then lexicographically. Zero qualifying words
    is a valid, empty heatmap.
    """
    by_class = {ranked.class_id: ranked for ranked in lists}
    if sorted(by_class) != sorted(class_order):
        raise ValidationError(
            f"need exactly one ranked list per class; got {sorted(by_class)} "
            f"for classes {sorted(class_order)}"
        )
    coverage: dict[str, int] = {}
    for ranked in lists:
        for entry in ranked.entries:
            coverage[entry.word] = coverage.get(entry.word, 0) + 1
    threshold = coverage_threshold(len(class_order))
    columns = sorted(
        (w for w, c in coverage.items() if c >= threshold),
        key=lambda w: (-coverage[w], w),
    )
    column_set = set(columns)
    cells = {}
    for cls in class_order:
        for entry in by_class[cls].entries:
            if entry.word in column_set and entry.label != "unlabeled":
                cells[(cls, entry.word)] = entry.label
    return HeatmapSpec(
        dimension_name=dimension_name,
        rows=tuple(class_order),
        columns=tuple(columns),
        cells=cells,
    )


def render_svg(spec: HeatmapSpec, palette: Palette | None = None) -> str:
    """Deterministic SVG document for the heatmap spec."""
    palette = palette or Palette()
    width = LEFT_MARGIN + max(1, len(spec.columns)) * CELL + 20
    height = TOP_MARGIN + max(1, len(spec.rows)) * CELL + 20
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{LEFT_MARGIN}" y="20" font-family="{FONT}" font-size="14" '
        f'fill="#000000">{_esc(spec.dimension_name)}</text>',
    ]
    for j, word in enumerate(spec.columns):
        x = LEFT_MARGIN + j * CELL + CELL // 2
        out.append(
            f'<text x="{x}" y="{TOP_MARGIN - 6}" font-family="{FONT}" font-size="11" '
            f'fill="#000000" text-anchor="start" '
            f'transform="rotate(-60 {x} {TOP_MARGIN - 6})">{_esc(word)}</text>'
        )
    for i, cls in enumerate(spec.rows):
        y = TOP_MARGIN + i * CELL
        out.append(
            f'<text x="{LEFT_MARGIN - 8}" y="{y + CELL // 2 + 4}" font-family="{FONT}" '
            f'font-size="12" fill="#000000" text-anchor="end">{_esc(cls)}</text>'
        )
        for j, word in enumerate(spec.columns):
            x = LEFT_MARGIN + j * CELL
            label = spec.cells.get((cls, word))
            color = palette.color_for(label) if label else None
            fill = color if color else "#ffffff"
            out.append(
                f'<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" '
                f'fill="{fill}" stroke="#cccccc"/>'
            )
            if label and color:
                text_fill = "#ffffff" if int(label[1:]) <= 4 else "#000000"
                out.append(
                    f'<text x="{x + CELL // 2}" y="{y + CELL // 2 + 4}" '
                    f'font-family="{FONT}" font-size="10" fill="{text_fill}" '
                    f'text-anchor="middle">{_esc(label)}</text>'
                )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_heatmap_svg(spec: HeatmapSpec, path: str | Path, palette: Palette | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_svg(spec, palette))


def write_heatmap_csv(spec: HeatmapSpec, path: str | Path) -> None:
    """Companion CSV carrying exactly the labelled cell set of the SVG."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["class", "word", "label"])
        for cls in spec.rows:
            for word in spec.columns:
                label = spec.cells.get((cls, word))
                if label:
                    writer.writerow([cls, word, label])


def read_heatmap_csv(path: str | Path) -> list[tuple[str, str, str]]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["class", "word", "label"]:
            raise ValidationError(f"{path}: expected header class,word,label")
        for row in reader:
            rows.append((row["class"], row["word"], row["label"]))
    return rows


def luminance(color: str) -> float:
    r = int(color[1:3], 16)
    g = int(color[3:5], 16)
    b = int(color[5:7], 16)
    return 0.2126 * r + 0.7152 * g + 0.0722 * b
