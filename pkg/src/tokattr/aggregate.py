"""Aggregation of per-token attributions into per-class word statistics.

The central statistic is the per-word, per-class mean attribution across
every occurrence in the corpus. Ranking takes the top words by absolute
mean and labels up to ten positive (P1..P10) and ten negative (N1..N10)
entries in decreasing magnitude. Also here: task-document word frequency
counts and the weighted-F1 evaluation report.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Dimension, tokenize
from .errors import EmptyUtteranceError, ValidationError

# continuation prefix marking subword pieces in attribution records
# (e.g. "over", "##flow" merge into "overflow" with summed values)
PIECE_PREFIX = "##"


@dataclass
class WordCell:
    total: float = 0.0
    occurrences: int = 0
    utterances: set = field(default_factory=set)
    per_utterance: dict = field(default_factory=dict)  # id -> (sum, count)

    def add(self, value: float, utterance_id: str) -> None:
        self.total += value
        self.occurrences += 1
        self.utterances.add(utterance_id)
        s, c = self.per_utterance.get(utterance_id, (0.0, 0))
        self.per_utterance[utterance_id] = (s + value, c + 1)

    def mean(self, per_utterance_mean: bool = False) -> float:
        if per_utterance_mean:
            means = [s / c for s, c in self.per_utterance.values()]
            return sum(means) / len(means)
        return self.total / self.occurrences


@dataclass
class AggregateTable:
    """word -> class -> (avg value, occurrence count, utterance count)."""

    dimension: Dimension
    per_utterance_mean: bool = False
    cells: dict = field(default_factory=dict)  # word -> {class: WordCell}

    def add_occurrence(self, word: str, class_id: str, value: float, utterance_id: str) -> None:
        self.cells.setdefault(word, {}).setdefault(class_id, WordCell()).add(value, utterance_id)

    def avg(self, word: str, class_id: str) -> float:
        return self.cells[word][class_id].mean(self.per_utterance_mean)

    def words(self) -> list[str]:
        return sorted(self.cells)

    def rows(self) -> list[tuple[str, str, float, int, int]]:
        out = []
        for word in self.words():
            for class_id in self.dimension.classes:
                cell = self.cells[word].get(class_id)
                if cell is None:
                    continue
                out.append(
                    (word, class_id, cell.mean(self.per_utterance_mean),
                     cell.occurrences, len(cell.utterances))
                )
        return out


@dataclass(frozen=True)
class RankedWord:
    rank: int
    word: str
    avg_value: float
    label: str  # P1..P10, N1..N10, or "unlabeled"


@dataclass(frozen=True)
class RankedWordList:
    class_id: str
    entries: tuple[RankedWord, ...]


def merge_pieces(tokens: Sequence[str], values: Sequence[float]) -> list[tuple[str, float]]:
    """Fold ``##``-continuation pieces into their parent word, summing values."""
    merged: list[tuple[str, float]] = []
    for tok, val in zip(tokens, values):
        if tok.startswith(PIECE_PREFIX) and merged:
            prev_tok, prev_val = merged[-1]
            merged[-1] = (prev_tok + tok[len(PIECE_PREFIX):], prev_val + val)
        else:
            merged.append((tok, val))
    return merged


def aggregate_avg_shap(
    records: Iterable[Mapping],
    dimension: Dimension,
    per_utterance_mean: bool = False,
    merge_subwords: bool = True,
    gold_labels: Mapping[str, str] | None = None,
) -> AggregateTable:
    """Fold attribution records (one per utterance x class) into a table.

    Word keys are lowercased whole words; subword pieces are merged unless
    ``merge_subwords`` is off. When ``gold_labels`` is given, a record only
    feeds the table of its utterance's gold class (the narrower aggregation
    scope); by default every record feeds its own class's table.
    """
    table = AggregateTable(dimension=dimension, per_utterance_mean=per_utterance_mean)
    for rec in records:
        class_id = rec["class"]
        if class_id not in dimension.classes:
            raise ValidationError(
                f"record for utterance {rec['id']!r} carries class {class_id!r} "
                f"outside dimension {dimension.name!r}; aggregate one dimension at a time"
            )
        if gold_labels is not None and gold_labels.get(rec["id"]) != class_id:
            continue
        pairs = (
            merge_pieces(rec["tokens"], rec["phi"])
            if merge_subwords
            else list(zip(rec["tokens"], rec["phi"]))
        )
        for word, value in pairs:
            table.add_occurrence(word.lower(), class_id, float(value), rec["id"])
    return table


def rank_values(values: Mapping[str, float], class_id: str, k: int = 20) -> RankedWordList:
    """Top-k words by absolute value, P/N-labelled.

    Ties in magnitude break lexicographically by word. Zero values are
    neither positive nor negative and stay unlabeled.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    scored = sorted(values.items(), key=lambda wv: (-abs(wv[1]), wv[0]))
    top = scored[:k]

    labels = {}
    positives = [w for w, v in top if v > 0]
    negatives = [w for w, v in top if v < 0]
    for i, word in enumerate(positives[:10], start=1):
        labels[word] = f"P{i}"
    for i, word in enumerate(negatives[:10], start=1):
        labels[word] = f"N{i}"

    entries = tuple(
        RankedWord(rank=r, word=w, avg_value=v, label=labels.get(w, "unlabeled"))
        for r, (w, v) in enumerate(top, start=1)
    )
    return RankedWordList(class_id=class_id, entries=entries)


def rank_top_words(table: AggregateTable, class_id: str, k: int = 20) -> RankedWordList:
    """Rank a class's words straight from the aggregate table."""
    if class_id not in table.dimension.classes:
        raise ValidationError(f"class {class_id!r} not in dimension {table.dimension.name!r}")
    values = {
        word: cells[class_id].mean(table.per_utterance_mean)
        for word, cells in table.cells.items()
        if class_id in cells
    }
    return rank_values(values, class_id, k)


def min_ratio_diagnostic(ranked: RankedWordList) -> float:
    """|smallest| / |largest| over the ranked list; gauges top-k coverage."""
    if not ranked.entries:
        raise ValidationError("ranked word list is empty")
    first = abs(ranked.entries[0].avg_value)
    last = abs(ranked.entries[-1].avg_value)
    if first == 0.0:
        return 1.0  # all-zero list: every entry ties the head
    return last / first


def task_text_frequency(words: Sequence[str], document: str) -> dict[str, int]:
    """Whole-word counts of each query word in the document, tokenizer-aligned."""
    try:
        doc_tokens = [t.surface for t in tokenize(document)]
    except EmptyUtteranceError:
        doc_tokens = []
    counts = {w.lower(): 0 for w in words}
    for tok in doc_tokens:
        if tok in counts:
            counts[tok] += 1
    return counts


# --- evaluation -------------------------------------------------------------


@dataclass(frozen=True)
class ClassMetrics:
    class_id: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    per_class: tuple[ClassMetrics, ...]
    weighted_f1: float


def weighted_f1(gold: Sequence[str], predicted: Sequence[str], dimension: Dimension) -> EvalReport:
    """Per-class precision/recall/F1 (0/0 -> 0) and support-weighted F1."""
    if len(gold) != len(predicted) or not gold:
        raise ValidationError("gold and predicted label lists must be equal-length and non-empty")
    classes = dimension.classes
    for label in list(gold) + list(predicted):
        if label not in classes:
            raise ValidationError(f"label {label!r} not in dimension {dimension.name!r}")

    per_class = []
    weighted_sum = 0.0
    total_support = 0
    for cls in classes:
        tp = sum(1 for g, p in zip(gold, predicted) if g == cls and p == cls)
        fp = sum(1 for g, p in zip(gold, predicted) if g != cls and p == cls)
        fn = sum(1 for g, p in zip(gold, predicted) if g == cls and p != cls)
        support = tp + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class.append(ClassMetrics(cls, precision, recall, f1, support))
        weighted_sum += support * f1
        total_support += support
    return EvalReport(
        per_class=tuple(per_class),
        weighted_f1=weighted_sum / total_support if total_support else 0.0,
    )


# --- CSV formats -------------------------------------------------------------


def write_table_csv(table: AggregateTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["word", "class", "avg_shap", "occurrences", "utterances"])
        for word, class_id, avg, occ, utt in table.rows():
            writer.writerow([word, class_id, repr(avg), occ, utt])


def read_table_csv(path: str | Path, dimension: Dimension) -> list[tuple[str, str, float, int, int]]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["word", "class", "avg_shap", "occurrences", "utterances"]
        if reader.fieldnames != expected:
            raise ValidationError(f"{path}: expected header {','.join(expected)}")
        for row in reader:
            if row["class"] not in dimension.classes:
                raise ValidationError(f"{path}: class {row['class']!r} not in dimension")
            rows.append(
                (row["word"], row["class"], float(row["avg_shap"]),
                 int(row["occurrences"]), int(row["utterances"]))
            )
    return rows


def write_ranked_csv(lists: Sequence[RankedWordList], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["class", "rank", "word", "avg_shap", "label"])
        for ranked in lists:
            for entry in ranked.entries:
                writer.writerow(
                    [ranked.class_id, entry.rank, entry.word, repr(entry.avg_value), entry.label]
                )


def read_ranked_csv(path: str | Path) -> dict[str, RankedWordList]:
    by_class: dict[str, list[RankedWord]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["class", "rank", "word", "avg_shap", "label"]
        if reader.fieldnames != expected:
            raise ValidationError(f"{path}: expected header {','.join(expected)}")
        for row in reader:
            by_class.setdefault(row["class"], []).append(
                RankedWord(
                    rank=int(row["rank"]),
                    word=row["word"],
                    avg_value=float(row["avg_shap"]),
                    label=row["label"],
                )
            )
    return {
        cls: RankedWordList(class_id=cls, entries=tuple(sorted(entries, key=lambda e: e.rank)))
        for cls, entries in by_class.items()
    }


def write_eval_csv(report: EvalReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["class", "precision", "recall", "f1", "support"])
        for m in report.per_class:
            writer.writerow([m.class_id, repr(m.precision), repr(m.recall), repr(m.f1), m.support])
        writer.writerow(["weighted_f1", "", "", repr(report.weighted_f1), ""])
