"""Embedding-based screening of high-contribution words.

A word that pushes a class strongly but sits far (in cosine terms) from
every anchor word of that class is a candidate spurious contributor. The
store reads the plain word2vec text format, so vectors exported from any
embedding package can be dropped in.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .aggregate import RankedWordList
from .errors import ValidationError


@dataclass
class EmbeddingStore:
    vectors: dict
    dimensionality: int

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def get(self, word: str) -> np.ndarray | None:
        return self.vectors.get(word)


def load_vectors(path: str | Path) -> EmbeddingStore:
    """Read word2vec text format: header ``count dim``, then ``word v1 .. vd``."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValidationError(f"{path}: malformed word2vec header {header!r}")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise ValidationError(f"{path}: malformed word2vec header {header!r}") from None
        if count < 0 or dim < 1:
            raise ValidationError(f"{path}: malformed word2vec header {header!r}")
        vectors: dict[str, np.ndarray] = {}
        read = 0
        for line_num, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            if read == count:
                raise ValidationError(f"{path}: more vector lines than the declared {count}")
            parts = line.rstrip("\n").split(" ")
            word = parts[0]
            if len(parts) - 1 != dim:
                raise ValidationError(
                    f"{path}: line {line_num} has {len(parts) - 1} values, expected {dim}"
                )
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError:
                raise ValidationError(f"{path}: line {line_num} has a non-numeric value") from None
            if word in vectors:
                warnings.warn(f"duplicate word {word!r} in {path}; last entry wins")
            vectors[word] = vec
            read += 1
        if read != count:
            raise ValidationError(f"{path}: declared {count} vectors but found {read}")
    return EmbeddingStore(vectors=vectors, dimensionality=dim)


def cosine(store: EmbeddingStore, word_a: str, word_b: str) -> float:
    """Cosine similarity of two stored words, clamped to [-1, 1]."""
    a = store.get(word_a)
    b = store.get(word_b)
    if a is None:
        raise ValidationError(f"word {word_a!r} not in the embedding store")
    if b is None:
        raise ValidationError(f"word {word_b!r} not in the embedding store")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        zero = word_a if norm_a == 0.0 else word_b
        raise ValidationError(f"word {zero!r} has a zero vector")
    value = float(a @ b) / (norm_a * norm_b)
    return max(-1.0, min(1.0, value))


@dataclass(frozen=True)
class SpuriousnessRow:
    class_id: str
    word: str
    anchor: str       # best anchor, or "" when none applies
    best_cosine: float | None
    flag: str         # ok | spurious-candidate | no-vector | no-anchor


def spuriousness_report(
    lists: Sequence[RankedWordList],
    anchors: Mapping[str, Sequence[str]],
    store: EmbeddingStore,
    threshold: float,
) -> list[SpuriousnessRow]:
    """Score every positively labelled word against its class anchors.

    The score is the best cosine over the class's anchor words; scores
    under the threshold mark candidate spurious contributors. Words (or
    whole anchor sets) without vectors are reported, not errors.
    """
    if not -1.0 <= threshold <= 1.0:
        raise ValidationError("threshold must lie in [-1, 1]")
    rows: list[SpuriousnessRow] = []
    for ranked in lists:
        class_anchors = [a for a in anchors.get(ranked.class_id, []) if a in store]
        for entry in ranked.entries:
            if not entry.label.startswith("P"):
                continue
            if not class_anchors:
                rows.append(SpuriousnessRow(ranked.class_id, entry.word, "", None, "no-anchor"))
                continue
            if entry.word not in store:
                rows.append(SpuriousnessRow(ranked.class_id, entry.word, "", None, "no-vector"))
                continue
            best_anchor = ""
            best = -2.0
            for anchor in class_anchors:
                value = cosine(store, entry.word, anchor)
                if value > best:
                    best, best_anchor = value, anchor
            flag = "spurious-candidate" if best < threshold else "ok"
            rows.append(SpuriousnessRow(ranked.class_id, entry.word, best_anchor, best, flag))
    return rows


def write_spuriousness_csv(rows: Sequence[SpuriousnessRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["class", "word", "anchor", "best_cosine", "flag"])
        for row in rows:
            writer.writerow(
                [row.class_id, row.word, row.anchor,
                 "" if row.best_cosine is None else repr(row.best_cosine), row.flag]
            )
