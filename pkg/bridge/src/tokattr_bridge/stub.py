"""Scripted classifier over the engine's builtin-model JSON format.

This is an independent reimplementation (stdlib only, no engine import):
it reads the same model description file the engine's builtin adapter
reads, whitespace-splits the incoming masked texts, and scores them. The
conformance tests drive both implementations over the same corpus and
demand agreement, so any divergence in file reading or scoring shows up
immediately.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence

KINDS = ("constant", "keyword-score", "keyword-softmax", "and-gate")


class StubClassifier:
    def __init__(self, spec: dict, model_name: str | None = None):
        kind = spec.get("kind")
        if kind not in KINDS:
            raise ValueError(f"unknown model kind {kind!r}")
        self.kind = kind
        self.classes = list(spec.get("classes") or [])
        if not self.classes:
            raise ValueError("model spec declares no classes")
        base = spec.get("base", [0.0] * len(self.classes))
        if isinstance(base, (int, float)):
            base = [float(base)] * len(self.classes)
        self.base = [float(b) for b in base]
        if len(self.base) != len(self.classes):
            raise ValueError("base vector length must equal the class count")
        self.weights = {
            cls: {tok: float(w) for tok, w in table.items()}
            for cls, table in (spec.get("weights") or {}).items()
        }
        self.triggers = list(spec.get("triggers") or [])
        self.target = spec.get("target") or self.classes[0]
        self.output_mode = spec.get("output_mode") or (
            "probability" if kind == "keyword-softmax" else "score"
        )
        self.model_name = model_name or spec.get("identity", f"stub-{kind}")

    @classmethod
    def from_file(cls, path: str | Path) -> "StubClassifier":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh), model_name=f"stub:{Path(path).name}")

    def predict(self, texts: Sequence[str]) -> list[list[float]]:
        return [self._score_text(text) for text in texts]

    def _score_text(self, text: str) -> list[float]:
        tokens = text.split()
        if self.kind == "constant":
            return list(self.base)
        if self.kind == "and-gate":
            present = set(tokens)
            fired = all(trigger in present for trigger in self.triggers)
            row = list(self.base)
            row[self.classes.index(self.target)] += 1.0 if fired else 0.0
            return row
        scores = []
        for cls, base in zip(self.classes, self.base):
            table = self.weights.get(cls, {})
            scores.append(base + sum(table.get(tok, 0.0) for tok in tokens))
        if self.kind == "keyword-score":
            return scores
        # keyword-softmax
        peak = max(scores)
        exps = [math.exp(s - peak) for s in scores]
        total = sum(exps)
        return [e / total for e in exps]
