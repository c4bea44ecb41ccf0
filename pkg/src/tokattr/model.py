"""Black-box classifier contract and deterministic builtin models.

Every explainer consumes a :class:`ModelAdapter`: masked token sequences
in, per-class score vectors out, with an evaluation counter that makes
budget claims measurable. Builtin models are exact float arithmetic with
no randomness, so oracle tests can assert tight tolerances.

A coalition is encoded as a boolean ``present`` vector. Hidden tokens are
substituted by the literal ``[MASK]`` token (sequence length preserved) or
dropped entirely when ``mask_mode="delete"``.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Dimension, TokenizedUtterance
from .errors import ValidationError

MASK_TOKEN = "[MASK]"

BUILTIN_KINDS = ("constant", "keyword-score", "keyword-softmax", "and-gate")


@dataclass(frozen=True)
class MaskedInput:
    """One coalition: the utterance plus a visibility flag per token."""

    utterance: TokenizedUtterance
    present: tuple[bool, ...]

    def __post_init__(self):
        if len(self.present) != len(self.utterance.tokens):
            raise ValidationError(
                f"present vector has {len(self.present)} flags for "
                f"{len(self.utterance.tokens)} tokens"
            )

    def visible_surfaces(self, mask_mode: str = "substitute") -> list[str]:
        if mask_mode == "delete":
            return [s for s, p in zip(self.utterance.surfaces, self.present) if p]
        return [s if p else MASK_TOKEN for s, p in zip(self.utterance.surfaces, self.present)]

    def text(self, mask_mode: str = "substitute") -> str:
        return " ".join(self.visible_surfaces(mask_mode))


class EvalCounter:
    """Monotone count of single-input model evaluations; thread-safe."""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def add(self, k: int) -> None:
        with self._lock:
            self._count += k

    @property
    def count(self) -> int:
        return self._count


class ModelAdapter:
    """Base adapter: maps batches of masked inputs to score vectors.

    Subclasses implement :meth:`_predict_masks`, which receives one shared
    utterance and a boolean matrix with one coalition per row. ``serialized``
    adapters (e.g. subprocess bridges) are called under a lock so at most one
    batch is in flight.
    """

    serialized = False

    def __init__(self, identity: str, dimension: Dimension, output_mode: str,
                 mask_mode: str = "substitute"):
        if output_mode not in ("probability", "score"):
            raise ValidationError(f"unknown output mode {output_mode!r}")
        if mask_mode not in ("substitute", "delete"):
            raise ValidationError(f"unknown mask mode {mask_mode!r}")
        self.identity = identity
        self.dimension = dimension
        self.output_mode = output_mode
        self.mask_mode = mask_mode
        self.eval_counter = EvalCounter()
        self._serial_lock = threading.Lock()

    # -- public API --------------------------------------------------------

    def predict_batch(self, inputs: Sequence[MaskedInput]) -> np.ndarray:
        """Score every masked input; returns (len(inputs), n_classes)."""
        if not inputs:
            return np.zeros((0, len(self.dimension.classes)))
        utterance = inputs[0].utterance
        for mi in inputs[1:]:
            if len(mi.present) != len(utterance.tokens):
                raise ValidationError("predict_batch inputs must share one utterance length")
        masks = np.array([mi.present for mi in inputs], dtype=bool)
        return self.predict_masks(utterance, masks)

    def predict_masks(self, utterance: TokenizedUtterance, masks: np.ndarray) -> np.ndarray:
        """Batch form used by the explainers: one bool row per coalition."""
        masks = np.asarray(masks, dtype=bool)
        if masks.ndim != 2 or masks.shape[1] != len(utterance.tokens):
            raise ValidationError("mask matrix shape does not match the utterance")
        if self.serialized:
            with self._serial_lock:
                out = self._predict_masks(utterance, masks)
        else:
            out = self._predict_masks(utterance, masks)
        out = np.asarray(out, dtype=np.float64)
        if out.shape != (masks.shape[0], len(self.dimension.classes)):
            raise ValidationError(
                f"adapter {self.identity!r} returned shape {out.shape}, expected "
                f"({masks.shape[0]}, {len(self.dimension.classes)})"
            )
        self.eval_counter.add(masks.shape[0])
        return out

    def explained_value(self, vector: np.ndarray, target_class: str) -> float:
        """Project a score vector onto one class: the game value v(S)."""
        return float(np.asarray(vector)[self.dimension.index_of(target_class)])

    def close(self) -> None:  # pragma: no cover - trivial default
        pass

    # -- to implement -------------------------------------------------------

    def _predict_masks(self, utterance: TokenizedUtterance, masks: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def explained_value(adapter: ModelAdapter, vector: np.ndarray, target_class: str) -> float:
    return adapter.explained_value(vector, target_class)


# --- builtin models --------------------------------------------------------


@dataclass(frozen=True)
class BuiltinSpec:
    kind: str
    classes: tuple[str, ...]
    base: tuple[float, ...]
    weights: dict = field(default_factory=dict)  # class -> {token: weight}
    triggers: tuple[str, ...] = ()
    target: str | None = None
    output_mode: str | None = None
    dimension_name: str = "dim"
    identity: str = "builtin"


class BuiltinAdapter(ModelAdapter):
    """Deterministic keyword/gate models used for verification and demos."""

    def __init__(self, spec: BuiltinSpec, mask_mode: str = "substitute"):
        self.spec = spec
        dimension = Dimension(name=spec.dimension_name, classes=spec.classes)
        output_mode = spec.output_mode or _default_mode(spec.kind)
        super().__init__(
            identity=f"{spec.identity}:{spec.kind}",
            dimension=dimension,
            output_mode=output_mode,
            mask_mode=mask_mode,
        )
        self._validate()

    def _validate(self):
        spec = self.spec
        if spec.kind not in BUILTIN_KINDS:
            raise ValidationError(f"unknown builtin model kind {spec.kind!r}")
        if len(spec.base) != len(spec.classes):
            raise ValidationError("base vector length must equal the class count")
        values = list(spec.base)
        for cls, table in spec.weights.items():
            if cls not in spec.classes:
                raise ValidationError(f"weights reference unknown class {cls!r}")
            values.extend(table.values())
        if any(not math.isfinite(v) for v in values):
            raise ValidationError("model weights and bases must be finite")
        if spec.kind == "constant" and self.output_mode == "probability":
            if abs(sum(spec.base) - 1.0) > 1e-6 or any(v < 0 or v > 1 for v in spec.base):
                raise ValidationError("constant probability model needs a normalized base")
        if spec.kind == "and-gate":
            if self.output_mode != "score":
                raise ValidationError("and-gate models are score mode only")
            if spec.target is not None and spec.target not in spec.classes:
                raise ValidationError(f"and-gate target {spec.target!r} not a class")
        if spec.kind == "keyword-softmax" and self.output_mode != "probability":
            raise ValidationError("keyword-softmax models are probability mode only")
        if spec.kind == "keyword-score" and self.output_mode != "score":
            raise ValidationError("keyword-score models are score mode only")

    def _keyword_scores(self, utterance: TokenizedUtterance, masks: np.ndarray) -> np.ndarray:
        # weight lookup over the masked sequence the model actually sees,
        # so a bridge stub reading the same spec scores identically
        classes = self.spec.classes
        token_w = np.zeros((len(utterance.tokens), len(classes)))
        mask_w = np.zeros(len(classes))
        for c, cls in enumerate(classes):
            table = self.spec.weights.get(cls, {})
            mask_w[c] = table.get(MASK_TOKEN, 0.0)
            for i, surface in enumerate(utterance.surfaces):
                token_w[i, c] = table.get(surface, 0.0)
        scores = np.asarray(self.spec.base, dtype=np.float64) + masks @ token_w
        if self.mask_mode == "substitute":
            scores = scores + np.outer((~masks).sum(axis=1), mask_w)
        return scores

    def _predict_masks(self, utterance: TokenizedUtterance, masks: np.ndarray) -> np.ndarray:
        kind = self.spec.kind
        if kind == "constant":
            return np.tile(np.asarray(self.spec.base, dtype=np.float64), (masks.shape[0], 1))
        if kind in ("keyword-score", "keyword-softmax"):
            scores = self._keyword_scores(utterance, masks)
            if kind == "keyword-score":
                return scores
            shifted = scores - scores.max(axis=1, keepdims=True)
            exp = np.exp(shifted)
            return exp / exp.sum(axis=1, keepdims=True)
        # and-gate: target class fires iff every trigger surface is visible
        target = self.spec.target or self.spec.classes[0]
        t_idx = self.dimension.index_of(target)
        fired = np.ones(masks.shape[0], dtype=bool)
        for trigger in self.spec.triggers:
            positions = [i for i, s in enumerate(utterance.surfaces) if s == trigger]
            if positions:
                fired &= masks[:, positions].any(axis=1)
            else:
                fired &= False
        out = np.tile(np.asarray(self.spec.base, dtype=np.float64), (masks.shape[0], 1))
        out[:, t_idx] += fired.astype(np.float64)
        return out


def _default_mode(kind: str) -> str:
    return "probability" if kind in ("keyword-softmax",) else "score"


def make_builtin(spec: dict | BuiltinSpec, mask_mode: str = "substitute") -> BuiltinAdapter:
    """Build a verification model from its JSON-style description."""
    if isinstance(spec, dict):
        spec = spec_from_dict(spec)
    return BuiltinAdapter(spec, mask_mode=mask_mode)


def spec_from_dict(obj: dict) -> BuiltinSpec:
    kind = obj.get("kind")
    if kind not in BUILTIN_KINDS:
        raise ValidationError(f"unknown builtin model kind {kind!r}")
    classes = tuple(obj.get("classes") or ())
    if not classes:
        raise ValidationError("model spec declares no classes")
    base = obj.get("base", [0.0] * len(classes))
    if isinstance(base, (int, float)):
        base = [float(base)] * len(classes)
    weights = {cls: dict(table) for cls, table in (obj.get("weights") or {}).items()}
    return BuiltinSpec(
        kind=kind,
        classes=classes,
        base=tuple(float(b) for b in base),
        weights=weights,
        triggers=tuple(obj.get("triggers") or ()),
        target=obj.get("target"),
        output_mode=obj.get("output_mode"),
        dimension_name=obj.get("dimension", "dim"),
        identity=obj.get("identity", "builtin"),
    )


def load_builtin_spec(path: str | Path) -> BuiltinSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON: {exc}") from None
    return spec_from_dict(obj)
