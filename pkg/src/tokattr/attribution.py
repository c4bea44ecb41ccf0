"""Per-token attribution engines over coalition games.

Four methods shared by one coalition-value cache per utterance:

* ``exact`` - full 2**n enumeration of the Shapley formula (oracle);
* ``owen`` - exact Owen value: every leaf ordering the partition tree
  permits, averaged (oracle, exponential in tree depth);
* ``partition`` - fast recursive two-context scheme with residual
  redistribution; at most 2n+1 distinct coalition evaluations;
* ``permutation`` - seeded antithetic permutation sampling.

All methods are multi-output: one pass computes attributions for every
class of the adapter's dimension from the same cached evaluations.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .corpus import TokenizedUtterance
from .errors import AdapterFailure, CapExceededError, ValidationError
from .model import ModelAdapter
from .rng import GENERATOR_NAME, SplitMix64, derive_seed
from .trees import PartitionTree, TreeNode, build_tree

EXACT_CAP_DEFAULT = 20
OWEN_CAP_DEFAULT = 12
MAX_BATCH = 8192

METHODS = ("exact", "owen", "partition", "permutation")


@dataclass(frozen=True)
class AttributionResult:
    """Per-class token attributions for one utterance.

    ``phi`` has shape (n_tokens, n_classes); ``base`` holds v(empty) per
    class and ``full`` v(all-visible), so efficiency is checkable without
    re-querying the model.
    """

    utterance_id: str
    method: str
    tokens: tuple[str, ...]
    classes: tuple[str, ...]
    base: np.ndarray
    phi: np.ndarray
    full: np.ndarray
    model_evals: int
    seed: int | None = None

    def phi_for(self, class_id: str) -> np.ndarray:
        return self.phi[:, self.classes.index(class_id)]

    def base_for(self, class_id: str) -> float:
        return float(self.base[self.classes.index(class_id)])

    def efficiency_gap(self) -> float:
        return float(np.max(np.abs(self.phi.sum(axis=0) + self.base - self.full)))


class CoalitionCache:
    """Per-utterance memo of coalition values, keyed by visibility bitmask.

    Masks are Python ints (bit i set = token i visible), so utterances
    longer than 64 tokens work. New masks are evaluated in batches.
    """

    def __init__(self, adapter: ModelAdapter, utterance: TokenizedUtterance):
        self.adapter = adapter
        self.utterance = utterance
        self.n = len(utterance.tokens)
        self._index: dict[int, int] = {}
        self._values = np.zeros((0, len(adapter.dimension.classes)))

    @property
    def distinct_evals(self) -> int:
        return len(self._index)

    @property
    def values(self) -> np.ndarray:
        return self._values

    def ensure(self, masks: Iterable[int]) -> None:
        # dedupe while preserving first-seen order
        new = [m for m in dict.fromkeys(masks) if m not in self._index]
        if not new:
            return
        rows = np.array(
            [[bool((m >> i) & 1) for i in range(self.n)] for m in new], dtype=bool
        )
        chunks = []
        for start in range(0, len(new), MAX_BATCH):
            chunks.append(self.adapter.predict_masks(self.utterance, rows[start : start + MAX_BATCH]))
        values = np.vstack(chunks) if chunks else np.zeros((0, self._values.shape[1]))
        offset = len(self._index)
        for k, m in enumerate(new):
            self._index[m] = offset + k
        self._values = np.vstack([self._values, values])

    def row(self, mask: int) -> int:
        return self._index[mask]

    def value(self, mask: int) -> np.ndarray:
        return self._values[self._index[mask]]

    def rows(self, masks: Sequence[int]) -> np.ndarray:
        return np.fromiter((self._index[m] for m in masks), dtype=np.int64, count=len(masks))


def _check_target(adapter: ModelAdapter, target_class: str | None) -> None:
    if target_class is not None:
        adapter.dimension.index_of(target_class)


def exact_shapley(
    adapter: ModelAdapter,
    utterance: TokenizedUtterance,
    target_class: str | None = None,
    cap: int = EXACT_CAP_DEFAULT,
) -> AttributionResult:
    """Exact Shapley values by full coalition enumeration (2**n evaluations)."""
    _check_target(adapter, target_class)
    n = len(utterance.tokens)
    if n > cap:
        raise CapExceededError("exact", n, cap)
    size = 1 << n
    bit_cols = np.arange(n, dtype=np.int64)
    values = np.empty((size, len(adapter.dimension.classes)))
    for start in range(0, size, MAX_BATCH):
        masks = np.arange(start, min(start + MAX_BATCH, size), dtype=np.int64)
        rows = ((masks[:, None] >> bit_cols) & 1).astype(bool)
        values[start : start + len(masks)] = adapter.predict_masks(utterance, rows)
    phi = kernels.exact_combine(values, n)
    return AttributionResult(
        utterance_id=utterance.id,
        method="exact",
        tokens=utterance.surfaces,
        classes=adapter.dimension.classes,
        base=values[0].copy(),
        phi=phi,
        full=values[-1].copy(),
        model_evals=size,
    )


def _orderings(node: TreeNode) -> np.ndarray:
    """All leaf orderings reachable by independently swapping children."""
    if node.is_leaf:
        return np.array([[node.leaf]], dtype=np.int64)
    left = _orderings(node.left)
    right = _orderings(node.right)
    lr = np.hstack([np.repeat(left, len(right), axis=0), np.tile(right, (len(left), 1))])
    rl = np.hstack([np.repeat(right, len(left), axis=0), np.tile(left, (len(right), 1))])
    return np.vstack([lr, rl])


def owen_exact(
    adapter: ModelAdapter,
    utterance: TokenizedUtterance,
    target_class: str | None = None,
    tree: PartitionTree | None = None,
    cap: int = OWEN_CAP_DEFAULT,
) -> AttributionResult:
    """Exact Owen value for the hierarchy: mean marginal over permitted orderings."""
    _check_target(adapter, target_class)
    n = len(utterance.tokens)
    if n > cap:
        raise CapExceededError("owen", n, cap)
    if tree is None:
        tree = build_tree(utterance)
    orders = _orderings(tree.root)
    prefixes = np.bitwise_or.accumulate(np.int64(1) << orders, axis=1)

    cache = CoalitionCache(adapter, utterance)
    distinct = [0] + sorted(set(int(m) for m in prefixes.ravel()))
    cache.ensure(distinct)

    # dense mask -> cache row lookup (n <= cap keeps this small)
    row_of = np.zeros(1 << n, dtype=np.int64)
    for m in distinct:
        row_of[m] = cache.row(m)
    step_rows = np.concatenate(
        [np.zeros((len(orders), 1), dtype=np.int64), row_of[prefixes]], axis=1
    )
    step_values = cache.values[step_rows]
    phi = kernels.perm_accumulate(orders, step_values, n) / len(orders)
    return AttributionResult(
        utterance_id=utterance.id,
        method="owen",
        tokens=utterance.surfaces,
        classes=adapter.dimension.classes,
        base=cache.value(0).copy(),
        phi=phi,
        full=cache.value((1 << n) - 1).copy(),
        model_evals=cache.distinct_evals,
    )


def partition_attribute(
    adapter: ModelAdapter,
    utterance: TokenizedUtterance,
    target_class: str | None = None,
    tree: PartitionTree | None = None,
) -> AttributionResult:
    """Recursive two-context partition scheme with residual redistribution.

    A node's children A and B are valued inside the node's context
    (L, U) as phi = 0.5 * [(v(L|A) - v(L)) + (v(U) - v(U\\A))]; recursion
    descends with the sibling removed from the upper context. After a
    node's subtree is done, the gap between the node's own value and its
    leaves' total is spread equally over its leaves, which makes the
    attribution exactly efficient by construction.
    """
    _check_target(adapter, target_class)
    n = len(utterance.tokens)
    if tree is None:
        tree = build_tree(utterance)

    cache = CoalitionCache(adapter, utterance)

    def node_masks(node: TreeNode) -> list[int]:
        if node.is_leaf:
            return [node.leaf_mask()]
        return [node.leaf_mask()] + node_masks(node.left) + node_masks(node.right)

    # contexts are structural (lower context stays empty), so every value
    # the recursion will ask for is a node coalition: batch them up front
    cache.ensure([0] + node_masks(tree.root) + [(1 << n) - 1])

    n_classes = len(adapter.dimension.classes)
    phi = np.zeros((n, n_classes))

    def v(mask: int) -> np.ndarray:
        cache.ensure([mask])
        return cache.value(mask)

    def process(node: TreeNode, node_phi: np.ndarray, lower: int, upper: int) -> None:
        if node.is_leaf:
            phi[node.leaf] = node_phi
            return
        a_mask = node.left.leaf_mask()
        b_mask = node.right.leaf_mask()
        phi_a = 0.5 * ((v(lower | a_mask) - v(lower)) + (v(upper) - v(upper & ~a_mask)))
        phi_b = 0.5 * ((v(lower | b_mask) - v(lower)) + (v(upper) - v(upper & ~b_mask)))
        process(node.left, phi_a, lower, upper & ~b_mask)
        process(node.right, phi_b, lower, upper & ~a_mask)
        leaves = node.leaves()
        residual = node_phi - phi[leaves].sum(axis=0)
        phi[leaves] += residual / len(leaves)

    full_mask = (1 << n) - 1
    root_phi = v(full_mask) - v(0)
    process(tree.root, root_phi, 0, full_mask)

    return AttributionResult(
        utterance_id=utterance.id,
        method="partition",
        tokens=utterance.surfaces,
        classes=adapter.dimension.classes,
        base=cache.value(0).copy(),
        phi=phi,
        full=cache.value(full_mask).copy(),
        model_evals=cache.distinct_evals,
    )


def permutation_shapley(
    adapter: ModelAdapter,
    utterance: TokenizedUtterance,
    target_class: str | None = None,
    n_perms: int = 200,
    seed: int = 0,
) -> AttributionResult:
    """Antithetic permutation sampling: each seeded permutation is walked
    forward and reversed; phi is the mean marginal over all walks."""
    _check_target(adapter, target_class)
    if n_perms < 1:
        raise ValidationError("n_perms must be >= 1")
    n = len(utterance.tokens)
    gen = SplitMix64(seed)
    orders = np.empty((2 * n_perms, n), dtype=np.int64)
    for j in range(n_perms):
        perm = gen.permutation(n)
        orders[2 * j] = perm
        orders[2 * j + 1] = perm[::-1]

    cache = CoalitionCache(adapter, utterance)
    step_masks: list[list[int]] = []
    needed: list[int] = [0, (1 << n) - 1]
    for row in orders:
        walk = [0]
        mask = 0
        for tok in row:
            mask |= 1 << int(tok)
            walk.append(mask)
        step_masks.append(walk)
        needed.extend(walk)
    cache.ensure(needed)

    step_rows = np.array([[cache.row(m) for m in walk] for walk in step_masks], dtype=np.int64)
    step_values = cache.values[step_rows]
    phi = kernels.perm_accumulate(orders, step_values, n) / (2 * n_perms)
    return AttributionResult(
        utterance_id=utterance.id,
        method="permutation",
        tokens=utterance.surfaces,
        classes=adapter.dimension.classes,
        base=cache.value(0).copy(),
        phi=phi,
        full=cache.value((1 << n) - 1).copy(),
        model_evals=cache.distinct_evals,
        seed=seed,
    )


def explain_utterance(
    adapter: ModelAdapter,
    utterance: TokenizedUtterance,
    method: str,
    n_perms: int = 200,
    seed: int = 0,
    exact_cap: int = EXACT_CAP_DEFAULT,
    owen_cap: int = OWEN_CAP_DEFAULT,
) -> AttributionResult:
    if method == "exact":
        return exact_shapley(adapter, utterance, cap=exact_cap)
    if method == "owen":
        return owen_exact(adapter, utterance, cap=owen_cap)
    if method == "partition":
        return partition_attribute(adapter, utterance)
    if method == "permutation":
        return permutation_shapley(adapter, utterance, n_perms=n_perms, seed=seed)
    raise ValidationError(f"unknown method {method!r}; expected one of {METHODS}")


def explain_corpus(
    adapter: ModelAdapter,
    corpus: Sequence[TokenizedUtterance],
    method: str,
    n_perms: int = 200,
    seed: int = 0,
    exact_cap: int = EXACT_CAP_DEFAULT,
    owen_cap: int = OWEN_CAP_DEFAULT,
    workers: int = 1,
) -> tuple[list[AttributionResult], list[tuple[str, str]]]:
    """Explain every utterance; results come back sorted by utterance id.

    Adapter failures are recorded and skipped, not fatal. Cap violations
    are fatal and reported up front, naming the offending utterance.
    """
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; expected one of {METHODS}")
    cap = {"exact": exact_cap, "owen": owen_cap}.get(method)
    ordered = sorted(corpus, key=lambda u: u.id)
    if cap is not None:
        for utt in ordered:
            if len(utt.tokens) > cap:
                raise CapExceededError(method, len(utt.tokens), cap)

    skipped: list[tuple[str, str]] = []
    results: list[AttributionResult] = []

    def run(utt: TokenizedUtterance) -> AttributionResult:
        per_seed = derive_seed(seed, utt.id) if method == "permutation" else seed
        return explain_utterance(
            adapter, utt, method,
            n_perms=n_perms, seed=per_seed, exact_cap=exact_cap, owen_cap=owen_cap,
        )

    if workers <= 1:
        for utt in ordered:
            try:
                results.append(run(utt))
            except AdapterFailure as exc:
                skipped.append((utt.id, str(exc)))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(run, utt): utt for utt in ordered}
            for future, utt in futures.items():
                try:
                    results.append(future.result())
                except AdapterFailure as exc:
                    skipped.append((utt.id, str(exc)))
        results.sort(key=lambda r: r.utterance_id)
        skipped.sort()
    return results, skipped


# --- JSONL records ----------------------------------------------------------


def write_attributions(results: Sequence[AttributionResult], path: str | Path) -> None:
    """One record per (utterance, class), utterance-id then class order."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for res in sorted(results, key=lambda r: r.utterance_id):
            for c, cls in enumerate(res.classes):
                record = {
                    "id": res.utterance_id,
                    "class": cls,
                    "method": res.method,
                    "base": float(res.base[c]),
                    "phi": [float(x) for x in res.phi[:, c]],
                    "tokens": list(res.tokens),
                    "model_evals": res.model_evals,
                }
                if res.seed is not None:
                    record["seed"] = res.seed
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_attribution_records(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_num, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: line {line_num} is not JSON: {exc}") from None
            missing = {"id", "class", "base", "phi", "tokens"} - rec.keys()
            if missing:
                raise ValidationError(
                    f"{path}: line {line_num} misses fields {sorted(missing)}"
                )
            if len(rec["phi"]) != len(rec["tokens"]):
                raise ValidationError(
                    f"{path}: line {line_num} has {len(rec['phi'])} phi values "
                    f"for {len(rec['tokens'])} tokens"
                )
            records.append(rec)
    return records


def write_skip_summary(skipped: Sequence[tuple[str, str]], explained: int, path: str | Path) -> None:
    summary = {
        "explained": explained,
        "skipped": [{"id": uid, "error": err} for uid, err in sorted(skipped)],
        "generator": GENERATOR_NAME,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(summary, indent=2, ensure_ascii=False) + "\n")
