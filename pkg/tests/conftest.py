"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's vectorized paths:
brute-force Shapley walks subsets with itertools, the hierarchy oracle
enumerates orderings with plain Python lists, and the confusion-matrix
oracle counts pairs directly. They exist to check the fast code, so they
must not share it.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from tokattr.corpus import TokenizedUtterance, tokenize
from tokattr.model import BuiltinAdapter, make_builtin
from tokattr.trees import TreeNode


def utterance_of(text: str, uid: str = "u") -> TokenizedUtterance:
    return TokenizedUtterance(id=uid, tokens=tokenize(text))


def game_values(adapter, utterance, class_id: str) -> dict[int, float]:
    """v(S) for every coalition, via single-row adapter calls."""
    n = len(utterance.tokens)
    idx = adapter.dimension.index_of(class_id)
    values = {}
    for mask in range(1 << n):
        row = np.array([[(mask >> i) & 1 for i in range(n)]], dtype=bool)
        values[mask] = float(adapter.predict_masks(utterance, row)[0][idx])
    return values


def brute_force_shapley(values: dict[int, float], n: int) -> list[float]:
    """Direct subset-sum Shapley formula; independent of the kernels."""
    phi = []
    for i in range(n):
        others = [j for j in range(n) if j != i]
        total = 0.0
        for size in range(n):
            weight = math.factorial(size) * math.factorial(n - size - 1) / math.factorial(n)
            for subset in itertools.combinations(others, size):
                mask = sum(1 << j for j in subset)
                total += weight * (values[mask | (1 << i)] - values[mask])
        phi.append(total)
    return phi


def enumerate_tree_orderings(node: TreeNode) -> list[list[int]]:
    """All leaf orders from independent child swaps, pure-Python flavour."""
    if node.is_leaf:
        return [[node.leaf]]
    left = enumerate_tree_orderings(node.left)
    right = enumerate_tree_orderings(node.right)
    out = []
    for a in left:
        for b in right:
            out.append(a + b)
    for b in right:
        for a in left:
            out.append(b + a)
    return out


def hierarchy_oracle(values: dict[int, float], root: TreeNode, n: int) -> list[float]:
    """Mean prefix marginal over the tree's permitted orderings."""
    orderings = enumerate_tree_orderings(root)
    phi = [0.0] * n
    for order in orderings:
        mask = 0
        for tok in order:
            with_tok = mask | (1 << tok)
            phi[tok] += values[with_tok] - values[mask]
            mask = with_tok
    return [p / len(orderings) for p in phi]


def confusion_oracle(gold, predicted, classes):
    """Per-class F1 and weighted F1 from direct pair counting."""
    per_class = {}
    weighted = 0.0
    total = 0
    for cls in classes:
        tp = fp = fn = 0
        for g, p in zip(gold, predicted):
            if p == cls and g == cls:
                tp += 1
            elif p == cls:
                fp += 1
            elif g == cls:
                fn += 1
        support = tp + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = (precision, recall, f1, support)
        weighted += support * f1
        total += support
    return per_class, (weighted / total if total else 0.0)


@pytest.fixture
def and_gate_adapter() -> BuiltinAdapter:
    return make_builtin({
        "kind": "and-gate",
        "classes": ["hit", "other"],
        "base": [0.0, 0.0],
        "triggers": ["safe", "driving"],
        "target": "hit",
        "output_mode": "score",
    })


@pytest.fixture
def additive_adapter() -> BuiltinAdapter:
    return make_builtin({
        "kind": "keyword-score",
        "classes": ["only"],
        "base": [0.0],
        "weights": {"only": {"radius": 2.0, "the": 0.0, "compare": 1.0}},
        "output_mode": "score",
    })
