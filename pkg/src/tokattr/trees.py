"""Binary partition trees over token positions.

The hierarchy drives both the Owen-value oracle (which enumerates the
orderings the tree permits) and the fast recursive explainer. The default
construction is contiguous bisection: split ``[a, b)`` at ``ceil((a+b)/2)``
so the left child is never smaller than the right.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import TokenizedUtterance
from .errors import ValidationError


@dataclass(frozen=True)
class TreeNode:
    """A leaf (token position) or an internal node with exactly two children."""

    leaf: int | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    def __post_init__(self):
        if self.leaf is None:
            if self.left is None or self.right is None:
                raise ValidationError("internal tree node needs two children")
        elif self.left is not None or self.right is not None:
            raise ValidationError("leaf node cannot carry children")

    @property
    def is_leaf(self) -> bool:
        return self.leaf is not None

    def leaves(self) -> list[int]:
        if self.is_leaf:
            return [self.leaf]
        return self.left.leaves() + self.right.leaves()

    def leaf_mask(self) -> int:
        if self.is_leaf:
            return 1 << self.leaf
        return self.left.leaf_mask() | self.right.leaf_mask()

    def internal_count(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + self.left.internal_count() + self.right.internal_count()


@dataclass(frozen=True)
class PartitionTree:
    root: TreeNode
    n_tokens: int

    def __post_init__(self):
        leaves = sorted(self.root.leaves())
        if leaves != list(range(self.n_tokens)):
            raise ValidationError(
                f"tree leaves {leaves} are not exactly positions 0..{self.n_tokens - 1}"
            )

    def spans_are_contiguous(self) -> bool:
        def check(node: TreeNode) -> bool:
            leaves = node.leaves()
            if sorted(leaves) != list(range(min(leaves), max(leaves) + 1)):
                return False
            return node.is_leaf or (check(node.left) and check(node.right))

        return check(self.root)


def build_tree(utterance: TokenizedUtterance, strategy: str = "contiguous-bisection") -> PartitionTree:
    """Deterministic partition tree over the utterance's token positions."""
    if strategy != "contiguous-bisection":
        raise ValidationError(f"unknown tree strategy {strategy!r}")
    n = len(utterance.tokens)
    return PartitionTree(root=_bisect(0, n), n_tokens=n)


def _bisect(a: int, b: int) -> TreeNode:
    if b - a == 1:
        return TreeNode(leaf=a)
    mid = (a + b + 1) // 2  # left child never smaller than right
    return TreeNode(left=_bisect(a, mid), right=_bisect(mid, b))


def tree_from_nested(spec, n_tokens: int) -> PartitionTree:
    """Build a tree from nested pairs, e.g. ``((0, 1), 2)``; handy in tests."""

    def convert(node) -> TreeNode:
        if isinstance(node, int):
            return TreeNode(leaf=node)
        if len(node) != 2:
            raise ValidationError("nested tree spec nodes must be pairs")
        return TreeNode(left=convert(node[0]), right=convert(node[1]))

    return PartitionTree(root=convert(spec), n_tokens=n_tokens)
