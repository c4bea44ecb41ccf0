from __future__ import annotations

import pytest

from tokattr.corpus import TokenizedUtterance, tokenize
from tokattr.errors import ValidationError
from tokattr.trees import PartitionTree, TreeNode, build_tree, tree_from_nested


def utt_of_length(n: int) -> TokenizedUtterance:
    return TokenizedUtterance(id="u", tokens=tokenize(" ".join(f"w{i}" for i in range(n))))


def shape(node: TreeNode):
    if node.is_leaf:
        return node.leaf
    return (shape(node.left), shape(node.right))


class TestBisection:
    def test_single_token_is_one_leaf(self):
        tree = build_tree(utt_of_length(1))
        assert tree.root.is_leaf
        assert tree.root.leaf == 0

    def test_four_tokens_split_evenly(self):
        tree = build_tree(utt_of_length(4))
        assert shape(tree.root) == ((0, 1), (2, 3))

    def test_three_tokens_go_left_heavy(self):
        tree = build_tree(utt_of_length(3))
        assert shape(tree.root) == ((0, 1), 2)

    def test_deterministic(self):
        assert shape(build_tree(utt_of_length(9)).root) == shape(build_tree(utt_of_length(9)).root)

    @pytest.mark.parametrize("n", range(1, 41))
    def test_invariants_hold_for_all_sizes(self, n):
        tree = build_tree(utt_of_length(n))
        assert sorted(tree.root.leaves()) == list(range(n))
        assert tree.spans_are_contiguous()
        assert tree.root.internal_count() == n - 1

        def left_never_smaller(node: TreeNode):
            if node.is_leaf:
                return True
            assert len(node.left.leaves()) >= len(node.right.leaves())
            return left_never_smaller(node.left) and left_never_smaller(node.right)

        assert left_never_smaller(tree.root)


class TestValidation:
    def test_leaves_must_cover_all_positions(self):
        with pytest.raises(ValidationError):
            PartitionTree(root=TreeNode(leaf=0), n_tokens=2)

    def test_duplicate_leaf_rejected(self):
        with pytest.raises(ValidationError):
            tree_from_nested((0, 0), 2)

    def test_nested_literal_helper(self):
        tree = tree_from_nested(((0, 1), 2), 3)
        assert shape(tree.root) == ((0, 1), 2)
        assert not tree_from_nested(((0, 2), 1), 3).spans_are_contiguous()

    def test_unknown_strategy_rejected(self):
        with pytest.raises(ValidationError):
            build_tree(utt_of_length(2), strategy="random")
