from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import confusion_oracle
from tokattr.aggregate import (
    aggregate_avg_shap,
    merge_pieces,
    min_ratio_diagnostic,
    rank_top_words,
    rank_values,
    read_ranked_csv,
    read_table_csv,
    task_text_frequency,
    weighted_f1,
    write_ranked_csv,
    write_table_csv,
)
from tokattr.corpus import Dimension
from tokattr.errors import ValidationError
from tokattr.rng import SplitMix64

DIM = Dimension(name="d", classes=("north", "south"))


def record(uid, cls, tokens, phi):
    return {"id": uid, "class": cls, "tokens": tokens, "phi": phi}


class TestAggregation:
    def test_mean_over_occurrences_across_utterances(self):
        table = aggregate_avg_shap(
            [
                record("u1", "north", ["compare"], [0.9]),
                record("u2", "north", ["compare"], [0.7]),
            ],
            DIM,
        )
        assert table.avg("compare", "north") == pytest.approx(0.8)

    def test_absent_word_has_no_entry(self):
        table = aggregate_avg_shap([record("u1", "north", ["compare"], [0.9])], DIM)
        assert "radius" not in table.cells

    def test_multiple_occurrences_in_one_utterance_each_count(self):
        table = aggregate_avg_shap(
            [record("u1", "north", ["the", "radius", "the"], [0.1, 0.5, 0.3])], DIM
        )
        cell = table.cells["the"]["north"]
        assert cell.occurrences == 2
        assert len(cell.utterances) == 1
        assert table.avg("the", "north") == pytest.approx(0.2)

    def test_per_utterance_mean_mode(self):
        records = [
            record("u1", "north", ["w", "w"], [0.0, 1.0]),  # utterance mean 0.5
            record("u2", "north", ["w"], [0.1]),
        ]
        occurrence = aggregate_avg_shap(records, DIM)
        per_utt = aggregate_avg_shap(records, DIM, per_utterance_mean=True)
        assert occurrence.avg("w", "north") == pytest.approx((0.0 + 1.0 + 0.1) / 3)
        assert per_utt.avg("w", "north") == pytest.approx((0.5 + 0.1) / 2)

    def test_single_occurrence_keeps_its_phi(self):
        table = aggregate_avg_shap([record("u1", "south", ["derive"], [0.82])], DIM)
        assert table.avg("derive", "south") == 0.82

    def test_stream_order_does_not_matter(self):
        records = [
            record("u1", "north", ["a", "b"], [0.4, -0.2]),
            record("u2", "north", ["b", "a"], [0.6, 0.0]),
            record("u1", "south", ["a", "b"], [1.0, 1.0]),
        ]
        forward = aggregate_avg_shap(records, DIM)
        backward = aggregate_avg_shap(list(reversed(records)), DIM)
        assert forward.rows() == backward.rows()

    def test_word_keys_lowercase(self):
        table = aggregate_avg_shap([record("u1", "north", ["Compare"], [0.9])], DIM)
        assert "compare" in table.cells

    def test_foreign_class_is_a_mixed_dimension_error(self):
        with pytest.raises(ValidationError, match="dimension"):
            aggregate_avg_shap([record("u1", "calmcls", ["w"], [0.1])], DIM)

    def test_gold_scope_filters_to_gold_class_records(self):
        records = [
            record("u1", "north", ["w"], [1.0]),
            record("u1", "south", ["w"], [5.0]),
        ]
        table = aggregate_avg_shap(records, DIM, gold_labels={"u1": "north"})
        assert table.avg("w", "north") == 1.0
        assert "south" not in table.cells["w"]


class TestSubwordMerge:
    def test_pieces_sum_into_the_parent_word(self):
        assert merge_pieces(["over", "##flow"], [-0.1, -0.15]) == [("overflow", pytest.approx(-0.25))]

    def test_merge_happens_before_keying(self):
        table = aggregate_avg_shap(
            [record("u1", "north", ["over", "##flow"], [-0.1, -0.15])], DIM
        )
        assert table.avg("overflow", "north") == pytest.approx(-0.25)
        raw = aggregate_avg_shap(
            [record("u1", "north", ["over", "##flow"], [-0.1, -0.15])], DIM, merge_subwords=False
        )
        assert "##flow" in raw.cells

    def test_leading_piece_without_parent_stays_itself(self):
        assert merge_pieces(["##odd", "word"], [0.2, 0.3]) == [("##odd", 0.2), ("word", 0.3)]


class TestRanking:
    def test_top_k_with_pn_labels(self):
        ranked = rank_values({"a": 0.8, "b": -0.5, "c": 0.1}, "north", k=2)
        assert [(e.word, e.label) for e in ranked.entries] == [("a", "P1"), ("b", "N1")]

    def test_zero_values_stay_unlabeled(self):
        ranked = rank_values({"a": 0.0, "b": 0.0}, "north", k=5)
        assert all(e.label == "unlabeled" for e in ranked.entries)

    def test_strongest_negative_heads_the_list(self):
        values = {"ugh": -0.77, "meh": -0.75, "err": -0.61, "calm": 0.2}
        ranked = rank_values(values, "calmcls", k=20)
        assert ranked.entries[0].word == "ugh"
        assert ranked.entries[0].label == "N1"
        assert ranked.entries[3].label == "P1"

    def test_magnitude_ties_break_lexicographically(self):
        ranked = rank_values({"zed": 0.5, "ant": 0.5, "mid": -0.5}, "north", k=3)
        assert [e.word for e in ranked.entries] == ["ant", "mid", "zed"]
        assert [e.label for e in ranked.entries] == ["P1", "N1", "P2"]

    def test_eleventh_positive_is_unlabeled(self):
        values = {f"w{i:02d}": 1.0 - i * 0.05 for i in range(12)}
        ranked = rank_values(values, "north", k=20)
        assert [e.label for e in ranked.entries[:10]] == [f"P{i}" for i in range(1, 11)]
        assert ranked.entries[10].label == "unlabeled"
        assert ranked.entries[11].label == "unlabeled"

    def test_rank_from_table_and_determinism(self):
        records = [
            record("u1", "north", ["compare", "exam"], [0.81, -0.37]),
            record("u1", "south", ["compare", "exam"], [0.0, 0.0]),
        ]
        table = aggregate_avg_shap(records, DIM)
        first = rank_top_words(table, "north")
        again = rank_top_words(table, "north")
        assert first == again
        assert first.entries[0].word == "compare"

    def test_k_must_be_positive(self):
        with pytest.raises(ValidationError):
            rank_values({"a": 1.0}, "north", k=0)


class TestMinRatio:
    def test_half_ratio(self):
        ranked = rank_values({"hi": 0.8, "lo": 0.4}, "c", k=2)
        assert min_ratio_diagnostic(ranked) == pytest.approx(0.5)

    def test_single_entry_is_one(self):
        ranked = rank_values({"only": 0.3}, "c", k=5)
        assert min_ratio_diagnostic(ranked) == 1.0

    def test_published_style_ratio(self):
        values = {"compare": 0.81, "mid1": 0.6, "mid2": -0.5, "key": 0.32}
        ranked = rank_values(values, "c", k=4)
        assert min_ratio_diagnostic(ranked) == pytest.approx(0.32 / 0.81)

    def test_all_zero_list_degenerates_to_one(self):
        ranked = rank_values({"a": 0.0, "b": 0.0}, "c", k=2)
        assert min_ratio_diagnostic(ranked) == 1.0

    @given(st.dictionaries(st.sampled_from("abcdefgh"), st.floats(-1, 1), min_size=1))
    @settings(max_examples=100, deadline=None)
    def test_ratio_in_unit_interval(self, values):
        ranked = rank_values(values, "c", k=20)
        ratio = min_ratio_diagnostic(ranked)
        assert 0 <= ratio <= 1.0
        # strictly positive whenever no zero value padded the tail
        if abs(ranked.entries[-1].avg_value) > 0:
            assert ratio > 0


class TestTaskFrequency:
    def test_counts_whole_word_occurrences(self):
        assert task_text_frequency(["radius"], "the radius of the radius")["radius"] == 2

    def test_absent_word_counts_zero(self):
        assert task_text_frequency(["angle"], "no circles here")["angle"] == 0

    def test_counting_survives_case_and_punctuation(self):
        counts = task_text_frequency(["radius", "diagram"], "Radius! radius; see diagram.")
        assert counts == {"radius": 2, "diagram": 1}

    def test_substrings_do_not_count(self):
        assert task_text_frequency(["rad"], "radius radii")["rad"] == 0

    def test_empty_document(self):
        assert task_text_frequency(["w"], "")["w"] == 0


class TestWeightedF1:
    DIM_AB = Dimension(name="bin", classes=("A", "B"))

    def test_perfect_predictions(self):
        report = weighted_f1(["A", "B", "A"], ["A", "B", "A"], self.DIM_AB)
        assert report.weighted_f1 == 1.0

    def test_hand_computed_binary_case(self):
        report = weighted_f1(["A", "A", "B", "B"], ["A", "B", "B", "B"], self.DIM_AB)
        by_class = {m.class_id: m for m in report.per_class}
        assert by_class["A"].f1 == pytest.approx(2 / 3)
        assert by_class["B"].f1 == pytest.approx(4 / 5)
        assert report.weighted_f1 == pytest.approx(11 / 15)

    def test_zero_over_zero_convention(self):
        dim = Dimension(name="t", classes=("A", "B", "C"))
        report = weighted_f1(["A", "A"], ["B", "B"], dim)
        by_class = {m.class_id: m for m in report.per_class}
        assert by_class["C"].precision == 0.0
        assert by_class["C"].recall == 0.0
        assert by_class["C"].f1 == 0.0

    def test_matches_confusion_oracle_on_random_vectors(self):
        dim = Dimension(name="t", classes=("A", "B", "C", "D"))
        gen = SplitMix64(77)
        for _ in range(60):
            size = 1 + gen.randbelow(30)
            gold = [dim.classes[gen.randbelow(4)] for _ in range(size)]
            pred = [dim.classes[gen.randbelow(4)] for _ in range(size)]
            report = weighted_f1(gold, pred, dim)
            oracle_per_class, oracle_weighted = confusion_oracle(gold, pred, dim.classes)
            assert report.weighted_f1 == oracle_weighted
            for m in report.per_class:
                assert (m.precision, m.recall, m.f1, m.support) == oracle_per_class[m.class_id]

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            weighted_f1(["A"], ["A", "B"], self.DIM_AB)

    def test_foreign_label_rejected(self):
        with pytest.raises(ValidationError):
            weighted_f1(["A"], ["Z"], self.DIM_AB)


class TestCsvFormats:
    def test_table_round_trip(self, tmp_path):
        records = [
            record("u1", "north", ["compare", "the"], [0.9, 0.0]),
            record("u2", "north", ["compare"], [0.7]),
        ]
        table = aggregate_avg_shap(records, DIM)
        path = tmp_path / "avgshap.csv"
        write_table_csv(table, path)
        rows = read_table_csv(path, DIM)
        assert ("compare", "north", 0.8, 2, 2) in rows
        assert path.read_bytes() == path.read_bytes()

    def test_ranked_round_trip(self, tmp_path):
        lists = [rank_values({"a": 0.8, "b": -0.5}, "north", k=20)]
        path = tmp_path / "ranked.csv"
        write_ranked_csv(lists, path)
        loaded = read_ranked_csv(path)
        assert loaded["north"].entries == lists[0].entries

    def test_write_is_deterministic(self, tmp_path):
        records = [record("u1", "north", ["x", "y"], [0.25, -0.125])]
        table = aggregate_avg_shap(records, DIM)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_table_csv(table, a)
        write_table_csv(table, b)
        assert a.read_bytes() == b.read_bytes()
