from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tokattr.corpus import (
    Gazetteer,
    MaskProposal,
    Token,
    TokenizedUtterance,
    apply_corrections,
    apply_gazetteer,
    load_corpus,
    load_corpus_lenient,
    load_gazetteer,
    load_proposals,
    save_corpus,
    save_proposals,
    tokenize,
)
from tokattr.errors import EmptyUtteranceError, ValidationError


def surfaces(utt: TokenizedUtterance) -> list[str]:
    return list(utt.surfaces)


class TestTokenize:
    def test_lowercases_and_drops_punctuation(self):
        assert [t.surface for t in tokenize("Compare the radius!")] == ["compare", "the", "radius"]

    def test_empty_input_is_an_error(self):
        with pytest.raises(EmptyUtteranceError):
            tokenize("")

    def test_punctuation_only_input_is_an_error(self):
        with pytest.raises(EmptyUtteranceError):
            tokenize("?!, --")

    def test_keeps_whole_words(self):
        # subword splitting is a model concern, not a corpus concern
        assert [t.surface for t in tokenize("flabbergast")] == ["flabbergast"]

    def test_numbers_survive(self):
        assert [t.surface for t in tokenize("row 35 and 02")] == ["row", "35", "and", "02"]

    @given(st.text(min_size=0, max_size=80))
    @settings(max_examples=200, deadline=None)
    def test_positions_are_consecutive_and_deterministic(self, text):
        try:
            first = tokenize(text)
        except EmptyUtteranceError:
            return
        second = tokenize(text)
        assert first == second
        for k, tok in enumerate(first):
            assert tok.position == k
            assert tok.surface == tok.surface.lower()


def gaz(*entries: tuple[str, str]) -> Gazetteer:
    return Gazetteer(entries=tuple((tuple(p.split()), c) for p, c in entries))


class TestGazetteer:
    def test_masks_matched_tokens(self):
        utt = TokenizedUtterance(id="u1", tokens=tokenize("ask john to google it"))
        masked, proposals = apply_gazetteer(utt, gaz(("john", "NAME"), ("google", "RESOURCE")))
        assert surfaces(masked) == ["ask", "[NAME]", "to", "[RESOURCE]", "it"]
        assert len(proposals) == 2
        assert proposals[0] == MaskProposal("u1", 1, 2, "NAME", "[NAME]")
        assert proposals[1] == MaskProposal("u1", 3, 4, "RESOURCE", "[RESOURCE]")

    def test_empty_gazetteer_is_identity(self):
        utt = TokenizedUtterance(id="u1", tokens=tokenize("nothing to see"))
        masked, proposals = apply_gazetteer(utt, Gazetteer(entries=()))
        assert masked == utt
        assert proposals == []

    def test_longest_match_wins_over_shorter_overlap(self):
        entries = gaz(("new york", "LOCATION"), ("york", "NAME"))
        utt = TokenizedUtterance(id="u1", tokens=tokenize("new york"))
        # both entries can match this text: "york" alone at position 1,
        # or "new york" across [0, 2); the rule must pick the longer span
        assert list(entries.matches_at(("new", "york"), 0)) == [(("new", "york"), "LOCATION")]
        assert list(entries.matches_at(("new", "york"), 1)) == [(("york",), "NAME")]
        masked, proposals = apply_gazetteer(utt, entries)
        assert surfaces(masked) == ["[LOCATION]"]
        assert proposals == [MaskProposal("u1", 0, 2, "LOCATION", "[LOCATION]")]

    def test_masking_is_idempotent(self):
        entries = gaz(("john", "NAME"), ("the movie", "ENTERTAINMENT"))
        utt = TokenizedUtterance(id="u1", tokens=tokenize("john saw the movie with john"))
        once, _ = apply_gazetteer(utt, entries)
        twice, proposals = apply_gazetteer(once, entries)
        assert twice == once
        assert proposals == []

    def test_token_count_never_grows(self):
        entries = gaz(("a b c", "DEVICE"), ("b", "NAME"))
        utt = TokenizedUtterance(id="u1", tokens=tokenize("a b c b a"))
        masked, _ = apply_gazetteer(utt, entries)
        assert len(masked.tokens) <= len(utt.tokens)
        assert surfaces(masked) == ["[DEVICE]", "[NAME]", "a"]

    def test_conflicting_duplicate_phrases_rejected(self):
        with pytest.raises(ValidationError):
            gaz(("john", "NAME"), ("john", "DEVICE"))

    @given(
        st.lists(st.sampled_from(["alpha", "beta", "gamma", "delta"]), min_size=1, max_size=12),
        st.lists(
            st.tuples(
                st.lists(st.sampled_from(["alpha", "beta", "gamma"]), min_size=1, max_size=2),
                st.sampled_from(["NAME", "DEVICE", "LOCATION"]),
            ),
            max_size=4,
        ),
    )
    @settings(max_examples=150, deadline=None)
    def test_idempotence_property(self, words, raw_entries):
        dedup: dict[tuple, str] = {}
        for phrase, cat in raw_entries:
            dedup.setdefault(tuple(phrase), cat)
        gazetteer = Gazetteer(entries=tuple(dedup.items()))
        utt = TokenizedUtterance(id="u1", tokens=tokenize(" ".join(words)))
        once, _ = apply_gazetteer(utt, gazetteer)
        twice, proposals = apply_gazetteer(once, gazetteer)
        assert twice == once
        assert proposals == []
        assert len(once.tokens) <= len(utt.tokens)


class TestCorrections:
    def fixture(self):
        utt = TokenizedUtterance(id="u1", tokens=tokenize("ask john to google it"))
        gazetteer = gaz(("john", "NAME"), ("google", "RESOURCE"))
        _, proposals = apply_gazetteer(utt, gazetteer)
        return utt, proposals

    def test_reject_keeps_original_tokens(self):
        utt, proposals = self.fixture()
        reviewed = [
            proposals[0],  # blank decision = accept
            MaskProposal("u1", 3, 4, "RESOURCE", "[RESOURCE]", decision="reject"),
        ]
        (out,) = apply_corrections(reviewed, [utt])
        assert surfaces(out) == ["ask", "[NAME]", "to", "google", "it"]

    def test_empty_corrections_change_nothing(self):
        utt, _ = self.fixture()
        (out,) = apply_corrections([], [utt])
        assert out == utt

    def test_recategorize_repaints_the_placeholder(self):
        utt, proposals = self.fixture()
        reviewed = [
            MaskProposal("u1", 1, 2, "NAME", "[NAME]", decision="recategorize:DEVICE"),
            MaskProposal("u1", 3, 4, "RESOURCE", "[RESOURCE]", decision="reject"),
        ]
        (out,) = apply_corrections(reviewed, [utt])
        assert surfaces(out) == ["ask", "[DEVICE]", "to", "google", "it"]

    def test_reject_all_round_trips(self):
        utt, proposals = self.fixture()
        reviewed = [
            MaskProposal(p.utterance_id, p.start, p.end, p.category, p.placeholder, "reject")
            for p in proposals
        ]
        (out,) = apply_corrections(reviewed, [utt])
        assert out == utt

    def test_accept_all_equals_masking(self):
        utt, proposals = self.fixture()
        gazetteer = gaz(("john", "NAME"), ("google", "RESOURCE"))
        masked, _ = apply_gazetteer(utt, gazetteer)
        (out,) = apply_corrections(proposals, [utt])
        assert out == masked

    def test_dangling_reference_names_the_row(self):
        utt, _ = self.fixture()
        bad = [MaskProposal("missing", 0, 1, "NAME", "[NAME]", "accept")]
        with pytest.raises(ValidationError, match="row 1.*missing"):
            apply_corrections(bad, [utt])
        bad = [MaskProposal("u1", 4, 9, "NAME", "[NAME]", "accept")]
        with pytest.raises(ValidationError, match="row 1"):
            apply_corrections(bad, [utt])

    def test_unknown_decision_rejected(self):
        utt, _ = self.fixture()
        bad = [MaskProposal("u1", 1, 2, "NAME", "[NAME]", "maybe")]
        with pytest.raises(ValidationError, match="decision"):
            apply_corrections(bad, [utt])


class TestFiles:
    def test_corpus_round_trip(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        with open(path, "w") as fh:
            fh.write('{"id": "a", "text": "Compare the radius!", "gold_label": "X"}\n')
            fh.write('{"id": "b", "text": "flabbergast"}\n')
        corpus = load_corpus(path)
        assert [u.id for u in corpus] == ["a", "b"]
        assert corpus[0].gold_label == "X"
        out = tmp_path / "saved.jsonl"
        save_corpus(corpus, out)
        again = load_corpus(out)
        assert again == corpus

    def test_masked_tokens_survive_round_trip(self, tmp_path):
        utt = TokenizedUtterance(id="u1", tokens=tokenize("ask john"))
        masked, _ = apply_gazetteer(utt, gaz(("john", "NAME")))
        path = tmp_path / "masked.jsonl"
        save_corpus([masked], path)
        (loaded,) = load_corpus(path)
        assert loaded.tokens[1].mask_category == "NAME"
        assert loaded == masked

    def test_empty_utterance_collects_as_skipped(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        with open(path, "w") as fh:
            fh.write('{"id": "ok", "text": "fine"}\n')
            fh.write('{"id": "empty", "text": "..."}\n')
        loaded, skipped = load_corpus_lenient(path)
        assert [u.id for u in loaded] == ["ok"]
        assert skipped[0][0] == "empty"

    def test_duplicate_ids_rejected(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        with open(path, "w") as fh:
            fh.write('{"id": "a", "text": "x"}\n{"id": "a", "text": "y"}\n')
        with pytest.raises(ValidationError, match="duplicate"):
            load_corpus(path)

    def test_gazetteer_csv(self, tmp_path):
        path = tmp_path / "gaz.csv"
        path.write_text("phrase,category\nnew york,LOCATION\njohn,NAME\n")
        gazetteer = load_gazetteer(path)
        assert (("new", "york"), "LOCATION") in gazetteer.entries
        bad = tmp_path / "bad.csv"
        bad.write_text("word,kind\nx,NAME\n")
        with pytest.raises(ValidationError, match="header"):
            load_gazetteer(bad)

    def test_proposals_csv_round_trip(self, tmp_path):
        proposals = [
            MaskProposal("u1", 1, 2, "NAME", "[NAME]"),
            MaskProposal("u2", 0, 2, "LOCATION", "[LOCATION]", "reject"),
        ]
        path = tmp_path / "proposals.csv"
        save_proposals(proposals, path)
        assert load_proposals(path) == proposals


class TestTypes:
    def test_masked_token_surface_must_match_placeholder(self):
        with pytest.raises(ValidationError):
            Token(surface="john", position=0, mask_category="NAME")

    def test_dimension_rejects_duplicates(self):
        from tokattr.corpus import Dimension

        with pytest.raises(ValidationError):
            Dimension(name="d", classes=("a", "a"))
