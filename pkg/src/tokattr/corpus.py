"""Transcript ingestion: tokenization, gazetteer masking, human corrections.

Entity masking is deliberately a deterministic gazetteer matcher rather
than a statistical tagger: every replacement is recorded as a proposal a
reviewer can accept, reject, or recategorize, and the whole mask step is
reproducible. Masking happens after tokenization; placeholders such as
``[NAME]`` are ordinary tokens from then on.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyUtteranceError, ValidationError

MASK_CATEGORIES = ("NAME", "RESOURCE", "LOCATION", "ENTERTAINMENT", "DEVICE")

# maximal runs of letters/digits; underscores and all punctuation split
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class Token:
    surface: str
    position: int
    mask_category: str | None = None

    def __post_init__(self):
        if not self.surface:
            raise ValidationError("token surface must be non-empty")
        if self.mask_category is not None:
            if self.mask_category not in MASK_CATEGORIES:
                raise ValidationError(f"unknown mask category {self.mask_category!r}")
            if self.surface != placeholder(self.mask_category):
                raise ValidationError(
                    f"masked token surface {self.surface!r} does not match "
                    f"placeholder for {self.mask_category}"
                )


@dataclass(frozen=True)
class TokenizedUtterance:
    id: str
    tokens: tuple[Token, ...]
    dimension: str | None = None
    gold_label: str | None = None

    def __post_init__(self):
        if not self.tokens:
            raise EmptyUtteranceError(f"utterance {self.id!r} has no tokens")
        for k, tok in enumerate(self.tokens):
            if tok.position != k:
                raise ValidationError(
                    f"utterance {self.id!r}: token {k} carries position {tok.position}"
                )

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)


@dataclass(frozen=True)
class Dimension:
    name: str
    classes: tuple[str, ...]

    def __post_init__(self):
        if not self.classes:
            raise ValidationError(f"dimension {self.name!r} declares no classes")
        if len(set(self.classes)) != len(self.classes):
            raise ValidationError(f"dimension {self.name!r} has duplicate classes")

    def index_of(self, class_id: str) -> int:
        try:
            return self.classes.index(class_id)
        except ValueError:
            raise ValidationError(
                f"class {class_id!r} not in dimension {self.name!r}"
            ) from None


@dataclass(frozen=True)
class Gazetteer:
    """Phrase -> mask-category table; longest match wins."""

    entries: tuple[tuple[tuple[str, ...], str], ...]
    _by_first: dict = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        seen: dict[tuple[str, ...], str] = {}
        by_first: dict[str, list[tuple[tuple[str, ...], str]]] = {}
        for phrase, category in self.entries:
            if not phrase:
                raise ValidationError("gazetteer phrase must be non-empty")
            if category not in MASK_CATEGORIES:
                raise ValidationError(f"unknown mask category {category!r}")
            if phrase in seen and seen[phrase] != category:
                raise ValidationError(
                    f"gazetteer phrase {' '.join(phrase)!r} maps to both "
                    f"{seen[phrase]} and {category}"
                )
            seen[phrase] = category
            by_first.setdefault(phrase[0], []).append((phrase, category))
        for candidates in by_first.values():
            candidates.sort(key=lambda e: (-len(e[0]), e[0]))
        object.__setattr__(self, "_by_first", by_first)

    def matches_at(self, surfaces: Sequence[str], start: int) -> Iterable[tuple[tuple[str, ...], str]]:
        """Candidate matches starting at ``start``, longest first."""
        for phrase, category in self._by_first.get(surfaces[start], ()):
            end = start + len(phrase)
            if end <= len(surfaces) and tuple(surfaces[start:end]) == phrase:
                yield phrase, category


@dataclass(frozen=True)
class MaskProposal:
    """One gazetteer replacement, addressed by its span in the unmasked utterance."""

    utterance_id: str
    start: int
    end: int
    category: str
    placeholder: str
    decision: str = ""


def placeholder(category: str) -> str:
    return f"[{category}]"


def tokenize(raw_text: str) -> tuple[Token, ...]:
    """Lowercase, punctuation-stripped word tokens in input order."""
    surfaces = _TOKEN_RE.findall(raw_text.lower())
    if not surfaces:
        raise EmptyUtteranceError(f"no tokens after tokenization of {raw_text!r}")
    return tuple(Token(surface=s, position=k) for k, s in enumerate(surfaces))


def apply_gazetteer(
    utterance: TokenizedUtterance, gazetteer: Gazetteer
) -> tuple[TokenizedUtterance, list[MaskProposal]]:
    """Longest-match-first, left-to-right replacement of gazetteer phrases.

    Already-masked tokens never participate in a match, which makes the
    operation idempotent. Spans in the returned proposals index into the
    utterance passed in (the pre-masking token positions).
    """
    surfaces = utterance.surfaces
    out: list[Token] = []
    proposals: list[MaskProposal] = []
    i = 0
    while i < len(surfaces):
        match = None
        if utterance.tokens[i].mask_category is None:
            for phrase, category in gazetteer.matches_at(surfaces, i):
                # a phrase may not span an already-masked token
                span = utterance.tokens[i : i + len(phrase)]
                if all(t.mask_category is None for t in span):
                    match = (phrase, category)
                    break
        if match is None:
            out.append(replace(utterance.tokens[i], position=len(out)))
            i += 1
        else:
            phrase, category = match
            out.append(Token(placeholder(category), len(out), category))
            proposals.append(
                MaskProposal(utterance.id, i, i + len(phrase), category, placeholder(category))
            )
            i += len(phrase)
    return replace(utterance, tokens=tuple(out)), proposals


def apply_corrections(
    proposals: Iterable[MaskProposal], corpus: Sequence[TokenizedUtterance]
) -> list[TokenizedUtterance]:
    """Apply reviewed mask proposals to the unmasked corpus.

    Blank or ``accept`` decisions apply the proposal as recorded, ``reject``
    leaves the original tokens, ``recategorize:<CAT>`` applies with the new
    category. Rows that do not address a real span fail with the row named.
    """
    by_id = {u.id: u for u in corpus}
    edits: dict[str, list[MaskProposal]] = {}
    for row_num, prop in enumerate(proposals, start=1):
        utt = by_id.get(prop.utterance_id)
        if utt is None:
            raise ValidationError(
                f"correction row {row_num}: unknown utterance {prop.utterance_id!r}"
            )
        if not (0 <= prop.start < prop.end <= len(utt.tokens)):
            raise ValidationError(
                f"correction row {row_num}: span [{prop.start},{prop.end}) outside "
                f"utterance {prop.utterance_id!r} of length {len(utt.tokens)}"
            )
        decision = prop.decision.strip()
        if decision in ("", "accept"):
            category = prop.category
        elif decision == "reject":
            continue
        elif decision.startswith("recategorize:"):
            category = decision.split(":", 1)[1]
            if category not in MASK_CATEGORIES:
                raise ValidationError(
                    f"correction row {row_num}: unknown category {category!r}"
                )
        else:
            raise ValidationError(
                f"correction row {row_num}: unknown decision {prop.decision!r}"
            )
        edits.setdefault(prop.utterance_id, []).append(replace(prop, category=category))

    out = []
    for utt in corpus:
        spans = sorted(edits.get(utt.id, []), key=lambda p: p.start)
        for a, b in zip(spans, spans[1:]):
            if b.start < a.end:
                raise ValidationError(
                    f"overlapping corrections in utterance {utt.id!r} at token {b.start}"
                )
        tokens: list[Token] = []
        i = 0
        for prop in spans:
            for tok in utt.tokens[i : prop.start]:
                tokens.append(replace(tok, position=len(tokens)))
            tokens.append(Token(placeholder(prop.category), len(tokens), prop.category))
            i = prop.end
        for tok in utt.tokens[i:]:
            tokens.append(replace(tok, position=len(tokens)))
        out.append(replace(utt, tokens=tuple(tokens)))
    return out


# --- file formats ---------------------------------------------------------


def load_corpus(path: str | Path) -> list[TokenizedUtterance]:
    """Read a JSONL corpus, failing on the first bad utterance.

    Each line is an object with ``id`` plus either raw ``text`` (tokenized
    here) or pre-tokenized ``tokens`` with an optional parallel ``masks``
    list of categories. Callers that want to keep going past unloadable
    utterances use :func:`load_corpus_lenient`.
    """
    utterances, skipped = load_corpus_lenient(path)
    if skipped:
        uid, err = skipped[0]
        raise ValidationError(f"utterance {uid!r}: {err}")
    return utterances


def load_corpus_lenient(path: str | Path) -> tuple[list[TokenizedUtterance], list[tuple[str, str]]]:
    utterances: list[TokenizedUtterance] = []
    skipped: list[tuple[str, str]] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_num, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: line {line_num} is not JSON: {exc}") from None
            uid = obj.get("id")
            if not isinstance(uid, str) or not uid:
                raise ValidationError(f"{path}: line {line_num} lacks a string id")
            if uid in seen_ids:
                raise ValidationError(f"{path}: duplicate utterance id {uid!r}")
            seen_ids.add(uid)
            try:
                utterances.append(_parse_utterance(uid, obj))
            except ValidationError as exc:
                skipped.append((uid, str(exc)))
    return utterances, skipped


def _parse_utterance(uid: str, obj: dict) -> TokenizedUtterance:
    dimension = obj.get("dimension")
    gold = obj.get("gold_label")
    if "tokens" in obj:
        surfaces = obj["tokens"]
        masks = obj.get("masks") or [None] * len(surfaces)
        if len(masks) != len(surfaces):
            raise ValidationError("masks list length differs from tokens")
        tokens = tuple(
            Token(surface=s, position=k, mask_category=m)
            for k, (s, m) in enumerate(zip(surfaces, masks))
        )
        if not tokens:
            raise EmptyUtteranceError(f"utterance {uid!r} has no tokens")
    else:
        tokens = tokenize(obj.get("text", ""))
    return TokenizedUtterance(id=uid, tokens=tokens, dimension=dimension, gold_label=gold)


def save_corpus(corpus: Sequence[TokenizedUtterance], path: str | Path) -> None:
    """Write the token-preserving JSONL form (``tokens`` + ``masks``)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for utt in corpus:
            obj: dict = {"id": utt.id, "tokens": list(utt.surfaces)}
            if any(t.mask_category for t in utt.tokens):
                obj["masks"] = [t.mask_category for t in utt.tokens]
            if utt.dimension is not None:
                obj["dimension"] = utt.dimension
            if utt.gold_label is not None:
                obj["gold_label"] = utt.gold_label
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_gazetteer(path: str | Path) -> Gazetteer:
    """Read ``phrase,category`` CSV; phrases are tokenized like corpus text."""
    entries = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["phrase", "category"]:
            raise ValidationError(f"{path}: expected header 'phrase,category'")
        for row_num, row in enumerate(reader, start=2):
            phrase_text = (row["phrase"] or "").strip()
            if not phrase_text:
                raise ValidationError(f"{path}: row {row_num} has an empty phrase")
            phrase = tuple(t.surface for t in tokenize(phrase_text))
            entries.append((phrase, (row["category"] or "").strip()))
    return Gazetteer(entries=tuple(entries))


PROPOSAL_FIELDS = ["utterance_id", "start", "end", "category", "placeholder", "decision"]


def save_proposals(proposals: Sequence[MaskProposal], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PROPOSAL_FIELDS)
        for p in proposals:
            writer.writerow([p.utterance_id, p.start, p.end, p.category, p.placeholder, p.decision])


def load_proposals(path: str | Path) -> list[MaskProposal]:
    proposals = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != PROPOSAL_FIELDS:
            raise ValidationError(f"{path}: expected header {','.join(PROPOSAL_FIELDS)}")
        for row_num, row in enumerate(reader, start=2):
            try:
                start, end = int(row["start"]), int(row["end"])
            except (TypeError, ValueError):
                raise ValidationError(f"{path}: row {row_num} has a non-integer span") from None
            proposals.append(
                MaskProposal(
                    utterance_id=row["utterance_id"],
                    start=start,
                    end=end,
                    category=row["category"],
                    placeholder=row["placeholder"],
                    decision=(row["decision"] or "").strip(),
                )
            )
    return proposals
