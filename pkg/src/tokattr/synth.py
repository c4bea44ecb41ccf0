"""Deterministic synthetic fixtures: corpora, models, embeddings.

Everything here is a pure function of the seed (SplitMix64 streams), so
test expectations and pipeline outputs are stable across runs and
machines. The planted-keyword bundle is the end-to-end fixture: each
class has five keywords with positive weight under a purely additive
scoring model, so those words must surface at the top of that class's
ranking while the zero-weight fillers must aggregate to (numerically)
nothing.
"""

from __future__ import annotations

import json
from pathlib import Path

from .corpus import Dimension, TokenizedUtterance, save_corpus, tokenize
from .rng import SplitMix64

PLANTED = {
    "geometry": ["radius", "angle", "curve", "triangle", "diagram"],
    "planning": ["schedule", "assign", "checklist", "deadline", "milestone"],
    "feelings": ["great", "confusing", "impossible", "together", "stuck"],
}
PLANTED_WEIGHTS = [2.0, 1.8, 1.6, 1.4, 1.2]

FILLERS = [
    "the", "a", "an", "and", "or", "but", "so", "then", "now", "here",
    "there", "this", "that", "these", "those", "we", "you", "they", "it",
    "is", "are", "was", "were", "be", "been", "can", "could", "should",
    "would", "will", "just", "very", "really", "quite", "some", "any",
    "all", "both", "each", "more", "most", "other", "such", "into",
    "about", "over", "under", "again", "once", "still",
]

ENTITY_PHRASES = [("alice", "NAME"), ("bob", "NAME"), ("search engine", "RESOURCE")]


def synthetic_dimension() -> Dimension:
    return Dimension(name="topics", classes=tuple(PLANTED))


def synthetic_model_spec() -> dict:
    """Additive keyword-score model with the planted weights per class."""
    weights = {
        cls: {word: w for word, w in zip(words, PLANTED_WEIGHTS)}
        for cls, words in PLANTED.items()
    }
    return {
        "kind": "keyword-score",
        "classes": list(PLANTED),
        "base": [0.0] * len(PLANTED),
        "weights": weights,
        "output_mode": "score",
        "dimension": "topics",
        "identity": "synthetic-planted",
    }


def synthetic_corpus(n_utterances: int = 300, seed: int = 7) -> list[TokenizedUtterance]:
    """Planted-keyword corpus: each utterance mixes its class's keywords
    with zero-weight fillers; a few utterances mention maskable entities."""
    gen = SplitMix64(seed)
    classes = list(PLANTED)
    utterances = []
    for k in range(n_utterances):
        cls = classes[k % len(classes)]
        keywords = list(PLANTED[cls])
        n_kw = 2 + gen.randbelow(3)
        chosen = [keywords.pop(gen.randbelow(len(keywords))) for _ in range(n_kw)]
        n_fill = 3 + gen.randbelow(4)
        fillers = [FILLERS[gen.randbelow(len(FILLERS))] for _ in range(n_fill)]
        words = chosen + fillers
        if gen.randbelow(10) == 0:
            words.append(ENTITY_PHRASES[gen.randbelow(len(ENTITY_PHRASES))][0])
        # deterministic shuffle of the word order
        order = gen.permutation(len(words))
        text = " ".join(words[i] for i in order)
        utterances.append(
            TokenizedUtterance(
                id=f"u{k:04d}",
                tokens=tokenize(text),
                dimension="topics",
                gold_label=cls,
            )
        )
    return utterances


def synthetic_gazetteer_rows() -> list[tuple[str, str]]:
    return [(phrase, category) for phrase, category in ENTITY_PHRASES]


def synthetic_embeddings() -> tuple[int, list[tuple[str, list[float]]]]:
    """Tiny vector store: planted words cluster near their class anchor,
    except the last keyword of each class, which is made orthogonal so the
    spuriousness check has something to flag."""
    entries: list[tuple[str, list[float]]] = []
    classes = list(PLANTED)
    dim = len(classes) + 1
    for c, cls in enumerate(classes):
        for j, word in enumerate(PLANTED[cls]):
            vec = [0.0] * dim
            if j == len(PLANTED[cls]) - 1:
                vec[len(classes)] = 1.0  # off-axis: candidate spurious word
            else:
                vec[c] = 1.0
                vec[len(classes)] = 0.1 * (j + 1)
            entries.append((word, vec))
    for j, word in enumerate(FILLERS[:10]):
        vec = [0.0] * dim
        vec[len(classes)] = 1.0 + 0.01 * j
        entries.append((word, vec))
    return dim, entries


def synthetic_anchors() -> dict[str, list[str]]:
    return {cls: [words[0]] for cls, words in PLANTED.items()}


def write_synthetic_bundle(out_dir: str | Path, n_utterances: int = 300, seed: int = 7) -> dict:
    """Write corpus, gazetteer, model, embeddings, and a ready-to-run config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    corpus = synthetic_corpus(n_utterances=n_utterances, seed=seed)
    save_corpus(corpus, out / "corpus.jsonl")

    with open(out / "gazetteer.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("phrase,category\n")
        for phrase, category in synthetic_gazetteer_rows():
            fh.write(f"{phrase},{category}\n")

    with open(out / "model.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(synthetic_model_spec(), fh, indent=2)
        fh.write("\n")

    dim, entries = synthetic_embeddings()
    with open(out / "embeddings.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(entries)} {dim}\n")
        for word, vec in entries:
            fh.write(word + " " + " ".join(repr(v) for v in vec) + "\n")

    config = {
        "corpus": "corpus.jsonl",
        "gazetteer": "gazetteer.csv",
        "dimension": {"name": "topics", "classes": list(PLANTED)},
        "model": "builtin:model.json",
        "method": "partition",
        "n_perms": 200,
        "seed": seed,
        "caps": {"exact": 20, "owen": 12},
        "out_dir": "out",
        "anchors": synthetic_anchors(),
        "embeddings": "embeddings.txt",
        "threshold": 0.3,
        "top_k": 20,
    }
    with open(out / "config.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")
    return config


# --- random verification models ----------------------------------------------


def random_utterance(seed: int, n_tokens: int, uid: str = "rand") -> TokenizedUtterance:
    """Utterance of distinct pseudo-words w0..w{n-1} in seeded order."""
    gen = SplitMix64(seed)
    order = gen.permutation(n_tokens)
    text = " ".join(f"w{order[i]}" for i in range(n_tokens))
    return TokenizedUtterance(id=uid, tokens=tokenize(text))


def random_model_spec(seed: int, kind: str, n_tokens: int, n_classes: int = 3) -> dict:
    """Random keyword model over the w0..w{n-1} vocabulary.

    Weights are uniform in [-1, 1) at 3 decimal places (exactly
    representable scale keeps cross-method comparisons tight).
    """
    gen = SplitMix64(seed)
    classes = [f"c{j}" for j in range(n_classes)]

    def u() -> float:
        return (gen.randbelow(2001) - 1000) / 1000.0

    weights = {
        cls: {f"w{i}": u() for i in range(n_tokens)}
        for cls in classes
    }
    base = [u() for _ in classes]
    return {
        "kind": kind,
        "classes": classes,
        "base": base if kind != "keyword-softmax" else [0.0] * n_classes,
        "weights": weights,
        "output_mode": "probability" if kind == "keyword-softmax" else "score",
        "identity": f"random-{kind}-{seed}",
    }
