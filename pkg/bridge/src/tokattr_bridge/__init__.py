"""Stdio NDJSON workers that expose text classifiers to the attribution engine.

A worker reads one JSON request per line on stdin and answers one JSON
response per line on stdout, strictly in order:

    {"op": "handshake"}
        -> {"op": "handshake", "model": ..., "classes": [...], "output_mode": ...}
    {"op": "predict", "id": 7, "texts": ["compare the [MASK]", ...]}
        -> {"op": "predict", "id": 7, "probs": [[...], ...]}
    {"op": "shutdown"}
        -> worker drains and exits 0

Hidden tokens arrive already substituted as ``[MASK]``. Malformed input
lines produce an ``{"op": "error", ...}`` response and the worker keeps
serving. Two classifier backends ship here: a scripted stub over the
engine's builtin-model JSON format (stdlib only) and a transformers
sequence-classification wrapper.
"""

__version__ = "0.1.0"

from .protocol import serve
from .stub import StubClassifier

__all__ = ["serve", "StubClassifier", "__version__"]
