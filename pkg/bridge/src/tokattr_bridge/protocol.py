"""NDJSON serve loop: line-framed requests in, line-framed responses out."""

from __future__ import annotations

import json
import sys
import time
from typing import Protocol, Sequence, TextIO


class Classifier(Protocol):
    model_name: str
    classes: Sequence[str]
    output_mode: str

    def predict(self, texts: Sequence[str]) -> list[list[float]]: ...


class FaultInjection:
    """Deliberate misbehaviour for integration tests of the engine side."""

    def __init__(self, die_after: int | None = None, garbage_after: int | None = None,
                 delay: float = 0.0):
        self.die_after = die_after
        self.garbage_after = garbage_after
        self.delay = delay
        self.predicts_served = 0


def _write(out: TextIO, obj: dict) -> None:
    out.write(json.dumps(obj, ensure_ascii=False) + "\n")
    out.flush()


def serve(classifier: Classifier, stdin: TextIO | None = None, stdout: TextIO | None = None,
          faults: FaultInjection | None = None) -> int:
    """Process requests until shutdown or EOF; returns the exit status."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    faults = faults or FaultInjection()

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError:
            _write(stdout, {"op": "error", "message": "request line is not valid JSON"})
            continue
        if not isinstance(request, dict):
            _write(stdout, {"op": "error", "message": "request must be a JSON object"})
            continue

        op = request.get("op")
        if op == "handshake":
            _write(stdout, {
                "op": "handshake",
                "model": classifier.model_name,
                "classes": list(classifier.classes),
                "output_mode": classifier.output_mode,
            })
        elif op == "predict":
            rid = request.get("id")
            texts = request.get("texts")
            if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
                _write(stdout, {"op": "error", "id": rid,
                                "message": "predict needs a list of text strings"})
                continue
            if faults.delay:
                time.sleep(faults.delay)
            faults.predicts_served += 1
            if faults.die_after is not None and faults.predicts_served > faults.die_after:
                return 17  # abrupt death, mid-protocol
            try:
                rows = classifier.predict(texts)
            except Exception as exc:  # model failure must not kill the worker
                _write(stdout, {"op": "error", "id": rid, "message": f"model failure: {exc}"})
                continue
            if faults.garbage_after is not None and faults.predicts_served > faults.garbage_after:
                stdout.write("not json at all\n")
                stdout.flush()
                continue
            _write(stdout, {"op": "predict", "id": rid, "probs": rows})
        elif op == "shutdown":
            return 0
        else:
            _write(stdout, {"op": "error", "id": request.get("id"),
                            "message": f"unknown op {op!r}"})
    return 0
