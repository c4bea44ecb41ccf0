"""Subprocess adapter speaking newline-delimited JSON over stdio.

The worker process is any program honoring the protocol:

    -> {"op": "handshake"}
    <- {"op": "handshake", "model": str, "classes": [str], "output_mode": str}
    -> {"op": "predict", "id": int, "texts": [str]}
    <- {"op": "predict", "id": int, "probs": [[float], ...]}
    -> {"op": "shutdown"}

One JSON object per LF-terminated line, UTF-8. Requests are strictly
serialized; every request carries a deadline so a dead or wedged worker
surfaces as an :class:`AdapterFailure`, never a hang.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading
from queue import Empty, Queue

import numpy as np

from .corpus import Dimension, TokenizedUtterance
from .errors import AdapterFailure, ValidationError
from .model import MaskedInput, ModelAdapter

DEFAULT_TIMEOUT = 5.0


class _LineReader(threading.Thread):
    """Pumps worker stdout lines into a queue so reads can time out."""

    def __init__(self, stream):
        super().__init__(daemon=True)
        self.stream = stream
        self.lines: Queue = Queue()
        self.start()

    def run(self):
        try:
            for line in self.stream:
                self.lines.put(line)
        except ValueError:
            pass  # stream closed mid-read
        self.lines.put(None)

    def next_line(self, timeout: float) -> str | None:
        try:
            return self.lines.get(timeout=timeout)
        except Empty:
            raise TimeoutError from None


class BridgeAdapter(ModelAdapter):
    """ModelAdapter over a worker subprocess; construct via :func:`launch_bridge`."""

    serialized = True

    def __init__(self, command: str, timeout: float = DEFAULT_TIMEOUT,
                 mask_mode: str = "substitute", dimension: Dimension | None = None):
        self._command = command
        self._timeout = timeout
        self._next_id = 0
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                encoding="utf-8",
            )
        except OSError as exc:
            raise AdapterFailure(f"could not launch bridge worker {command!r}: {exc}") from None
        self._reader = _LineReader(self._proc.stdout)
        handshake = self._roundtrip({"op": "handshake"})
        if handshake.get("op") != "handshake":
            self._kill()
            raise AdapterFailure(f"bridge worker sent a bad handshake: {handshake!r}")
        classes = handshake.get("classes") or []
        output_mode = handshake.get("output_mode", "probability")
        if dimension is None:
            dimension = Dimension(name=handshake.get("model", "bridge"), classes=tuple(classes))
        elif tuple(classes) != dimension.classes:
            self._kill()
            raise ValidationError(
                f"bridge worker classes {classes} do not match the configured "
                f"dimension {list(dimension.classes)}"
            )
        super().__init__(
            identity=f"bridge:{handshake.get('model', command)}",
            dimension=dimension,
            output_mode=output_mode,
            mask_mode=mask_mode,
        )

    # -- protocol ------------------------------------------------------------

    def _roundtrip(self, request: dict) -> dict:
        rid = request.get("id")
        try:
            self._proc.stdin.write(json.dumps(request, ensure_ascii=False) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self._kill()
            raise AdapterFailure(f"bridge worker pipe closed: {exc}") from None
        while True:
            try:
                line = self._reader.next_line(self._timeout)
            except TimeoutError:
                self._kill()
                raise AdapterFailure(
                    f"bridge worker did not answer within {self._timeout}s"
                ) from None
            if line is None:
                self._kill()
                raise AdapterFailure("bridge worker exited mid-request")
            line = line.strip()
            if not line:
                continue
            try:
                response = json.loads(line)
            except json.JSONDecodeError:
                self._kill()
                raise AdapterFailure(f"bridge worker sent a non-JSON line: {line[:200]!r}") from None
            if response.get("op") == "error":
                raise AdapterFailure(f"bridge worker error: {response.get('message')}")
            if rid is not None and response.get("id") != rid:
                self._kill()
                raise AdapterFailure(
                    f"bridge worker answered id {response.get('id')!r} to request {rid}"
                )
            return response

    def _predict_masks(self, utterance: TokenizedUtterance, masks) -> list[list[float]]:
        texts = [
            MaskedInput(utterance, tuple(bool(b) for b in row)).text(self.mask_mode)
            for row in np.asarray(masks, dtype=bool)
        ]
        self._next_id += 1
        rid = self._next_id
        try:
            response = self._roundtrip({"op": "predict", "id": rid, "texts": texts})
        except AdapterFailure as exc:
            if not exc.batch_indices:
                exc.batch_indices = list(range(len(texts)))
            raise
        if response.get("op") != "predict":
            self._kill()
            raise AdapterFailure(
                f"bridge worker answered op {response.get('op')!r} to a predict",
                batch_indices=list(range(len(texts))),
            )
        probs = response.get("probs")
        if not isinstance(probs, list) or len(probs) != len(texts):
            raise AdapterFailure(
                f"bridge worker returned {len(probs) if isinstance(probs, list) else 'no'} "
                f"rows for {len(texts)} texts",
                batch_indices=list(range(len(texts))),
            )
        n_classes = len(self.dimension.classes)
        bad = [k for k, row in enumerate(probs) if len(row) != n_classes]
        if bad:
            raise AdapterFailure(
                f"bridge worker rows {bad} have wrong width", batch_indices=bad
            )
        if self.output_mode == "probability":
            bad = [k for k, row in enumerate(probs) if abs(sum(row) - 1.0) > 1e-6]
            if bad:
                raise AdapterFailure(
                    f"bridge worker probability rows {bad} do not sum to 1",
                    batch_indices=bad,
                )
        return probs

    # -- lifecycle -------------------------------------------------------------

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.write(json.dumps({"op": "shutdown"}) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError):
                pass
            try:
                self._proc.wait(timeout=self._timeout)
            except subprocess.TimeoutExpired:
                self._kill()
        else:
            self._kill()

    def _kill(self) -> None:
        if self._proc.poll() is None:
            self._proc.kill()
            try:
                self._proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def launch_bridge(command: str, timeout: float = DEFAULT_TIMEOUT,
                  mask_mode: str = "substitute",
                  dimension: Dimension | None = None) -> BridgeAdapter:
    return BridgeAdapter(command, timeout=timeout, mask_mode=mask_mode, dimension=dimension)
