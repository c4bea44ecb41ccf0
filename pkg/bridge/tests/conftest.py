"""Helpers for driving workers over real pipes and the engine CLI."""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

ENGINE = [sys.executable, "-m", "tokattr.cli"]
WORKER = [sys.executable, "-m", "tokattr_bridge"]


def engine_available() -> bool:
    return (
        subprocess.run(
            ENGINE + ["--version"], capture_output=True, text=True
        ).returncode
        == 0
    )


requires_engine = pytest.mark.skipif(
    not engine_available(), reason="tokattr engine CLI not installed"
)


class WorkerProcess:
    """Raw NDJSON conversation with a worker subprocess."""

    def __init__(self, args: list[str]):
        self.proc = subprocess.Popen(
            WORKER + args,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            encoding="utf-8",
        )

    def send_line(self, line: str) -> None:
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def send(self, obj: dict) -> None:
        self.send_line(json.dumps(obj))

    def recv(self, timeout: float = 10.0) -> dict:
        import select

        ready, _, _ = select.select([self.proc.stdout], [], [], timeout)
        if not ready:
            self.proc.kill()
            raise TimeoutError("worker did not answer in time")
        line = self.proc.stdout.readline()
        if not line:
            raise EOFError("worker closed stdout")
        return json.loads(line)

    def shutdown(self, timeout: float = 10.0) -> int:
        try:
            self.send({"op": "shutdown"})
        except (BrokenPipeError, OSError):
            pass
        try:
            return self.proc.wait(timeout=timeout)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            raise

    def kill(self) -> None:
        if self.proc.poll() is None:
            self.proc.kill()
            self.proc.wait(timeout=5)


@pytest.fixture
def spec_file(tmp_path) -> Path:
    spec = {
        "kind": "keyword-softmax",
        "classes": ["c0", "c1", "c2"],
        "base": [0.0, 0.0, 0.0],
        "weights": {
            "c0": {"alpha": 1.5, "beta": -0.5},
            "c1": {"beta": 2.0},
            "c2": {"gamma": 1.0, "alpha": -1.0},
        },
        "output_mode": "probability",
        "identity": "demo-softmax",
    }
    path = tmp_path / "model.json"
    path.write_text(json.dumps(spec))
    return path


def run_engine(*argv: str, timeout: float = 180.0) -> subprocess.CompletedProcess:
    return subprocess.run(
        ENGINE + list(argv), capture_output=True, text=True, timeout=timeout
    )


def make_bundle(root: Path, utterances: int = 120) -> Path:
    """Synthesize the engine's demo corpus and a softmax twin of its model."""
    result = run_engine("synth", "--out-dir", str(root), "--utterances", str(utterances))
    assert result.returncode == 0, result.stderr
    spec = json.loads((root / "model.json").read_text())
    spec["kind"] = "keyword-softmax"
    spec["output_mode"] = "probability"
    softmax = root / "model_softmax.json"
    softmax.write_text(json.dumps(spec))
    return softmax
