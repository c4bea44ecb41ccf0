"""Worker entry point: load the classifier, then serve stdio until shutdown.

The classifier must load before the first handshake is answered, so a
broken model reference fails the launch instead of wedging the engine.
"""

from __future__ import annotations

import argparse
import json
import sys

from .protocol import FaultInjection, serve
from .stub import StubClassifier


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="tokattr-bridge",
        description="stdio NDJSON classification worker",
    )
    backend = parser.add_mutually_exclusive_group(required=True)
    backend.add_argument("--stub", metavar="SPEC_JSON",
                         help="scripted classifier from a builtin-model JSON file")
    backend.add_argument("--hf", metavar="MODEL_REF",
                         help="transformers sequence-classification checkpoint")
    parser.add_argument("--max-length", type=int, default=256,
                        help="token truncation length for --hf")
    fault = parser.add_argument_group("fault injection (integration tests)")
    fault.add_argument("--die-after", type=int, default=None,
                       help="exit abruptly after N predict requests")
    fault.add_argument("--garbage-after", type=int, default=None,
                       help="emit a non-JSON line after N predict requests")
    fault.add_argument("--delay", type=float, default=0.0,
                       help="sleep this many seconds before each predict")
    args = parser.parse_args(argv)

    try:
        if args.stub:
            classifier = StubClassifier.from_file(args.stub)
        else:
            from .hf import HfClassifier

            classifier = HfClassifier(args.hf, max_length=args.max_length)
    except Exception as exc:
        print(json.dumps({"op": "error", "message": f"model load failed: {exc}"}),
              file=sys.stderr, flush=True)
        return 1

    faults = FaultInjection(die_after=args.die_after, garbage_after=args.garbage_after,
                            delay=args.delay)
    return serve(classifier, faults=faults)


if __name__ == "__main__":
    sys.exit(main())
