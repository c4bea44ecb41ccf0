"""Exception hierarchy shared across the pipeline stages.

The CLI maps these onto exit codes: ValidationError -> 2, everything
else raised out of a stage -> 3.
"""

from __future__ import annotations


class TokattrError(Exception):
    """Base class for all package errors."""


class ValidationError(TokattrError):
    """Bad configuration, malformed input file, or violated precondition."""


class EmptyUtteranceError(ValidationError):
    """Tokenization produced no tokens."""


class CapExceededError(ValidationError):
    """Utterance length exceeds the configured cap for the chosen method."""

    def __init__(self, method: str, n_tokens: int, cap: int):
        self.method = method
        self.n_tokens = n_tokens
        self.cap = cap
        hint = "permutation" if method == "exact" else "permutation or partition"
        super().__init__(
            f"{method} supports at most {cap} tokens, got {n_tokens}; "
            f"use the {hint} method for longer utterances"
        )


class AdapterFailure(TokattrError):
    """A model adapter failed to evaluate a batch.

    ``batch_indices`` identifies which inputs of the failed call were
    affected (all of them, for a whole-batch transport failure).
    """

    def __init__(self, message: str, batch_indices: list[int] | None = None):
        super().__init__(message)
        self.batch_indices = list(batch_indices) if batch_indices is not None else []


class StageError(TokattrError):
    """A pipeline stage failed after validation."""
