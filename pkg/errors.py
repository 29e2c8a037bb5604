"""Error types for the articulatory vocoder.

Every failure raised by library code derives from ``VocoderError`` so the CLI
can report it on a single ``error:`` line. The secondary bases keep the
builtin meaning (``ValueError`` for bad arguments, ``ArithmeticError`` for
NaN/Inf) so callers that only know the builtins still catch them.
"""

from __future__ import annotations


class VocoderError(Exception):
    """Base class for all vocoder errors."""

    kind = "vocoder-error"


class InvalidArgumentError(VocoderError, ValueError):
    kind = "invalid-argument"


class ShapeError(VocoderError, ValueError):
    kind = "shape-error"

    def __init__(self, message: str, *shapes: tuple[int, ...]):
        if shapes:
            message = f"{message}: " + " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(message)
        self.shapes = shapes


class NumericError(VocoderError, ArithmeticError):
    kind = "numeric-error"


class ContractViolation(VocoderError, AssertionError):
    kind = "contract-violation"


class UnsupportedFormatError(VocoderError, ValueError):
    kind = "unsupported-format"

    def __init__(self, message: str, path: str | None = None, offset: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if offset is not None:
                where += f" @ byte {offset}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.offset = offset


class ConfigError(VocoderError, ValueError):
    kind = "config-error"


class TrainingDivergedError(NumericError):
    """Raised when a training loss turns non-finite."""

    kind = "training-diverged"

    def __init__(self, message: str, step: int, batch_ids: list[str]):
        super().__init__(f"{message} (step {step}, batch {batch_ids})")
        self.step = step
        self.batch_ids = batch_ids


class CropTooShort(VocoderError):
    """Skip signal: the utterance has fewer frames than the requested crop."""

    kind = "crop-too-short"
