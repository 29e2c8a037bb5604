"""Active tape for the current thread/task.

Ops record onto the tape set here, so model code does not thread a tape
argument through every call. Each thread starts with no tape (inference).
"""

from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator

from autodiff.tensor import Tape

_current_tape: ContextVar[Tape | None] = ContextVar("tape", default=None)


def set_tape(tape: Tape | None) -> None:
    """Set the tape ops record onto."""
    _current_tape.set(tape)


def get_tape() -> Tape | None:
    """Get the active tape (None when not recording)."""
    return _current_tape.get()


def clear_tape() -> None:
    """Stop recording."""
    _current_tape.set(None)


@contextmanager
def recording(tape: Tape | None) -> Iterator[Tape | None]:
    """Record onto ``tape`` inside the block; ``None`` keeps the current one."""
    if tape is None:
        yield get_tape()
        return
    token = _current_tape.set(tape)
    try:
        yield tape
    finally:
        _current_tape.reset(token)


@contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate without recording."""
    token = _current_tape.set(None)
    try:
        yield
    finally:
        _current_tape.reset(token)
