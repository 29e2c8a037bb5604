"""Minimal reverse-mode autodiff over numpy.

Ops record onto a ``Tape`` when any input requires a gradient; ``backward``
walks the tape in reverse and applies each op's registered VJP.
"""

from autodiff import ops  # noqa: F401  (registers op kinds)
from autodiff.context import no_grad, recording
from autodiff.gradcheck import backward, grad_check, grad_check_tensors
from autodiff.ops import forward_eval
from autodiff.registry import OP_REGISTRY, lookup
from autodiff.tensor import Node, Tape, Tensor, as_tensor

__all__ = [
    "Tensor",
    "Tape",
    "Node",
    "as_tensor",
    "forward_eval",
    "backward",
    "grad_check",
    "grad_check_tensors",
    "recording",
    "no_grad",
    "OP_REGISTRY",
    "lookup",
]
