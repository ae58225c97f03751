"""Pure-state entanglement measures built on the quadric machinery.

``CONCURRENCE`` sums the Segre generators (single-position swaps) and, for
two subsystems, reduces to the usual concurrence ``2|det|`` on qubits.
``FMEASURE`` sums every swap set up to complement and therefore dominates
the concurrence on every state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .segre import Kind, residual_sum, swap_classes, quadric_norms
from .states import PureState, require_normalized


class MeasureKind(str, enum.Enum):
    CONCURRENCE = "CONCURRENCE"
    FMEASURE = "FMEASURE"

    @property
    def quadrics(self) -> Kind:
        return Kind.SEGRE if self is MeasureKind.CONCURRENCE else Kind.FULL


@dataclass(frozen=True)
class MeasureSpec:
    kind: MeasureKind = MeasureKind.CONCURRENCE
    normalization: float = 1.0

    def __post_init__(self):
        if not isinstance(self.kind, MeasureKind):
            try:
                object.__setattr__(self, "kind", MeasureKind(str(self.kind).upper()))
            except ValueError as exc:
                raise DomainError(f"unknown measure kind {self.kind!r}") from exc
        if not (self.normalization > 0 and math.isfinite(self.normalization)):
            raise DomainError(f"normalization must be a positive finite number, got {self.normalization!r}")

    @property
    def symbol(self) -> str:
        return "C" if self.kind is MeasureKind.CONCURRENCE else "F"


CONCURRENCE = MeasureSpec(MeasureKind.CONCURRENCE)
FMEASURE = MeasureSpec(MeasureKind.FMEASURE)


def pure_measure(state: PureState, spec: MeasureSpec = CONCURRENCE) -> float:
    require_normalized(state)
    if state.shape.m < 2:
        raise ShapeError("entanglement measures need at least two subsystems")
    return math.sqrt(spec.normalization * residual_sum(state, spec.kind.quadrics))


def unnormalized_measure(vectors: np.ndarray, dims: tuple, spec: MeasureSpec) -> np.ndarray:
    """Measure of each row of ``vectors`` times its squared norm.

    The quadrics are homogeneous of degree two, so for ``w = sqrt(p) psi``
    this returns ``p * measure(psi)``; used by the roof optimizer, which works
    with subnormalized ensemble vectors.
    """
    classes = swap_classes(len(dims), spec.kind.quadrics)
    return math.sqrt(spec.normalization) * quadric_norms(vectors, dims, classes)


def wootters_pure(state: PureState) -> float:
    """Two-qubit concurrence ``2 |a_11 a_22 - a_12 a_21|``."""
    if state.shape.dims != (2, 2):
        raise ShapeError(f"Wootters concurrence needs shape (2, 2), got {list(state.shape.dims)}")
    require_normalized(state)
    a = state.amplitudes
    return 2.0 * abs(a[0] * a[3] - a[1] * a[2])
