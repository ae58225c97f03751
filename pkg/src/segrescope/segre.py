"""Segre embedding, its defining quadrics and separability residuals.

A quadric is the binomial ``a_K a_L - a_K' a_L'`` where ``K'`` (``L'``) is
``K`` (``L``) with the entries on the swap set ``S`` taken from the other
multi-index.  Single-position swaps generate the Segre ideal; the FULL
family admits every nonempty proper swap set.  Swapping on ``S`` or on its
complement yields the same binomial, so swap sets are only ever used up to
complement.
"""

from __future__ import annotations

import enum
import functools
import itertools
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateFactorError, FormatError, ShapeError
from .states import (
    PureState,
    SystemShape,
    as_shape,
    multi_index_to_offset,
    require_normalized,
)

SEPARABILITY_TOL = 1e-8


class Kind(str, enum.Enum):
    SEGRE = "SEGRE"
    FULL = "FULL"


def _as_kind(kind) -> Kind:
    if isinstance(kind, Kind):
        return kind
    try:
        return Kind(str(kind).upper())
    except ValueError as exc:
        raise ValueError(f"unknown quadric kind {kind!r}") from exc


@dataclass(frozen=True)
class Quadric:
    """Binomial ``a_K a_L - a_K' a_L'``; indices and positions are 1-based."""

    left: tuple
    right: tuple
    swap: tuple

    def swapped(self) -> tuple:
        """The pair ``(K', L')``."""
        kp = tuple(l if j + 1 in self.swap else k for j, (k, l) in enumerate(zip(self.left, self.right)))
        lp = tuple(k if j + 1 in self.swap else l for j, (k, l) in enumerate(zip(self.left, self.right)))
        return kp, lp

    def is_trivial(self) -> bool:
        kp, lp = self.swapped()
        return {self.left, self.right} == {kp, lp}

    def evaluate(self, state: PureState) -> complex:
        a = state.amplitudes
        off = functools.partial(multi_index_to_offset, state.shape)
        kp, lp = self.swapped()
        return complex(a[off(self.left)] * a[off(self.right)] - a[off(kp)] * a[off(lp)])

    def monomials(self) -> frozenset:
        """Canonical key: the binomial's two monomials, order and sign forgotten."""
        kp, lp = self.swapped()
        return frozenset({tuple(sorted((self.left, self.right))), tuple(sorted((kp, lp)))})

    def to_json_obj(self) -> dict:
        return {"K": list(self.left), "L": list(self.right), "S": list(self.swap)}


def swap_classes(m: int, kind) -> list:
    """Canonical swap sets (1-based, sorted) modulo complement.

    The representative is the smaller of ``S`` and its complement; when both
    have size ``m/2`` the one containing position 1 is kept.
    """
    kind = _as_kind(kind)
    if m < 2:
        raise ShapeError("quadrics need at least two subsystems")
    positions = range(1, m + 1)
    sizes = [1] if kind is Kind.SEGRE else range(1, m // 2 + 1)
    out = []
    for size in sizes:
        for s in itertools.combinations(positions, size):
            if 2 * size == m and 1 not in s:
                continue
            out.append(s)
    return out


@dataclass(frozen=True)
class QuadricSet:
    shape: SystemShape
    kind: Kind
    items: tuple

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def to_json_obj(self) -> dict:
        return {
            "dims": list(self.shape.dims),
            "kind": self.kind.value,
            "items": [q.to_json_obj() for q in self.items],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json(cls, text: str) -> "QuadricSet":
        try:
            obj = json.loads(text)
            shape = SystemShape(obj["dims"])
            kind = _as_kind(obj["kind"])
            items = tuple(Quadric(tuple(q["K"]), tuple(q["L"]), tuple(q["S"])) for q in obj["items"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed quadric set: {exc}") from exc
        return cls(shape, kind, items)


def generate_quadrics(shape, kind=Kind.SEGRE) -> QuadricSet:
    """Deduplicated, nonzero quadrics of the given kind in deterministic order.

    Enumeration runs over canonical swap sets, then ``K`` and ``L`` in
    lexicographic order; the first representative of each binomial is kept.
    """
    shape = as_shape(shape)
    kind = _as_kind(kind)
    if shape.m < 2:
        raise ShapeError("a single subsystem has no nontrivial quadrics")
    box = list(itertools.product(*(range(1, n + 1) for n in shape.dims)))
    seen = set()
    items = []
    for s in swap_classes(shape.m, kind):
        for k in box:
            for l in box:
                q = Quadric(k, l, s)
                if q.is_trivial():
                    continue
                key = q.monomials()
                if key in seen:
                    continue
                seen.add(key)
                items.append(q)
    return QuadricSet(shape, kind, tuple(items))


def segre_embed(factors: Sequence) -> PureState:
    """Decomposable tensor ``v_1 (x) ... (x) v_m``."""
    vecs = [np.asarray(v, dtype=np.complex128).reshape(-1) for v in factors]
    for j, v in enumerate(vecs):
        if not np.any(v):
            raise DegenerateFactorError(f"factor {j + 1} is zero")
    return PureState([v.size for v in vecs], functools.reduce(np.kron, vecs))


@functools.lru_cache(maxsize=256)
def _swap_gather(dims: tuple, classes: tuple) -> np.ndarray:
    """Gather indices mapping ``a (x) a`` (flattened) to its swapped copy, one row per class."""
    m = len(dims)
    n = math.prod(dims)
    grid = np.arange(n * n).reshape(dims + dims)
    rows = []
    for s in classes:
        perm = list(range(2 * m))
        for j in s:
            perm[j - 1], perm[m + j - 1] = perm[m + j - 1], perm[j - 1]
        rows.append(grid.transpose(perm).reshape(-1))
    out = np.stack(rows)
    out.flags.writeable = False
    return out


def quadric_sq_moduli(tensors: np.ndarray, dims: tuple, classes) -> np.ndarray:
    """Squared moduli of every ordered quadric value, per batch row.

    ``tensors`` has shape ``(batch, N)``; the result has shape
    ``(batch, len(classes), N * N)`` in flattened ``(K, L)`` order.
    """
    b, n = tensors.shape
    gather = _swap_gather(tuple(dims), tuple(map(tuple, classes)))
    outer = (tensors[:, :, None] * tensors[:, None, :]).reshape(b, 1, n * n)
    diff = outer - outer[:, 0, gather]
    return diff.real ** 2 + diff.imag ** 2


def quadric_norms(tensors: np.ndarray, dims: tuple, classes: list) -> np.ndarray:
    """``sqrt(sum |quadric|^2)`` per row of ``tensors``; no normalization is assumed."""
    sq = quadric_sq_moduli(tensors, dims, classes)
    return np.sqrt(sq.reshape(sq.shape[0], -1).sum(axis=1))


def residual_sum(state: PureState, kind) -> float:
    """Compensated sum of squared quadric values with ordered-tuple multiplicity."""
    classes = swap_classes(state.shape.m, kind)
    sq = quadric_sq_moduli(state.amplitudes[None, :], state.shape.dims, classes)
    return math.fsum(sq.ravel())


def separability_residual(state: PureState, kind=Kind.SEGRE) -> float:
    require_normalized(state)
    return math.sqrt(residual_sum(state, kind))


def is_separable(state: PureState, tol: float = SEPARABILITY_TOL) -> bool:
    if not tol > 0:
        raise ValueError("tol must be positive")
    return separability_residual(state, Kind.SEGRE) <= tol


def partition_reshape(state: PureState, split: int) -> np.ndarray:
    """Amplitudes as an ``(N_1...N_l) x (N_{l+1}...N_m)`` matrix."""
    m = state.shape.m
    if not 1 <= split < m:
        raise ShapeError(f"split must satisfy 1 <= l < {m}, got {split}")
    rows = math.prod(state.shape.dims[:split])
    return np.array(state.amplitudes.reshape(rows, -1))
