"""Multipartite pure states, density matrices and ensembles.

Amplitudes are stored flattened row-major with the first subsystem index
slowest.  User-facing multi-indices are 1-based; everything internal is
0-based numpy indexing.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DomainError, FormatError, NormalizationError, ShapeError

NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-10
PSD_FLOOR = -1e-9
TRACE_TOL = 1e-10
ENSEMBLE_RECON_TOL = 1e-8


@dataclass(frozen=True)
class SystemShape:
    """Local dimensions ``(N_1, ..., N_m)`` of a composite system."""

    dims: tuple

    def __init__(self, dims: Iterable[int]):
        try:
            dims = tuple(int(n) for n in dims)
        except (TypeError, ValueError) as exc:
            raise ShapeError(f"dims must be integers, got {dims!r}") from exc
        if len(dims) < 1:
            raise ShapeError("a system needs at least one subsystem")
        for j, n in enumerate(dims):
            if n < 2:
                raise ShapeError(f"subsystem {j + 1} has dimension {n}; every N_j must be >= 2")
        object.__setattr__(self, "dims", dims)

    @property
    def m(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    @property
    def reduced_dims(self) -> tuple:
        """Projective dimensions ``(N_1 - 1, ..., N_m - 1)`` of the factors."""
        return tuple(n - 1 for n in self.dims)

    @property
    def strides(self) -> tuple:
        out = []
        acc = 1
        for n in reversed(self.dims):
            out.append(acc)
            acc *= n
        return tuple(reversed(out))

    def __iter__(self):
        return iter(self.dims)

    def __len__(self):
        return len(self.dims)

    def __repr__(self):
        return f"SystemShape({list(self.dims)})"


def as_shape(shape) -> SystemShape:
    return shape if isinstance(shape, SystemShape) else SystemShape(shape)


def multi_index_to_offset(shape, idx: Sequence[int]) -> int:
    """Flattened offset of the 1-based multi-index ``idx``.

    >>> multi_index_to_offset((2, 3, 2), (2, 3, 1))
    10
    """
    shape = as_shape(shape)
    idx = tuple(idx)
    if len(idx) != shape.m:
        raise IndexError(f"expected {shape.m} indices, got {len(idx)}")
    offset = 0
    for axis, (k, n, stride) in enumerate(zip(idx, shape.dims, shape.strides)):
        if not 1 <= k <= n:
            raise IndexError(f"index {k} out of range 1..{n} on axis {axis + 1}")
        offset += (k - 1) * stride
    return offset


def offset_to_multi_index(shape, offset: int) -> tuple:
    """Inverse of :func:`multi_index_to_offset` (returns 1-based indices)."""
    shape = as_shape(shape)
    if not 0 <= offset < shape.total:
        raise IndexError(f"offset {offset} out of range 0..{shape.total - 1}")
    idx = []
    for stride in shape.strides:
        q, offset = divmod(offset, stride)
        idx.append(q + 1)
    return tuple(idx)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.flags.writeable = False
    return a


class PureState:
    """Amplitude vector over a :class:`SystemShape`.

    The state need not be normalized; operations that require it check
    :attr:`is_normalized` and raise :class:`NormalizationError`.
    """

    __slots__ = ("shape", "amplitudes")

    def __init__(self, shape, amplitudes):
        shape = as_shape(shape)
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != shape.total:
            raise ShapeError(f"{amps.size} amplitudes for shape {list(shape.dims)} (need {shape.total})")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "amplitudes", _frozen(amps))

    def __setattr__(self, name, value):
        raise AttributeError("PureState is immutable")

    @classmethod
    def from_tensor(cls, tensor) -> "PureState":
        tensor = np.asarray(tensor)
        return cls(tensor.shape, tensor.reshape(-1))

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.shape.dims)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm - 1.0) <= NORM_TOL

    def normalized(self) -> "PureState":
        n = self.norm
        if n == 0:
            raise NormalizationError("cannot normalize the zero vector")
        return PureState(self.shape, self.amplitudes / n)

    def amplitude(self, *idx: int) -> complex:
        """Amplitude at a 1-based multi-index."""
        return complex(self.amplitudes[multi_index_to_offset(self.shape, idx)])

    def __eq__(self, other):
        if not isinstance(other, PureState):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.amplitudes, other.amplitudes)

    def __repr__(self):
        return f"PureState(dims={list(self.shape.dims)}, norm={self.norm:.6g})"


def require_normalized(state: PureState) -> None:
    if not state.is_normalized:
        raise NormalizationError(f"state has norm {state.norm!r}, expected 1 within {NORM_TOL}")


class DensityMatrix:
    """Hermitian, PSD, unit-trace matrix on the product space."""

    __slots__ = ("shape", "entries")

    def __init__(self, shape, entries, *, check: bool = True):
        shape = as_shape(shape)
        mat = np.asarray(entries, dtype=np.complex128)
        if mat.shape != (shape.total, shape.total):
            raise ShapeError(f"matrix of shape {mat.shape} for dims {list(shape.dims)}")
        if check:
            _check_density(mat)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "entries", _frozen(mat))

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    def eigh(self):
        """Eigenvalues (ascending) and eigenvectors of the Hermitian part."""
        h = 0.5 * (self.entries + self.entries.conj().T)
        return np.linalg.eigh(h)

    def rank(self, rel_tol: float = 1e-12) -> int:
        w = self.eigh()[0]
        return int(np.sum(w > rel_tol * w[-1]))

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.entries, other.entries)

    def __repr__(self):
        return f"DensityMatrix(dims={list(self.shape.dims)})"


def _check_density(mat: np.ndarray) -> None:
    if np.max(np.abs(mat - mat.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise DomainError("matrix is not Hermitian")
    tr = np.trace(mat)
    if abs(tr - 1.0) > TRACE_TOL:
        raise NormalizationError(f"trace {tr.real!r} deviates from 1")
    w = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
    if w[0] < PSD_FLOOR:
        raise DomainError(f"matrix has negative eigenvalue {w[0]!r}")


class Ensemble:
    """Probability-weighted list of pure states on one shape."""

    __slots__ = ("members",)

    def __init__(self, members: Iterable):
        members = tuple((float(p), psi) for p, psi in members)
        if not members:
            raise DomainError("an ensemble needs at least one member")
        shape = members[0][1].shape
        for i, (p, psi) in enumerate(members):
            if psi.shape != shape:
                raise ShapeError(f"member {i} has dims {list(psi.shape.dims)}, expected {list(shape.dims)}")
            if p < 0:
                raise DomainError(f"member {i} has negative probability {p}")
        total = math.fsum(p for p, _ in members)
        if abs(total - 1.0) > NORM_TOL:
            raise NormalizationError(f"probabilities sum to {total!r}")
        object.__setattr__(self, "members", members)

    def __setattr__(self, name, value):
        raise AttributeError("Ensemble is immutable")

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @property
    def shape(self) -> SystemShape:
        return self.members[0][1].shape

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for p, _ in self.members])

    def density_matrix(self) -> DensityMatrix:
        mat = sum(p * np.outer(psi.amplitudes, psi.amplitudes.conj()) for p, psi in self.members)
        return DensityMatrix(self.shape, mat)

    def reproduces(self, rho: DensityMatrix, tol: float = ENSEMBLE_RECON_TOL) -> bool:
        mat = sum(p * np.outer(psi.amplitudes, psi.amplitudes.conj()) for p, psi in self.members)
        return bool(np.max(np.abs(mat - rho.entries)) <= tol)

    def __repr__(self):
        return f"Ensemble(n={len(self.members)}, dims={list(self.shape.dims)})"


def density_from_pure(state: PureState) -> DensityMatrix:
    require_normalized(state)
    a = state.amplitudes
    return DensityMatrix(state.shape, np.outer(a, a.conj()))


def reduced_density(state: PureState, keep: int) -> DensityMatrix:
    """Partial trace of ``|psi><psi|`` onto the 1-based factor ``keep``."""
    require_normalized(state)
    m = state.shape.m
    if not 1 <= keep <= m:
        raise IndexError(f"subsystem {keep} out of range 1..{m}")
    t = np.moveaxis(state.tensor, keep - 1, 0).reshape(state.shape.dims[keep - 1], -1)
    rho = t @ t.conj().T
    return DensityMatrix((state.shape.dims[keep - 1],) if m > 1 else state.shape, rho)


# ---------------------------------------------------------------------------
# Standard states


def basis_state(shape, idx: Sequence[int]) -> PureState:
    """Computational basis state ``|k_1 ... k_m>`` with 1-based labels."""
    shape = as_shape(shape)
    amps = np.zeros(shape.total, dtype=np.complex128)
    amps[multi_index_to_offset(shape, idx)] = 1.0
    return PureState(shape, amps)


def bell_state(sign: int = 1) -> PureState:
    """``(|11> + sign |22>)/sqrt(2)`` on two qubits."""
    s = 1 / math.sqrt(2)
    return PureState((2, 2), [s, 0, 0, sign * s])


def ghz_state(m: int = 3, n: int = 2) -> PureState:
    shape = SystemShape((n,) * m)
    amps = np.zeros(shape.total, dtype=np.complex128)
    for k in range(1, n + 1):
        amps[multi_index_to_offset(shape, (k,) * m)] = 1 / math.sqrt(n)
    return PureState(shape, amps)


def w_state(m: int = 3) -> PureState:
    shape = SystemShape((2,) * m)
    amps = np.zeros(shape.total, dtype=np.complex128)
    for j in range(m):
        idx = [1] * m
        idx[m - 1 - j] = 2
        amps[multi_index_to_offset(shape, idx)] = 1 / math.sqrt(m)
    return PureState(shape, amps)


def random_pure(shape, rng: np.random.Generator) -> PureState:
    shape = as_shape(shape)
    z = rng.standard_normal(shape.total) + 1j * rng.standard_normal(shape.total)
    return PureState(shape, z / np.linalg.norm(z))


def random_density(shape, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random density matrix ``G G^dagger / tr`` from a Ginibre matrix with ``rank`` columns."""
    shape = as_shape(shape)
    rank = shape.total if rank is None else rank
    g = rng.standard_normal((shape.total, rank)) + 1j * rng.standard_normal((shape.total, rank))
    mat = g @ g.conj().T
    mat = 0.5 * (mat + mat.conj().T)
    return DensityMatrix(shape, mat / np.trace(mat).real)


def werner(p: float) -> DensityMatrix:
    """``p |Bell><Bell| + (1 - p) I/4`` on two qubits."""
    b = bell_state().amplitudes
    return DensityMatrix((2, 2), p * np.outer(b, b.conj()) + (1 - p) * np.eye(4) / 4)


# ---------------------------------------------------------------------------
# JSON serialization

StateLike = Union[PureState, DensityMatrix, Ensemble]


def to_json_obj(obj: StateLike) -> dict:
    if isinstance(obj, PureState):
        return {
            "dims": list(obj.shape.dims),
            "re": obj.amplitudes.real.tolist(),
            "im": obj.amplitudes.imag.tolist(),
        }
    if isinstance(obj, DensityMatrix):
        return {
            "dims": list(obj.shape.dims),
            "matrix_re": obj.entries.real.tolist(),
            "matrix_im": obj.entries.imag.tolist(),
        }
    if isinstance(obj, Ensemble):
        return {"members": [{"p": p, "state": to_json_obj(psi)} for p, psi in obj.members]}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_state(obj: StateLike) -> str:
    return json.dumps(to_json_obj(obj))


def save_state(obj: StateLike, path) -> None:
    Path(path).write_text(dumps_state(obj) + "\n")


def _float_list(values, where: str) -> np.ndarray:
    if not isinstance(values, list):
        raise FormatError(f"{where}: expected a list of numbers")
    out = np.empty(len(values))
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise FormatError(f"{where}[{i}]: expected a number, got {v!r}")
        if not math.isfinite(v):
            raise FormatError(f"{where}[{i}]: non-finite entry {v!r}")
        out[i] = v
    return out


def _parse_dims(obj: dict, where: str) -> SystemShape:
    dims = obj.get("dims")
    if not isinstance(dims, list) or not all(isinstance(n, int) and not isinstance(n, bool) for n in dims):
        raise FormatError(f"{where}dims: expected a list of integers")
    try:
        return SystemShape(dims)
    except ShapeError as exc:
        raise FormatError(f"{where}dims: {exc}") from exc


def from_json_obj(obj, where: str = "") -> StateLike:
    if not isinstance(obj, dict):
        raise FormatError(f"{where or 'document'}: expected a JSON object")
    if "members" in obj:
        members = obj["members"]
        if not isinstance(members, list):
            raise FormatError(f"{where}members: expected a list")
        parsed = []
        for i, item in enumerate(members):
            loc = f"{where}members[{i}]."
            if not isinstance(item, dict) or "p" not in item or "state" not in item:
                raise FormatError(f"{loc[:-1]}: expected an object with 'p' and 'state'")
            p = _float_list([item["p"]], f"{loc}p")[0]
            psi = from_json_obj(item["state"], f"{loc}state.")
            if not isinstance(psi, PureState):
                raise FormatError(f"{loc}state: ensemble members must be pure states")
            parsed.append((p, psi))
        try:
            return Ensemble(parsed)
        except (DomainError, NormalizationError, ShapeError) as exc:
            raise FormatError(f"{where}members: {exc}") from exc
    shape = _parse_dims(obj, where)
    if "re" in obj or "im" in obj:
        re = _float_list(obj.get("re"), f"{where}re")
        im = _float_list(obj.get("im"), f"{where}im")
        if re.size != shape.total or im.size != shape.total:
            raise FormatError(
                f"{where}re/im: lengths {re.size}/{im.size} do not match dims product {shape.total}"
            )
        return PureState(shape, re + 1j * im)
    if "matrix_re" in obj or "matrix_im" in obj:
        parts = []
        for key in ("matrix_re", "matrix_im"):
            m = obj.get(key)
            if not isinstance(m, list) or len(m) != shape.total:
                raise FormatError(f"{where}{key}: expected {shape.total} rows")
            block = np.empty((shape.total, shape.total))
            for i, r in enumerate(m):
                row = _float_list(r, f"{where}{key}[{i}]")
                if row.size != shape.total:
                    raise FormatError(f"{where}{key}[{i}]: expected {shape.total} entries")
                block[i] = row
            parts.append(block)
        mat = parts[0] + 1j * parts[1]
        try:
            return DensityMatrix(shape, mat)
        except (DomainError, NormalizationError) as exc:
            raise FormatError(f"{where}matrix: {exc}") from exc
    raise FormatError(f"{where or 'document'}: expected 're'/'im', 'matrix_re'/'matrix_im' or 'members'")


def loads_state(text: str) -> StateLike:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return from_json_obj(obj)


def load_state(source) -> StateLike:
    """Load a state from a path or from literal JSON text."""
    if isinstance(source, (str, os.PathLike)) and not str(source).lstrip().startswith(("{", "[")):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise FormatError(f"cannot read {source}: {exc}") from exc
        return loads_state(text)
    return loads_state(str(source))
