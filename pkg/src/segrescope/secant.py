"""Numerical secant varieties of the Segre variety.

Dimensions come from Terracini's lemma: the affine tangent space of the
k-th secant at a general point is the span of the tangent spaces of the
Segre variety at the k+1 points involved.  Membership of a given tensor is
tested constructively with an alternating-least-squares CP fit.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import DegenerateFactorError, DomainError, NotFilledError, ResourceError
from .segre import Kind, _as_kind
from .states import PureState, SystemShape, as_shape

MAX_TOTAL = 4096
RANK_TOL = 1e-8
DEFAULT_TRIALS = 3
FACTOR_NORM_CAP = 1e8


@dataclass(frozen=True)
class SecantReport:
    shape: SystemShape
    k: int
    ambient_dim: int
    span_dim: int
    variety_dim: int
    expected_dim: int
    computed_dim: int
    defect: int
    fills: bool
    trials: int
    seed: int
    trial_ranks: tuple = ()
    variety_kind: Kind = Kind.SEGRE

    @property
    def rank_stable(self) -> bool:
        """True when every trial produced the same tangent-span rank."""
        return len(set(self.trial_ranks)) <= 1

    def to_json_obj(self) -> dict:
        return {
            "dims": list(self.shape.dims),
            "k": self.k,
            "ambient_dim": self.ambient_dim,
            "expected_dim": self.expected_dim,
            "computed_dim": self.computed_dim,
            "defect": self.defect,
            "fills": self.fills,
            "trials": self.trials,
            "seed": self.seed,
            "variety_dim": self.variety_dim,
            "span_dim": self.span_dim,
            "trial_ranks": list(self.trial_ranks),
        }


def expected_secant_dim(d: int, k: int, span_dim: int) -> int:
    """``min(M', (k+1)(d+1) - 1)`` for a variety of dimension ``d`` spanning a ``P^M'``."""
    if d < 0 or k < 0 or span_dim < 0:
        raise DomainError(f"negative argument in expected_secant_dim(d={d}, k={k}, M'={span_dim})")
    if span_dim < d:
        raise DomainError(f"span dimension {span_dim} is smaller than the variety dimension {d}")
    return min(span_dim, (k + 1) * (d + 1) - 1)


def _complement_basis(v: np.ndarray) -> np.ndarray:
    """Orthonormal basis (as columns) of the orthogonal complement of ``v``."""
    n = v.size
    q, _ = np.linalg.qr(np.column_stack([v, np.eye(n, dtype=np.complex128)]))
    return q[:, 1:n]


def tangent_basis_at(factors) -> np.ndarray:
    """Spanning set of the affine tangent space of the Segre cone at ``v_1 (x) ... (x) v_m``.

    The first column is the point itself; then, factor by factor, the point
    with ``v_j`` replaced by each vector of an orthonormal basis of
    ``v_j``'s orthogonal complement.
    """
    vecs = [np.asarray(v, dtype=np.complex128).reshape(-1) for v in factors]
    for j, v in enumerate(vecs):
        if not np.any(v):
            raise DegenerateFactorError(f"factor {j + 1} is zero")
    cols = [functools.reduce(np.kron, vecs)]
    for j, v in enumerate(vecs):
        for w in _complement_basis(v).T:
            cols.append(functools.reduce(np.kron, vecs[:j] + [w] + vecs[j + 1:]))
    return np.column_stack(cols)


def _random_factor(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return z / np.linalg.norm(z)


def numerical_rank(mat: np.ndarray, rank_tol: float = RANK_TOL) -> int:
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def secant_dimension(
    shape,
    k: int,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    rank_tol: float = RANK_TOL,
    variety_kind=Kind.SEGRE,
) -> SecantReport:
    """Projective dimension of ``Sec_k`` of the Segre variety of ``shape``.

    Trial ``t`` draws its points from ``default_rng([seed, t])`` in order, so
    the k+1 points used for ``k`` are a prefix of those used for ``k + 1``.
    """
    shape = as_shape(shape)
    if _as_kind(variety_kind) is not Kind.SEGRE:
        raise DomainError("secant dimensions are only implemented for the Segre variety")
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if shape.total > MAX_TOTAL:
        raise ResourceError(f"ambient size {shape.total} exceeds the desk-scale guard {MAX_TOTAL}")
    d = sum(shape.reduced_dims)
    ambient = shape.total - 1
    expected = expected_secant_dim(d, k, ambient)
    ranks = []
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        blocks = [tangent_basis_at([_random_factor(rng, n) for n in shape.dims]) for _ in range(k + 1)]
        ranks.append(numerical_rank(np.hstack(blocks), rank_tol))
    computed = max(ranks) - 1
    return SecantReport(
        shape=shape,
        k=k,
        ambient_dim=ambient,
        span_dim=ambient,
        variety_dim=d,
        expected_dim=expected,
        computed_dim=computed,
        defect=expected - computed,
        fills=computed == ambient,
        trials=trials,
        seed=seed,
        trial_ranks=tuple(ranks),
    )


def least_filling_k(
    shape, k_max: int, trials: int = DEFAULT_TRIALS, seed: int = 0, rank_tol: float = RANK_TOL
) -> int:
    if k_max < 0:
        raise DomainError("k_max must be >= 0")
    report = None
    for k in range(k_max + 1):
        report = secant_dimension(shape, k, trials=trials, seed=seed, rank_tol=rank_tol)
        if report.fills:
            return k
    raise NotFilledError(f"no k <= {k_max} fills the ambient space of {list(as_shape(shape).dims)}", report)


# ---------------------------------------------------------------------------
# CP fitting


@dataclass
class RankEstimate:
    r: int
    residual: float
    iterations: int
    restarts: int
    converged: bool
    factors: list = field(default_factory=list, repr=False)

    def to_json_obj(self) -> dict:
        return {
            "r": self.r,
            "residual": self.residual,
            "iterations": self.iterations,
            "restarts": self.restarts,
            "converged": self.converged,
        }


def cp_to_tensor(factors) -> np.ndarray:
    """Flattened ``sum_c a_1[:, c] (x) ... (x) a_m[:, c]``."""
    r = factors[0].shape[1]
    acc = np.ones((1, r), dtype=np.complex128)
    for a in factors:
        acc = (acc[:, None, :] * a[None, :, :]).reshape(-1, r)
    return acc.sum(axis=1)


def _khatri_rao_except(factors, skip: int) -> np.ndarray:
    r = factors[0].shape[1]
    acc = np.ones((1, r), dtype=np.complex128)
    for i, a in enumerate(factors):
        if i != skip:
            acc = (acc[:, None, :] * a[None, :, :]).reshape(-1, r)
    return acc


def _rebalance(factors) -> None:
    m = len(factors)
    norms = np.array([np.linalg.norm(a, axis=0) for a in factors])
    lam = np.prod(norms, axis=0)
    ok = lam > 0
    for a, n in zip(factors, norms):
        scale = np.ones_like(lam)
        scale[ok] = lam[ok] ** (1.0 / m) / n[ok]
        a *= scale


def _relative_residual(x: np.ndarray, factors, norm_x: float) -> float:
    return float(np.linalg.norm(x - cp_to_tensor(factors)) / norm_x)


def _als(x_tensor: np.ndarray, factors, max_iters: int, stall_tol: float):
    """Run ALS in place; returns (residual, iterations, converged)."""
    dims = x_tensor.shape
    x = x_tensor.reshape(-1)
    norm_x = float(np.linalg.norm(x))
    unfoldings = [np.moveaxis(x_tensor, j, 0).reshape(n, -1) for j, n in enumerate(dims)]
    history = [_relative_residual(x, factors, norm_x)]
    for it in range(1, max_iters + 1):
        previous = [a.copy() for a in factors]
        for j in range(len(dims)):
            kr = _khatri_rao_except(factors, j)
            sol = np.linalg.lstsq(kr, unfoldings[j].T, rcond=None)[0]
            factors[j] = np.ascontiguousarray(sol.T)
        _rebalance(factors)
        res = _relative_residual(x, factors, norm_x)
        # extrapolate along the sweep direction; kept only if it helps
        step = it ** (1.0 / 3.0)
        jump = [b + step * (a - b) for a, b in zip(factors, previous)]
        res_jump = _relative_residual(x, jump, norm_x)
        if res_jump < res:
            factors[:] = jump
            _rebalance(factors)
            res = res_jump
        history.append(res)
        if max(float(np.max(np.abs(a))) for a in factors) > FACTOR_NORM_CAP:
            return history[-1], it, False
        if history[-1] < 1e-14:
            return history[-1], it, True
        if it >= 10 and history[-11] - history[-1] < stall_tol:
            return history[-1], it, True
    converged = len(history) > 10 and history[-11] - history[-1] < stall_tol
    return history[-1], max_iters, converged


def _cp_jacobian(factors) -> np.ndarray:
    """Complex Jacobian of the flattened CP tensor w.r.t. the stacked factor entries."""
    dims = tuple(a.shape[0] for a in factors)
    r = factors[0].shape[1]
    blocks = []
    for j, n in enumerate(dims):
        rest = _khatri_rao_except(factors, j).reshape(dims[:j] + dims[j + 1:] + (r,))
        d = np.zeros((n, r) + dims, dtype=np.complex128)
        for i in range(n):
            np.moveaxis(d[i], j + 1, 0)[i] = np.moveaxis(rest, -1, 0)
        blocks.append(d.reshape(n * r, -1).T)
    return np.hstack(blocks)


def _refine(x: np.ndarray, factors, max_nfev: int):
    """Trust-region least squares on all factors at once; pulls ALS out of swamps.

    Returns (factors, nfev, converged); the caller keeps the result only if
    it lowers the residual.
    """
    dims = tuple(a.shape[0] for a in factors)
    r = factors[0].shape[1]
    size = sum(dims) * r

    def unpack(v):
        z = v[:size] + 1j * v[size:]
        out, o = [], 0
        for n in dims:
            out.append(z[o:o + n * r].reshape(n, r))
            o += n * r
        return out

    def fun(v):
        d = cp_to_tensor(unpack(v)) - x
        return np.concatenate([d.real, d.imag])

    def jac(v):
        jc = _cp_jacobian(unpack(v))
        return np.block([[jc.real, -jc.imag], [jc.imag, jc.real]])

    z = np.concatenate([a.ravel() for a in factors])
    sol = least_squares(fun, np.concatenate([z.real, z.imag]), jac=jac, method="trf",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
    out = unpack(sol.x)
    _rebalance(out)
    capped = max(float(np.max(np.abs(a))) for a in out) > FACTOR_NORM_CAP
    return out, sol.nfev, sol.status > 0 and not capped


def _random_factors(rng, dims, r, scale):
    out = []
    for n in dims:
        a = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
        a *= scale / np.linalg.norm(a, axis=0)
        out.append(a)
    return out


def best_rank_r(
    state: PureState,
    r: int,
    restarts: int = 10,
    max_iters: int = 500,
    seed: int = 0,
    stall_tol: float = 1e-10,
) -> RankEstimate:
    """Best rank-``r`` CP approximation found by restarted ALS.

    Ranks 1..r are fitted in turn; each level adds two candidates to its
    random restarts: the previous optimum padded with a zero term (so the
    residual can never increase with ``r``) and that optimum plus a random
    rank-one term, refined by ALS.  The winner of each level is then refined
    jointly by trust-region least squares, which escapes the slow "swamps"
    ALS falls into when factors are nearly collinear.
    """
    if r < 1:
        raise DomainError(f"r must be >= 1, got {r}")
    norm_x = state.norm
    if norm_x == 0:
        raise DomainError("cannot fit the zero tensor")
    dims = state.shape.dims
    m = len(dims)
    x_tensor = np.array(state.tensor)
    x = x_tensor.reshape(-1)
    best = None
    for level in range(1, r + 1):
        scale = (norm_x / level) ** (1.0 / m)
        candidates = []
        if best is not None:
            padded = [np.hstack([a, np.zeros((a.shape[0], 1))]) for a in best.factors]
            candidates.append(
                RankEstimate(level, _relative_residual(x, padded, norm_x), 0, 0, best.converged, padded)
            )
            rng = np.random.default_rng([seed, level, restarts])
            term_scale = max(best.residual * norm_x, 1e-3 * norm_x) ** (1.0 / m)
            warm = [np.hstack([a, t]) for a, t in zip(best.factors, _random_factors(rng, dims, 1, term_scale))]
            res, its, conv = _als(x_tensor, warm, max_iters, stall_tol)
            candidates.append(RankEstimate(level, res, its, 0, conv, warm))
        for i in range(restarts):
            rng = np.random.default_rng([seed, level, i])
            fs = _random_factors(rng, dims, level, scale)
            res, its, conv = _als(x_tensor, fs, max_iters, stall_tol)
            candidates.append(RankEstimate(level, res, its, 0, conv, fs))
        best = min(candidates, key=lambda c: c.residual)
        if best.residual > 1e-14:
            fs, nfev, conv = _refine(x, best.factors, max_iters)
            res = _relative_residual(x, fs, norm_x)
            if res < best.residual:
                best = RankEstimate(level, res, best.iterations + nfev, 0, conv, fs)
        best.restarts = restarts
    return best


def secant_membership(
    state: PureState,
    k: int,
    tol: float = 1e-6,
    restarts: int = 10,
    max_iters: int = 500,
    seed: int = 0,
    stall_tol: float = 1e-10,
) -> bool:
    """Whether ``state`` lies (numerically) on ``Sec_k``, i.e. has a rank <= k+1 fit.

    A ``True`` answer is backed by an explicit decomposition; ``False`` may
    also mean the fitter failed, e.g. on border-rank tensors.
    """
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    est = best_rank_r(state, k + 1, restarts=restarts, max_iters=max_iters, seed=seed, stall_tol=stall_tol)
    return est.residual <= tol
