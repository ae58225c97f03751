"""Convex-roof upper bounds for pure-state measures.

Every decomposition of ``rho = sum_a lam_a |e_a><e_a|`` into ``L`` pure
states comes from an ``L x R`` isometry ``U`` via the subnormalized vectors
``w_i = sum_a U_ia sqrt(lam_a) e_a``.  The optimizer searches over ``U``
with random two-row rotations; every value it reports is attained by an
explicit ensemble, hence an upper bound on the roof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, IsometryError, RankError, ResourceError, ShapeError
from .measures import CONCURRENCE, MeasureSpec, pure_measure, unnormalized_measure
from .segre import _swap_gather, swap_classes
from .states import DensityMatrix, Ensemble, PureState, to_json_obj

ISOMETRY_TOL = 1e-10
RANK_REL_TOL = 1e-12
DROP_P = 1e-14
MAX_TOTAL = 64
REJECTS_BEFORE_SHRINK = 20
MIN_STEP = 1e-8
SMOOTHING_SCHEDULE = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8)


@dataclass
class RoofResult:
    value: float
    best_ensemble: Ensemble
    restarts_used: int
    iterations: int
    history: list = field(default_factory=list)
    L: int = 0
    isometry: np.ndarray | None = field(default=None, repr=False)

    def to_json_obj(self) -> dict:
        return {
            "value": self.value,
            "L": self.L,
            "restarts_used": self.restarts_used,
            "iterations": self.iterations,
            "history": list(self.history),
            "best_ensemble": to_json_obj(self.best_ensemble),
        }


def ensemble_average(ensemble: Ensemble, spec: MeasureSpec = CONCURRENCE) -> float:
    return math.fsum(p * pure_measure(psi, spec) for p, psi in ensemble)


def _spectrum(rho: DensityMatrix):
    """Retained eigenvalues (descending) and eigenvectors as rows."""
    w, v = rho.eigh()
    keep = w > RANK_REL_TOL * w[-1]
    w, v = w[keep][::-1], v[:, keep][:, ::-1]
    return w, v.T


def decomposition_from_isometry(rho: DensityMatrix, U) -> Ensemble:
    U = np.asarray(U, dtype=np.complex128)
    lam, vecs = _spectrum(rho)
    if U.ndim != 2 or U.shape[1] != lam.size:
        raise RankError(f"isometry has {U.shape[-1] if U.ndim else 0} columns, rho has rank {lam.size}")
    if np.max(np.abs(U.conj().T @ U - np.eye(lam.size))) > ISOMETRY_TOL:
        raise IsometryError("columns of U are not orthonormal")
    return _ensemble(rho, U @ (np.sqrt(lam)[:, None] * vecs))


def _ensemble(rho: DensityMatrix, w: np.ndarray) -> Ensemble:
    p = np.sum(w.real ** 2 + w.imag ** 2, axis=1)
    members = [(p_i, PureState(rho.shape, w_i / math.sqrt(p_i))) for p_i, w_i in zip(p, w) if p_i >= DROP_P]
    total = math.fsum(q for q, _ in members)
    return Ensemble([(q / total, psi) for q, psi in members])


def _random_isometry(rng: np.random.Generator, L: int, R: int) -> np.ndarray:
    g = rng.standard_normal((L, R)) + 1j * rng.standard_normal((L, R))
    q, r = np.linalg.qr(g)
    # fix the phase ambiguity of QR so the draw is Haar distributed
    d = np.diag(r)
    return q * (d / np.abs(d))


def _local_search(U, B, dims, spec, rng, max_iters):
    """Greedy two-row rotations on ``U``; returns (U, value, iterations)."""
    U = U.copy()
    W = U @ B
    vals = unnormalized_measure(W, dims, spec)
    f = math.fsum(vals)
    L = U.shape[0]
    if L < 2:
        return U, f, 0
    step = 1.0
    rejects = 0
    pairs = rng.integers(0, L, size=(max_iters, 2))
    angles = rng.standard_normal(max_iters)
    phases = np.exp(2j * np.pi * rng.random(max_iters))
    it = 0
    for it in range(1, max_iters + 1):
        i, j = pairs[it - 1]
        if i == j:
            j = (i + 1) % L
        theta = step * angles[it - 1]
        c, s = math.cos(theta), math.sin(theta)
        ph = phases[it - 1]
        wi = c * W[i] - ph * s * W[j]
        wj = (s / ph) * W[i] + c * W[j]
        cand = unnormalized_measure(np.stack([wi, wj]), dims, spec)
        delta = (cand[0] + cand[1]) - (vals[i] + vals[j])
        if delta < 0:
            W[i], W[j] = wi, wj
            ui = c * U[i] - ph * s * U[j]
            U[j] = (s / ph) * U[i] + c * U[j]
            U[i] = ui
            vals[i], vals[j] = cand
            rejects = 0
        else:
            rejects += 1
            if rejects >= REJECTS_BEFORE_SHRINK:
                step *= 0.5
                rejects = 0
                if step < MIN_STEP:
                    break
    return U, math.fsum(vals), it


def _energy_and_grad(W: np.ndarray, dims: tuple, classes: tuple):
    """Per-row quadric energy ``Q(w) = sum |quadric|^2`` and ``g`` with ``dQ = Re<g, dw>``."""
    b, n = W.shape
    gather = _swap_gather(dims, classes)
    outer = (W[:, :, None] * W[:, None, :]).reshape(b, 1, n * n)
    diff = outer - outer[:, 0, gather]
    energy = (diff.real ** 2 + diff.imag ** 2).sum(axis=(1, 2))
    e = diff.sum(axis=1).reshape(b, n, n)
    return energy, 8.0 * np.einsum("bij,bj->bi", e, W.conj())


def _polar(X: np.ndarray):
    """Isometric polar factor ``X (X^H X)^(-1/2)`` plus the eigen-data used for its derivative."""
    s, V = np.linalg.eigh(X.conj().T @ X)
    T = (V * s ** -0.5) @ V.conj().T
    return X @ T, T, s, V


def _smoothed_roof(B, dims, classes, shape_LR, eps, c):
    """Objective ``sum_i sqrt(c Q(w_i) + eps^2)`` over unconstrained ``X``, ``U = polar(X)``."""
    L, R = shape_LR

    def fun(x):
        X = (x[: L * R] + 1j * x[L * R:]).reshape(L, R)
        U, T, s, V = _polar(X)
        energy, g = _energy_and_grad(U @ B, dims, classes)
        r = np.sqrt(c * energy + eps * eps)
        H = ((c / (2 * r))[:, None] * g) @ B.conj().T
        # Daleckii-Krein derivative of S^(-1/2) at S = X^H X
        f_s = s ** -0.5
        gap = s[:, None] - s[None, :]
        close = np.abs(gap) <= 1e-12 * s[-1]
        gam = np.where(close, -0.5 * s[:, None] ** -1.5, (f_s[:, None] - f_s[None, :]) / np.where(close, 1.0, gap))
        N = V @ (gam * (V.conj().T @ (X.conj().T @ H) @ V)) @ V.conj().T
        grad = H @ T + X @ (N + N.conj().T)
        return float(r.sum()), np.concatenate([grad.real.ravel(), grad.imag.ravel()])

    return fun


def _polish(U, B, dims, spec, max_iters):
    """Refine ``U`` by L-BFGS on a smoothed roof objective, tightening the smoothing in stages."""
    classes = tuple(swap_classes(len(dims), spec.kind.quadrics))
    L, R = U.shape
    x = np.concatenate([U.real.ravel(), U.imag.ravel()])
    evals = 0
    for eps in SMOOTHING_SCHEDULE:
        fun = _smoothed_roof(B, dims, classes, (L, R), eps, spec.normalization)
        res = minimize(fun, x, jac=True, method="L-BFGS-B", options={"maxiter": max_iters, "gtol": 1e-12, "ftol": 1e-15})
        x, evals = res.x, evals + res.nfev
    out = _polar((x[: L * R] + 1j * x[L * R:]).reshape(L, R))[0]
    return out, math.fsum(unnormalized_measure(out @ B, dims, spec)), evals


def convex_roof_upper_bound(
    rho: DensityMatrix,
    spec: MeasureSpec = CONCURRENCE,
    L: int | None = None,
    restarts: int = 20,
    max_iters: int = 500,
    seed: int = 0,
    warm_start=None,
    polish: bool = True,
    polish_iters: int = 300,
) -> RoofResult:
    """Upper bound on the convex roof of ``spec`` at ``rho``.

    Candidates are the spectral decomposition, an optional ``warm_start``
    isometry (padded with zero rows up to ``L``) and ``restarts`` random
    isometries.  Each is refined by random two-row rotations and then, if
    ``polish``, by L-BFGS on ``sum_i sqrt(Q_i + eps^2)`` with ``eps`` driven
    down to 1e-8; a polished point replaces the rotated one only when its
    exact objective is lower.  ``L`` defaults to ``rank(rho)**2`` and larger
    requests are clamped to it.
    """
    if rho.shape.total > MAX_TOTAL:
        raise ResourceError(f"roof search is limited to total dimension {MAX_TOTAL}, got {rho.shape.total}")
    if rho.shape.m < 2:
        raise ShapeError("entanglement measures need at least two subsystems")
    if restarts < 0 or max_iters < 0:
        raise DomainError("restarts and max_iters must be non-negative")
    lam, vecs = _spectrum(rho)
    R = lam.size
    if L is None:
        L = R * R
    if L < R:
        raise DomainError(f"L={L} is smaller than rank(rho)={R}")
    L = min(L, R * R)
    B = np.sqrt(lam)[:, None] * vecs
    dims = rho.shape.dims

    starts = [np.vstack([np.eye(R), np.zeros((L - R, R))]).astype(np.complex128)]
    if warm_start is not None:
        ws = np.asarray(warm_start, dtype=np.complex128)
        if ws.shape[1] != R or ws.shape[0] > L:
            raise RankError(f"warm start of shape {ws.shape} does not fit L={L}, R={R}")
        starts.append(np.vstack([ws, np.zeros((L - ws.shape[0], R))]))
    n_fixed = len(starts)
    for r in range(restarts):
        starts.append(_random_isometry(np.random.default_rng([seed, r]), L, R))

    best_U, best_val = None, math.inf
    history = []
    total_iters = 0
    for idx, U0 in enumerate(starts):
        # fixed starts use seeds disjoint from the random restarts
        rng = np.random.default_rng([seed, idx - n_fixed if idx >= n_fixed else 10**6 + idx])
        U, val, its = _local_search(U0, B, dims, spec, rng, max_iters)
        total_iters += its
        if polish and L > 1:
            Up, vp, evals = _polish(U, B, dims, spec, polish_iters)
            total_iters += evals
            if vp < val:
                U, val = Up, vp
        history.append(val)
        if val < best_val:
            best_U, best_val = U, val

    ensemble = _ensemble(rho, best_U @ B)
    return RoofResult(
        value=ensemble_average(ensemble, spec),
        best_ensemble=ensemble,
        restarts_used=len(starts),
        iterations=total_iters,
        history=history,
        L=L,
        isometry=best_U,
    )


def roof_scan(rho: DensityMatrix, spec: MeasureSpec, Ls, **kwargs) -> list:
    """Run :func:`convex_roof_upper_bound` for increasing ``L``, warm-starting each from the last."""
    out = []
    incumbent = None
    for L in sorted(Ls):
        res = convex_roof_upper_bound(rho, spec, L=L, warm_start=incumbent, **kwargs)
        out.append(res)
        incumbent = res.isometry
    return out


_SIGMA_YY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


def wootters_mixed(rho: DensityMatrix) -> float:
    """Two-qubit concurrence ``max(0, l1 - l2 - l3 - l4)``.

    The ``l_i`` are the decreasing square roots of the eigenvalues of
    ``rho rho~`` with ``rho~ = (Y (x) Y) rho* (Y (x) Y)``; computed as the
    eigenvalues of the Hermitian ``sqrt(sqrt(rho) rho~ sqrt(rho))``.
    """
    if rho.shape.dims != (2, 2):
        raise ShapeError(f"Wootters concurrence needs shape (2, 2), got {list(rho.shape.dims)}")
    w, v = rho.eigh()
    sq = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    tilde = _SIGMA_YY @ rho.entries.conj() @ _SIGMA_YY
    mu = np.linalg.eigvalsh(sq @ tilde @ sq)
    lam = np.sqrt(np.clip(mu, 0, None))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))
