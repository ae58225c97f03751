"""Independent reference computations used to freeze expected values.

Nothing here imports the code paths it checks; loops are deliberately
naive.
"""

import itertools
import math

import numpy as np
import sympy


def offset(dims, idx):
    """Row-major offset of a 1-based index, by explicit stride products."""
    total = 0
    for j, k in enumerate(idx):
        stride = 1
        for n in dims[j + 1:]:
            stride *= n
        total += (k - 1) * stride
    return total


def partial_trace_keep(amps, dims, keep):
    """rho_keep[a, b] = sum over the other indices of psi[.. a ..] conj(psi[.. b ..])."""
    n = dims[keep - 1]
    rho = np.zeros((n, n), dtype=complex)
    others = [range(1, d + 1) for j, d in enumerate(dims) if j != keep - 1]
    for rest in itertools.product(*others):
        for a in range(1, n + 1):
            for b in range(1, n + 1):
                ia = list(rest)
                ib = list(rest)
                ia.insert(keep - 1, a)
                ib.insert(keep - 1, b)
                rho[a - 1, b - 1] += amps[offset(dims, ia)] * np.conj(amps[offset(dims, ib)])
    return rho


def swap_sets(m, full):
    """Swap sets up to complement, enumerated from scratch."""
    subsets = []
    for size in range(1, m):
        subsets.extend(frozenset(s) for s in itertools.combinations(range(m), size))
    if not full:
        subsets = [s for s in subsets if len(s) == 1]
    reps = []
    seen = set()
    for s in subsets:
        comp = frozenset(range(m)) - s
        if s in seen or comp in seen:
            continue
        seen.add(s)
        reps.append(s)
    return reps


def quadric_sum(amps, dims, full=False):
    """sum over swap classes and ordered (K, L) of |a_K a_L - a_K' a_L'|^2, by nested loops."""
    m = len(dims)
    box = list(itertools.product(*(range(1, n + 1) for n in dims)))
    total = 0.0
    for s in swap_sets(m, full):
        for K in box:
            for L in box:
                Kp = tuple(L[j] if j in s else K[j] for j in range(m))
                Lp = tuple(K[j] if j in s else L[j] for j in range(m))
                v = amps[offset(dims, K)] * amps[offset(dims, L)] - amps[offset(dims, Kp)] * amps[offset(dims, Lp)]
                total += abs(v) ** 2
    return total


def quadric_count(dims, full=False):
    """Number of distinct nonzero binomials up to sign, via sympy expansion."""
    m = len(dims)
    box = list(itertools.product(*(range(1, n + 1) for n in dims)))
    sym = {K: sympy.Symbol("a_" + "_".join(map(str, K))) for K in box}
    canon = set()
    subsets = [frozenset(s) for size in range(1, m) for s in itertools.combinations(range(m), size)]
    if not full:
        subsets = [s for s in subsets if len(s) == 1]
    for s in subsets:
        for K in box:
            for L in box:
                Kp = tuple(L[j] if j in s else K[j] for j in range(m))
                Lp = tuple(K[j] if j in s else L[j] for j in range(m))
                p = sympy.expand(sym[K] * sym[L] - sym[Kp] * sym[Lp])
                if p != 0:
                    canon.add(min(sympy.srepr(p), sympy.srepr(-p)))
    return len(canon)


def matrix_rank_variety_dim(n1, n2, r):
    """Affine dimension of {n1 x n2 matrices of rank <= r}: r(n1 + n2 - r), capped at n1 n2."""
    r = min(r, n1, n2)
    return min(r * (n1 + n2 - r), n1 * n2)


def wootters_eig(rho):
    """Concurrence from the non-Hermitian eigenvalues of rho rho~ (no square-root trick)."""
    sy = np.array([[0, -1j], [1j, 0]])
    yy = np.kron(sy, sy)
    tilde = yy @ rho.conj() @ yy
    mu = np.sort(np.abs(np.linalg.eigvals(rho @ tilde).real))[::-1]
    lam = np.sqrt(mu)
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


def random_unitary(rng, n):
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
