"""Perfect-code parameter families and the secant fills they predict.

For a prime power ``q`` and ``l >= 1`` the family has ``t = (q**l - 1)/(q - 1)``
and ``k = q**(t - l)``; the (k-1)-secant of the t-fold Segre of ``P^(q-1)``
is then predicted to fill ``P^(q**t - 1)``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

from .errors import DomainError, ResourceError
from .secant import DEFAULT_TRIALS, MAX_TOTAL, RANK_TOL, SecantReport, secant_dimension
from .states import SystemShape

INT_LIMIT = 2**63 - 1


class Family(str, enum.Enum):
    MULTIQUBIT = "MULTIQUBIT"
    GENERAL = "GENERAL"


class DegenerateFamilyWarning(UserWarning):
    """``l = 1`` gives the trivial member ``t = 1``, ``k = 1``."""


class FillFinding(UserWarning):
    """A verified fill disagreed with the predicted expected dimension."""


def prime_power_base(q: int):
    """Return ``p`` if ``q == p**e`` for a prime ``p`` and ``e >= 1``, else ``None``."""
    if q < 2:
        return None
    n, p = q, 2
    while p * p <= n:
        if n % p == 0:
            while n % p == 0:
                n //= p
            return p if n == 1 else None
        p += 1
    return n  # q itself is prime


def is_prime_power(q: int) -> bool:
    return prime_power_base(q) is not None


@dataclass(frozen=True)
class CodeParams:
    q: int
    l: int
    t: int
    k: int
    family: Family

    @property
    def shape(self) -> SystemShape:
        return SystemShape((self.q,) * self.t)

    @property
    def ambient_dim(self) -> int:
        return self.q ** self.t - 1

    @property
    def secant_index(self) -> int:
        return self.k - 1

    def to_json_obj(self) -> dict:
        return {"q": self.q, "l": self.l, "t": self.t, "k": self.k, "family": self.family.value}


def perfect_code_params(q: int, l: int, family=Family.GENERAL) -> CodeParams:
    family = Family(str(family.value if isinstance(family, Family) else family).upper())
    if not is_prime_power(q):
        raise DomainError(f"q={q} is not a prime power")
    if family is Family.MULTIQUBIT and q != 2:
        raise DomainError(f"the multi-qubit family needs q=2, got q={q}")
    if l < 1:
        raise DomainError(f"l must be >= 1, got {l}")
    if l == 1:
        warnings.warn("l=1 gives the degenerate member t=1, k=1", DegenerateFamilyWarning, stacklevel=2)
    if l * math.log2(q) > 64:
        raise ResourceError(f"q**l overflows 64-bit integers for q={q}, l={l}")
    if family is Family.MULTIQUBIT:
        t = 2**l - 1
    else:
        t = (q**l - 1) // (q - 1)
    if t > INT_LIMIT or (t - l) * math.log2(q) >= 63:
        raise ResourceError(f"k = {q}**{t - l} exceeds 64-bit integers")
    k = q ** (t - l)
    return CodeParams(q=q, l=l, t=t, k=k, family=family)


def max_feasible_t(q: int, limit: int = MAX_TOTAL) -> int:
    t = 0
    while q ** (t + 1) <= limit:
        t += 1
    return t


def verify_fill(
    params: CodeParams, trials: int = DEFAULT_TRIALS, seed: int = 0, rank_tol: float = RANK_TOL
) -> SecantReport:
    """Compute ``Sec_{k-1}`` of ``(P^(q-1))^t`` and check it fills with the expected dimension."""
    if params.q ** params.t > MAX_TOTAL:
        raise ResourceError(
            f"q**t = {params.q}**{params.t} exceeds the guard {MAX_TOTAL}; "
            f"largest feasible t for q={params.q} is {max_feasible_t(params.q)}"
        )
    report = secant_dimension(params.shape, params.secant_index, trials=trials, seed=seed, rank_tol=rank_tol)
    if report.expected_dim != report.ambient_dim:
        warnings.warn(
            f"expected dimension {report.expected_dim} differs from ambient {report.ambient_dim}", FillFinding,
            stacklevel=2,
        )
    if report.computed_dim != report.expected_dim:
        warnings.warn(
            f"computed dimension {report.computed_dim} below expected {report.expected_dim}", FillFinding,
            stacklevel=2,
        )
    return report
