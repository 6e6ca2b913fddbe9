"""The lattice Lambda = (iota_1, iota_2)(L), the unit action and orbit reduction.

A point is stored by its integer coordinates ``(n, m)`` in the basis
``{1, theta}``.  The fundamental domain for ``V = epsilon^Z`` is

    F_V = { lambda : |N(lambda)| <= lambda_1^2 < epsilon^2 |N(lambda)| },

half-open on the right, so each nonzero point has a unique exponent ``rho``
with ``lambda = A_epsilon^rho(mu)``, ``mu`` in ``F_V``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import mpmath

from .quadfield import FieldElement, UnitSystem

__all__ = [
    "LatticePoint",
    "OrbitTable",
    "act",
    "enumerate_orbits",
    "hecke_point",
    "in_fundamental_domain",
    "reduce",
]

FUNDAMENTAL_DOMAIN = {
    "definition": "|N| <= lambda_1^2 < epsilon^2 |N|",
    "orientation": "right-open",
}


@dataclass(frozen=True, order=True)
class LatticePoint:
    n: int
    m: int

    def __add__(self, other: LatticePoint) -> LatticePoint:
        return LatticePoint(self.n + other.n, self.m + other.m)

    def __neg__(self) -> LatticePoint:
        return LatticePoint(-self.n, -self.m)

    def __sub__(self, other: LatticePoint) -> LatticePoint:
        return LatticePoint(self.n - other.n, self.m - other.m)

    def is_zero(self) -> bool:
        return self.n == 0 and self.m == 0

    def lambda1(self, us: UnitSystem) -> FieldElement:
        return us.theta * self.m + self.n

    def lambda2(self, us: UnitSystem) -> FieldElement:
        return self.lambda1(us).conj()

    def norm(self, us: UnitSystem) -> Fraction:
        # N(n + m theta) = n^2 + n m Tr(theta) + m^2 N(theta)
        n, m = self.n, self.m
        return n * n + n * m * us.theta_trace + m * m * us.theta_norm

    def wedge(self, other: LatticePoint) -> int:
        return self.n * other.m - self.m * other.n

    def embed(self, us: UnitSystem) -> tuple[float, float]:
        x = self.lambda1(us)
        return x.embed(1), x.embed(2)


def act(us: UnitSystem, p: LatticePoint, k: int = 1) -> LatticePoint:
    """``A_epsilon^k`` in coordinates: ``(n, m) -> (n, m) @ phi^k``."""
    if k == 0:
        return p
    (a, b), (c, d) = us.phi_power(k)
    return LatticePoint(p.n * a + p.m * c, p.n * b + p.m * d)


def _domain_offset(us: UnitSystem, l1_sq: FieldElement, abs_norm: Fraction, k: int) -> int:
    """Where ``eps^{-2k} lambda_1^2`` sits relative to ``[|N|, eps^2 |N|)``: -1, 0 or +1."""
    scaled = l1_sq * us.epsilon ** (-2 * k)
    if (scaled - abs_norm).sign(1) < 0:
        return -1
    if (scaled - us.epsilon * us.epsilon * abs_norm).sign(1) >= 0:
        return 1
    return 0


def in_fundamental_domain(us: UnitSystem, p: LatticePoint) -> bool:
    if p.is_zero():
        return False
    l1 = p.lambda1(us)
    return _domain_offset(us, l1 * l1, abs(p.norm(us)), 0) == 0


def reduce(us: UnitSystem, p: LatticePoint) -> tuple[LatticePoint, int]:
    """Return ``(mu, rho)`` with ``mu`` in ``F_V`` and ``act(us, mu, rho) == p``.

    ``rho`` is found by exponential search followed by bisection, each step an
    exact comparison in the field.
    """
    if p.is_zero():
        raise ValueError("the zero lattice point has no V-orbit representative")
    l1 = p.lambda1(us)
    l1_sq = l1 * l1
    abs_norm = abs(p.norm(us))

    def offset(k: int) -> int:
        return _domain_offset(us, l1_sq, abs_norm, k)

    o = offset(0)
    if o == 0:
        return p, 0
    # offset is nonincreasing in k and vanishes at exactly one k
    if o > 0:
        lo, hi = 0, 1
        while offset(hi) > 0:
            lo, hi = hi, 2 * hi
        # offset(lo) > 0 >= offset(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if offset(mid) > 0:
                lo = mid
            else:
                hi = mid
        rho = hi
    else:
        lo, hi = -1, 0
        while offset(lo) < 0:
            lo, hi = 2 * lo, lo
        # offset(lo) >= 0 > offset(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if offset(mid) >= 0:
                lo = mid
            else:
                hi = mid
        rho = lo
    mu = act(us, p, -rho)
    return mu, rho


@dataclass(frozen=True)
class OrbitTable:
    """One representative in ``F_V`` for every V-orbit with ``0 < |N| <= bound``."""

    us: UnitSystem = field(repr=False)
    bound: Fraction
    reps: tuple[LatticePoint, ...]
    metadata: dict = field(default_factory=lambda: dict(FUNDAMENTAL_DOMAIN), compare=False)

    def __len__(self) -> int:
        return len(self.reps)

    def __iter__(self):
        return iter(self.reps)

    @cached_property
    def norms(self) -> tuple[Fraction, ...]:
        return tuple(p.norm(self.us) for p in self.reps)

    def lookup(self, p: LatticePoint) -> tuple[LatticePoint, int]:
        """Reduction map ``lambda -> (mu, rho(lambda))`` restricted to the table."""
        mu, rho = reduce(self.us, p)
        if mu not in self._index:
            raise KeyError(f"{p} reduces to {mu}, which is outside the table bound {self.bound}")
        return mu, rho

    @cached_property
    def _index(self) -> dict[LatticePoint, int]:
        return {p: i for i, p in enumerate(self.reps)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "m", "norm_num", "norm_den", "rho_of_reduction_test"])
        for p, nrm in zip(self.reps, self.norms):
            _, rho = reduce(self.us, p)
            w.writerow([p.n, p.m, nrm.numerator, nrm.denominator, rho])
        return buf.getvalue()


def _search_box(us: UnitSystem, bound: Fraction) -> tuple[int, list[tuple[int, int, int]]]:
    """Integer ranges covering ``|lambda_1| < eps sqrt(B)``, ``|lambda_2| <= sqrt(B)``."""
    with mpmath.workdps(30):
        t1 = us.theta.to_mpf(1)
        t2 = us.theta.to_mpf(2)
        r = mpmath.sqrt(mpmath.mpf(bound.numerator) / bound.denominator)
        x_max = us.epsilon.to_mpf(1) * r
        y_max = r
        m_max = int(mpmath.ceil((x_max + y_max) / abs(t1 - t2))) + 1
        rows = []
        for m in range(-m_max, m_max + 1):
            # n must satisfy |n + m t1| < x_max and |n + m t2| <= y_max
            lo = max(-x_max - m * t1, -y_max - m * t2)
            hi = min(x_max - m * t1, y_max - m * t2)
            if lo > hi + 1:
                continue
            rows.append((m, int(mpmath.floor(lo)) - 1, int(mpmath.ceil(hi)) + 1))
    return m_max, rows


def enumerate_orbits(us: UnitSystem, bound: int | Fraction) -> OrbitTable:
    """Materialize the orbit representatives with ``0 < |N(mu)| <= bound``.

    Output order is by ``|N|``, then ``n``, then ``m``.
    """
    bound = Fraction(bound)
    if bound <= 0:
        raise ValueError("bound must be positive")
    eps_sq = us.epsilon * us.epsilon
    found: list[tuple[Fraction, int, int]] = []
    _, rows = _search_box(us, bound)
    for m, n_lo, n_hi in rows:
        for n in range(n_lo, n_hi + 1):
            if n == 0 and m == 0:
                continue
            p = LatticePoint(n, m)
            nrm = abs(p.norm(us))
            if nrm > bound:
                continue
            l1 = p.lambda1(us)
            l1_sq = l1 * l1
            if (l1_sq - nrm).sign(1) < 0 or (l1_sq - eps_sq * nrm).sign(1) >= 0:
                continue
            found.append((nrm, n, m))
    found.sort()
    reps = tuple(LatticePoint(n, m) for _, n, m in found)
    return OrbitTable(us, bound, reps)


def hecke_point(us: UnitSystem, ell: LatticePoint, t: float) -> complex:
    """``z(l, t) = iota_1(l) e^t + i iota_2(l) e^{-t}``."""
    x1, x2 = ell.embed(us)
    return complex(x1 * math.exp(t), x2 * math.exp(-t))
