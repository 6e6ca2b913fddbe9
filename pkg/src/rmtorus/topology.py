"""Homology, cohomology and K-theory of the mapping torus X_epsilon, and the
range of the trace on K_0 of the twisted group C*-algebra of its fundamental group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .quadfield import FieldElement, UnitSystem

__all__ = [
    "AbelianGroup",
    "TraceRange",
    "cokernel",
    "cohomology",
    "homology",
    "k_theory",
    "smith_normal_form",
    "topology_report",
    "trace_membership",
    "trace_range",
]

IntMatrix = list[list[int]]


def _identity(n: int) -> IntMatrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def smith_normal_form(M: IntMatrix) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Return ``(U, D, V)`` with ``U @ M @ V == D`` and ``D`` in Smith form.

    ``U`` and ``V`` are unimodular; the nonzero diagonal entries of ``D`` are
    positive and each divides the next.
    """
    A = [list(map(int, row)) for row in M]
    rows = len(A)
    cols = len(A[0]) if rows else 0
    U = _identity(rows)
    V = _identity(cols)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for R in (A, V):
            for row in R:
                row[i], row[j] = row[j], row[i]

    def add_row(src, dst, f):  # row_dst += f * row_src
        for R in (A, U):
            R[dst] = [x + f * y for x, y in zip(R[dst], R[src])]

    def add_col(src, dst, f):  # col_dst += f * col_src
        for R in (A, V):
            for row in R:
                row[dst] += f * row[src]

    for t in range(min(rows, cols)):
        # move the smallest nonzero entry of the trailing block to (t, t)
        while True:
            pivots = [(abs(A[i][j]), i, j) for i in range(t, rows) for j in range(t, cols) if A[i][j]]
            if not pivots:
                break
            _, i, j = min(pivots)
            swap_rows(t, i)
            swap_cols(t, j)
            p = A[t][t]
            done = True
            for i in range(t + 1, rows):
                q = A[i][t] // p
                if q:
                    add_row(t, i, -q)
                if A[i][t]:
                    done = False
            for j in range(t + 1, cols):
                q = A[t][j] // p
                if q:
                    add_col(t, j, -q)
                if A[t][j]:
                    done = False
            if not done:
                continue
            # enforce divisibility of the remaining block by the pivot
            bad = [(i, j) for i in range(t + 1, rows) for j in range(t + 1, cols) if A[i][j] % p]
            if bad:
                add_row(bad[0][0], t, 1)
                continue
            break
        if A[t][t] < 0:
            U[t] = [-x for x in U[t]]
            A[t] = [-x for x in A[t]]
    return U, A, V


@dataclass(frozen=True)
class AbelianGroup:
    """``Z^free_rank`` plus the cyclic factors ``Z/d_i`` with ``d_1 | d_2 | ...``."""

    free_rank: int
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        for a, b in zip(self.torsion, self.torsion[1:]):
            if b % a:
                raise ValueError(f"invariant factors {self.torsion} do not form a divisibility chain")
        if any(t <= 1 for t in self.torsion):
            raise ValueError("invariant factors must exceed 1")

    def __add__(self, other: AbelianGroup) -> AbelianGroup:
        return AbelianGroup.from_factors(self.free_rank + other.free_rank, self.torsion + other.torsion)

    @classmethod
    def from_factors(cls, free_rank: int, factors) -> AbelianGroup:
        """Canonical form from arbitrary cyclic orders (primary decomposition, then regroup)."""
        primes: dict[int, list[int]] = {}
        for n in factors:
            n = abs(int(n))
            if n <= 1:
                continue
            p = 2
            while n > 1:
                if p * p > n:
                    p = n
                if n % p == 0:
                    e = 1
                    n //= p
                    while n % p == 0:
                        n //= p
                        e += 1
                    primes.setdefault(p, []).append(p**e)
                p += 1
        length = max((len(v) for v in primes.values()), default=0)
        inv = [1] * length
        for powers in primes.values():
            powers.sort()
            for k, q in enumerate(powers):
                inv[length - len(powers) + k] *= q
        return cls(free_rank, tuple(x for x in inv if x > 1))

    @property
    def order_of_torsion(self) -> int:
        return math.prod(self.torsion)

    def __str__(self) -> str:
        parts = []
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank > 1:
            parts.append(f"Z^{self.free_rank}")
        parts += [f"Z/{t}" for t in self.torsion]
        return " + ".join(parts) if parts else "0"

    def as_dict(self) -> dict:
        return {"free_rank": self.free_rank, "torsion": list(self.torsion)}


def cokernel(M: IntMatrix) -> AbelianGroup:
    _, D, _ = smith_normal_form(M)
    rows = len(D)
    cols = len(D[0]) if rows else 0
    diag = [D[i][i] for i in range(min(rows, cols))]
    rank = sum(1 for x in diag if x)
    return AbelianGroup(rows - rank, tuple(x for x in diag if x > 1))


def one_minus_phi(us: UnitSystem) -> IntMatrix:
    (a, b), (c, d) = us.phi
    return [[1 - a, -b], [-c, 1 - d]]


def homology(us: UnitSystem) -> dict[str, AbelianGroup]:
    """Integral homology of X_epsilon.

    H_2 is reported torsion free: by duality it is Z + Hom(Coker(1 - A), Z) and
    the cokernel is finite.
    """
    coker = cokernel(one_minus_phi(us))
    z = AbelianGroup(1)
    return {"H0": z, "H1": z + coker, "H2": z, "H3": z}


def cohomology(us: UnitSystem) -> dict[str, AbelianGroup]:
    coker = cokernel(one_minus_phi(us))
    z = AbelianGroup(1)
    return {
        "H^0": z,
        "H^1": z,
        "H^2": z + coker,
        "H^3": z,
        "H^even": AbelianGroup(2) + coker,
        "H^odd": AbelianGroup(2),
    }


def k_theory(us: UnitSystem) -> dict[str, AbelianGroup]:
    """K_0 = Lambda, K_1 = Lambda + Lambda/(1 - A)Lambda."""
    coker = cokernel(one_minus_phi(us))
    return {"K0": AbelianGroup(2), "K1": AbelianGroup(2) + coker}


@dataclass(frozen=True)
class TraceRange:
    """The subgroup ``Z + Z*u`` of R, ``u = theta / (theta' - theta)``.

    It is dense exactly when ``u`` is irrational.  For ``theta = sqrt(d)``
    one gets ``u = -1/2`` and the group collapses to ``(1/2)Z``.
    """

    u: FieldElement

    @property
    def is_dense(self) -> bool:
        return not self.u.is_rational

    @property
    def generators(self) -> tuple[int, FieldElement]:
        return 1, self.u

    @property
    def value(self) -> float:
        return self.u.embed(1)

    def element(self, p: int, q: int) -> FieldElement:
        return self.u * q + p

    def as_dict(self) -> dict[str, int]:
        return {"num_a": self.u.a, "num_b": self.u.b, "den": self.u.c}


def trace_range(us: UnitSystem) -> TraceRange:
    return TraceRange(us.theta / (us.theta_conj - us.theta))


def trace_membership(
    tr: TraceRange | float, x: float, tol: float, cap: int = 10**6, chunk: int = 1 << 16
) -> tuple[int, int] | None:
    """Find ``(p, q)`` with ``|x - p - q*u| < tol``, scanning ``|q|`` upward.

    Candidates are ordered by ``|q|`` (nonnegative ``q`` first at equal
    magnitude), with ``p`` the nearest integer.  Returns ``None`` when nothing
    within ``|q| <= cap`` qualifies.  Double precision limits useful
    tolerances to about ``1e-16 * cap``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if isinstance(tr, TraceRange):
        with mpmath.workdps(40):
            u_hi = tr.u.to_mpf(1)
            # split u = u0 + u1 to keep q*u accurate for large q
            u0 = float(u_hi)
            u1 = float(u_hi - u0)
    else:
        u0, u1 = float(tr), 0.0
    for start in range(0, cap + 1, chunk):
        mags = np.arange(start, min(start + chunk, cap + 1), dtype=np.int64)
        q = np.empty(2 * len(mags), dtype=np.int64)
        q[0::2] = mags
        q[1::2] = -mags
        qf = q.astype(np.float64)
        r = (x - qf * u0) - qf * u1
        p = np.rint(r)
        ok = np.abs(r - p) < tol
        if start == 0:
            ok[1] = False  # q = -0 duplicates q = 0
        hits = np.flatnonzero(ok)
        if hits.size:
            i = int(hits[0])
            return int(p[i]), int(q[i])
    return None


def topology_report(us: UnitSystem) -> dict:
    H = homology(us)
    K = k_theory(us)
    coh = cohomology(us)
    tr = trace_range(us)
    return {
        "d": us.d,
        "theta": us.theta.as_dict(),
        "phi": [list(r) for r in us.phi],
        "H": [H[f"H{i}"].as_dict() for i in range(4)],
        "cohomology": {k: v.as_dict() for k, v in coh.items()},
        "K0": K["K0"].as_dict(),
        "K1": K["K1"].as_dict(),
        "coker_order": cokernel(one_minus_phi(us)).order_of_torsion,
        "trace_range_u": tr.as_dict(),
        "trace_range_u_value": repr(tr.value),
        "trace_range_dense": tr.is_dense,
    }
