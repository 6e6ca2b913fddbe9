"""Independent reference computations used by several test modules."""

from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction

import numpy as np


def quotient_profile(M) -> tuple[int, Counter]:
    """Order of Z^2 / M Z^2 and the multiset of element orders, by enumeration.

    Only for nonsingular 2x2 ``M``.  Classes are found by reducing every
    point of the box ``[0, |det|)^2`` modulo the column lattice.
    """
    (a, b), (c, d) = M
    det = a * d - b * c
    if det == 0:
        raise ValueError("singular matrix")
    size = abs(det)

    def in_image(x, y) -> bool:
        # M^{-1} (x, y) integral
        return (d * x - b * y) % det == 0 and (-c * x + a * y) % det == 0

    reps: list[tuple[int, int]] = []
    for x in range(size):
        for y in range(size):
            if not any(in_image(x - rx, y - ry) for rx, ry in reps):
                reps.append((x, y))
    orders = Counter()
    for x, y in reps:
        k = 1
        while not in_image(k * x, k * y):
            k += 1
        orders[k] += 1
    return len(reps), orders


def cyclic_profile(torsion) -> tuple[int, Counter]:
    """Same profile for the group ``sum Z/t_i``."""
    elems = [()]
    for t in torsion:
        elems = [e + (i,) for e in elems for i in range(t)]
    orders = Counter()
    for e in elems:
        k = 1
        for t, x in zip(torsion, e):
            k = k * (t // math.gcd(t, x)) // math.gcd(k, t // math.gcd(t, x))
        orders[k] += 1
    return len(elems), orders


def dense_torus_harper(p: int, q: int, L: int) -> np.ndarray:
    """Eigenvalues of the Harper operator on an L x L periodic lattice (Landau gauge)."""
    assert L % q == 0
    N = L * L
    H = np.zeros((N, N), dtype=complex)

    def idx(x, y):
        return (x % L) * L + (y % L)

    for x in range(L):
        for y in range(L):
            i = idx(x, y)
            H[idx(x + 1, y), i] += 1
            H[idx(x, y + 1), i] += np.exp(2j * np.pi * p * x / q)
    H = H + H.conj().T
    return np.linalg.eigvalsh(H)


def orbit_key(us, p):
    """Float orbit invariant of a lattice point: (N, sign lambda_1, fractional time shift)."""
    nrm = p.norm(us)
    l1, _ = p.embed(us)
    shift = (math.log(abs(l1)) - 0.5 * math.log(abs(nrm))) / math.log(us.epsilon.embed(1))
    frac = round(shift % 1.0, 8) % 1.0
    return nrm, l1 > 0, frac


def brute_orbits(us, B, box):
    """One point per unit orbit with 0 < |N| <= B, by scanning a coordinate box."""
    from rmtorus.lattice import LatticePoint

    seen = {}
    for n in range(-box, box + 1):
        for m in range(-box, box + 1):
            p = LatticePoint(n, m)
            if p.is_zero() or abs(p.norm(us)) > B:
                continue
            seen.setdefault(orbit_key(us, p), p)
    return seen


def pell_oracle(d: int, theta_abc: tuple[int, int, int], box: int = 60):
    """Smallest totally positive norm-1 unit x + y*theta > 1, by exhaustive search."""
    ta, tb, tc = theta_abc
    best = None
    for y in range(0, box + 1):
        for x in range(-box, box + 1):
            # x + y theta = (x*tc + y*ta + y*tb sqrt d)/tc
            a, b = x * tc + y * ta, y * tb
            if Fraction(a * a - d * b * b, tc * tc) != 1:
                continue
            v1 = (a + b * d**0.5) / tc
            v2 = (a - b * d**0.5) / tc
            if v1 > 1 + 1e-12 and v2 > 0 and (best is None or v1 < best[0]):
                best = (v1, x, y)
    return best


def mpf_to_fraction(x) -> Fraction:
    sign, man, exp, _ = x._mpf_
    v = Fraction(int(man)) * (Fraction(2) ** exp)
    return -v if sign else v
