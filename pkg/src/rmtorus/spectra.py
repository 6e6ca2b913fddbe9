"""Dirichlet-type series attached to the unit action, and the Dirac mode spectrum.

All series are evaluated with mpmath at ``dps`` significant digits (default
50, overridable through the ``RMTORUS_DPS`` environment variable).
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .lattice import LatticePoint, OrbitTable, act, enumerate_orbits
from .ncalgebra import krein_symmetry_check
from .quadfield import UnitSystem

__all__ = [
    "DiracMode",
    "EtaComparison",
    "SeriesValue",
    "default_dps",
    "dirac_modes",
    "eta_eta",
    "heat_constant",
    "heat_functional_check",
    "heat_h",
    "heat_log_slope",
    "modes_csv",
    "residue_estimate",
    "shimizu_L",
    "summability_check",
    "z_epsilon",
    "z_epsilon_accelerated",
    "zeta_unsigned",
]

HEAT_CUTOFF = 745  # exp(-745) is below the smallest subnormal double


def default_dps() -> int:
    raw = os.environ.get("RMTORUS_DPS")
    if raw is None:
        return 50
    dps = int(raw)
    if dps < 15:
        raise ValueError("RMTORUS_DPS must be at least 15")
    return dps


def _dps(dps: int | None) -> int:
    return default_dps() if dps is None else dps


@dataclass(frozen=True)
class SeriesValue:
    value: mpmath.mpf
    B: Fraction | None = None
    K: int | None = None
    tail_bound: mpmath.mpf | None = None
    n_terms: int = 0
    warning: str | None = None
    dps: int = 50

    def __float__(self) -> float:
        return float(self.value)

    def as_dict(self) -> dict:
        def s(x):
            return None if x is None else mpmath.nstr(x, self.dps, strip_zeros=False)

        return {
            "value": s(self.value),
            "B": None if self.B is None else str(self.B),
            "K": self.K,
            "tail_bound": s(self.tail_bound),
            "n_terms": self.n_terms,
            "warning": self.warning,
        }


def _mpf_fraction(x: Fraction) -> mpmath.mpf:
    return mpmath.mpf(x.numerator) / x.denominator


def _table(us: UnitSystem, B, table: OrbitTable | None) -> OrbitTable:
    if table is not None:
        if table.bound != Fraction(B):
            raise ValueError(f"orbit table bound {table.bound} differs from B={B}")
        return table
    return enumerate_orbits(us, B)


def _l_terms(table: OrbitTable, s) -> list[mpmath.mpf]:
    return [(1 if nrm > 0 else -1) * mpmath.power(_mpf_fraction(abs(nrm)), -s) for nrm in table.norms]


def shimizu_L(
    us: UnitSystem,
    B: int | Fraction,
    s,
    *,
    raw: bool = False,
    dps: int | None = None,
    table: OrbitTable | None = None,
) -> SeriesValue:
    """Partial sum of ``sum sign(N(mu)) |N(mu)|^-s`` over orbit representatives with ``|N| <= B``.

    Outside the half plane of absolute convergence (``s <= 1``) only the raw
    partial sum is available, and it carries a warning.
    """
    dps = _dps(dps)
    with mpmath.workdps(dps):
        s = mpmath.mpf(s)
        warning = None
        if s <= 1:
            if not raw:
                raise ValueError("s must exceed 1 for a convergent L-series; pass raw=True for the partial sum")
            warning = "raw partial sum: s <= 1 lies outside the region of absolute convergence"
        tab = _table(us, B, table)
        value = mpmath.fsum(_l_terms(tab, s))
        return SeriesValue(+value, Fraction(B), None, None, len(tab), warning, dps)


def _z_tail_bound(log_eps, s, K: int):
    # sum_{|k|>K} (e^{2k} + e^{-2k})^-s <= 2 eps^{-2Ks} / (1 - eps^{-2s})
    q = mpmath.exp(-2 * s * log_eps)
    return 2 * mpmath.exp(-2 * K * s * log_eps) / (1 - q)


def _z_terms(us: UnitSystem, s, K: int) -> list[mpmath.mpf]:
    eps = us.epsilon.to_mpf(1)
    out = []
    for k in range(-K, K + 1):
        e = eps ** (2 * abs(k))
        out.append(mpmath.power(e + 1 / e, -s))
    return out


def z_epsilon(
    us: UnitSystem,
    s,
    K: int | None = None,
    *,
    abs_err: float | None = None,
    dps: int | None = None,
) -> SeriesValue:
    """Symmetric partial sum of ``sum_k (eps^{2k} + eps^{-2k})^-s`` with a rigorous tail bound.

    Give either ``K`` or ``abs_err``; in the latter case ``K`` is the
    smallest cutoff whose tail bound is at most ``abs_err``.
    """
    dps = _dps(dps)
    with mpmath.workdps(dps):
        s = mpmath.mpf(s)
        if s <= 0:
            raise ValueError("Z_epsilon needs s > 0")
        log_eps = us.log_epsilon
        if K is None:
            if abs_err is None:
                raise ValueError("pass K or abs_err")
            K = 0
            while _z_tail_bound(log_eps, s, K) > abs_err:
                K = max(1, 2 * K)
            lo, hi = K // 2, K
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if _z_tail_bound(log_eps, s, mid) > abs_err:
                    lo = mid
                else:
                    hi = mid
            K = hi if _z_tail_bound(log_eps, s, lo) > abs_err else lo
        if K < 0:
            raise ValueError("K must be nonnegative")
        value = mpmath.fsum(_z_terms(us, s, K))
        return SeriesValue(+value, None, K, _z_tail_bound(log_eps, s, K), 2 * K + 1, None, dps)


def z_epsilon_accelerated(us: UnitSystem, s, *, dps: int | None = None) -> SeriesValue:
    """``Z_eps(s)`` to full working precision, usable for tiny ``s``.

    Writes ``(eps^{2k} + eps^{-2k})^-s = q^k (1 + eps^{-4k})^-s`` with
    ``q = eps^{-2s}``, sums the geometric part in closed form and the
    remainder until it drops below the working precision.
    """
    dps = _dps(dps)
    with mpmath.workdps(dps + 10):
        s = mpmath.mpf(s)
        if s <= 0:
            raise ValueError("Z_epsilon needs s > 0")
        log_eps = us.log_epsilon
        q = mpmath.exp(-2 * s * log_eps)
        x = mpmath.exp(-4 * log_eps)
        head = mpmath.power(2, -s) + 2 * q / (1 - q)
        target = mpmath.mpf(10) ** (-(dps + 5))
        terms = []
        k = 0
        # remainder beyond K is at most 2 s x^{K+1} / (1 - x)
        while True:
            k += 1
            xk = x**k
            terms.append(2 * q**k * (mpmath.power(1 + xk, -s) - 1))
            tail = 2 * s * xk * x / (1 - x)
            if tail < target:
                break
        value = head + mpmath.fsum(terms)
    with mpmath.workdps(dps):
        return SeriesValue(+value, None, k, +tail, k, None, dps)


def residue_estimate(us: UnitSystem, *, dps: int | None = None, j_range: tuple[int, int] = (4, 16)) -> dict:
    """Richardson-extrapolated ``lim_{s->0} s Z_eps(s)`` and its distance to ``1/log eps``.

    The special value ``L(Lambda, V, 0)`` is not computed; only the residue
    of the unit factor is checked.
    """
    dps = _dps(dps)
    with mpmath.workdps(dps):
        j0, j1 = j_range
        values = []
        for j in range(j0, j1 + 1):
            s = mpmath.mpf(2) ** (-j)
            values.append(s * z_epsilon_accelerated(us, s, dps=dps).value)
        # s Z(s) = r + c1 s + c2 s^2 + ...; eliminate three powers of s
        table = values
        for order in range(1, 4):
            f = mpmath.mpf(2) ** order
            table = [(f * table[i + 1] - table[i]) / (f - 1) for i in range(len(table) - 1)]
        estimate = table[-1]
        target = 1 / us.log_epsilon
        return {
            "estimate": estimate,
            "target": target,
            "deviation": abs(estimate - target),
            "samples": len(values),
            "richardson_order": 3,
            "dps": dps,
        }


def heat_h(us: UnitSystem, t, *, dps: int | None = None) -> mpmath.mpf:
    """``h(t) = sum_{k>=0} exp(-eps^{2k} t)``, cut off once ``eps^{2k} t > 745``."""
    dps = _dps(dps)
    with mpmath.workdps(dps):
        t = mpmath.mpf(t)
        if t <= 0:
            raise ValueError("t must be positive")
        eps2 = us.epsilon.to_mpf(1) ** 2
        terms = []
        x = t
        while x <= HEAT_CUTOFF:
            terms.append(mpmath.exp(-x))
            x *= eps2
        return mpmath.fsum(terms) if terms else mpmath.mpf(0)


def heat_functional_check(us: UnitSystem, t, *, dps: int | None = None) -> mpmath.mpf:
    """``|h(t) - h(eps^2 t) - exp(-t)|``."""
    dps = _dps(dps)
    with mpmath.workdps(dps):
        t = mpmath.mpf(t)
        eps2 = us.epsilon.to_mpf(1) ** 2
        return abs(heat_h(us, t, dps=dps) - heat_h(us, eps2 * t, dps=dps) - mpmath.exp(-t))


def _period_windows(us: UnitSystem, t_lo: float, t_hi: float, samples: int):
    """Two windows of one log-period each, at the ends of ``[log t_lo, log t_hi]``."""
    period = 2 * float(us.log_epsilon)
    x_lo, x_hi = math.log(t_lo), math.log(t_hi)
    if x_hi - x_lo < period:
        raise ValueError(f"[t_lo, t_hi] must span at least one period 2 log eps = {period:.4g} in log t")
    grid = (np.arange(samples) + 0.5) / samples * period
    return x_lo + grid, x_hi - period + grid, (x_hi - period) - x_lo


def heat_log_slope(
    us: UnitSystem, t_lo: float = 1e-6, t_hi: float = 1e-3, samples: int = 64, *, dps: int | None = None
) -> dict:
    """Slope of ``h`` against ``log(1/t)``.

    ``h(t) - log(1/t)/(2 log eps)`` is log-periodic up to ``O(t)``, with period
    ``2 log eps`` in ``log t``.  Averaging ``h`` over one full period at each
    end of the range cancels the periodic part, so the difference of the two
    averages divided by their separation is the slope.
    """
    dps = _dps(dps)
    first, last, shift = _period_windows(us, t_lo, t_hi, samples)
    with mpmath.workdps(dps):
        avg_first = mpmath.fsum(heat_h(us, mpmath.exp(x), dps=dps) for x in first) / samples
        avg_last = mpmath.fsum(heat_h(us, mpmath.exp(x), dps=dps) for x in last) / samples
        slope = (avg_first - avg_last) / shift
        target = 1 / (2 * us.log_epsilon)
        return {
            "slope": slope,
            "target": target,
            "relative_error": abs(slope / target - 1),
            "t_range": (t_lo, t_hi),
            "samples_per_window": samples,
        }


def heat_constant(us: UnitSystem, t_lo: float = 1e-6, t_hi: float = 1e-3, samples: int = 64, *, dps=None):
    """Empirical constant: period average of ``h(t) - log(1/t)/(2 log eps)`` near ``t_lo``.

    No reference value exists; this is reported, never asserted.
    """
    dps = _dps(dps)
    first, _, _ = _period_windows(us, t_lo, t_hi, samples)
    with mpmath.workdps(dps):
        c = 1 / (2 * us.log_epsilon)
        vals = [heat_h(us, mpmath.exp(x), dps=dps) + c * x for x in first]
        return mpmath.fsum(vals) / samples


# --------------------------------------------------------------------------
# eta / zeta of the mode spectrum


def _exact(x: mpmath.mpf) -> Fraction:
    """The binary value of an mpf as a Fraction (no rounding)."""
    sign, man, exp, _ = x._mpf_
    if sign:
        man = -man
    return Fraction(man * 2**exp) if exp >= 0 else Fraction(man, 2 ** (-exp))


@dataclass(frozen=True)
class EtaComparison:
    double_sum: mpmath.mpf
    product: mpmath.mpf
    difference: mpmath.mpf
    L: SeriesValue
    Z: SeriesValue
    s: mpmath.mpf
    dps: int = 50

    def as_dict(self) -> dict:
        n = lambda x: mpmath.nstr(x, self.dps, strip_zeros=False)  # noqa: E731
        return {
            "s": n(self.s),
            "double_sum": n(self.double_sum),
            "product": n(self.product),
            "difference": n(self.difference),
            "L": self.L.as_dict(),
            "Z": self.Z.as_dict(),
        }


def _factorized(us, B, K, s, dps, table, signed: bool, multiplicity: int) -> EtaComparison:
    """Double sum over modes ``(mu, k)`` against the product of the two factors.

    Each factor's terms are rounded once to ``dps`` digits; the double sum of
    their products and the product of their sums are then formed exactly in
    rational arithmetic, so finite Fubini holds without rounding noise.
    """
    dps = _dps(dps)
    with mpmath.workdps(dps):
        s = mpmath.mpf(s)
        if s <= 2:
            raise ValueError("need s > 2 so that the L-series at s/2 converges")
        tab = _table(us, B, table)
        half = s / 2
        a = _l_terms(tab, half)
        if not signed:
            a = [abs(x) for x in a]
        b = _z_terms(us, half, K)
        fa = [_exact(x) for x in a]
        fb = [_exact(x) for x in b]
        double = sum(multiplicity * x * y for x in fa for y in fb)
        product = multiplicity * sum(fa) * sum(fb)
        to_mpf = lambda f: mpmath.mpf(f.numerator) / f.denominator  # noqa: E731
        L = SeriesValue(mpmath.fsum(a), Fraction(B), None, None, len(a), None, dps)
        Z = SeriesValue(mpmath.fsum(b), None, K, _z_tail_bound(us.log_epsilon, half, K), len(b), None, dps)
        return EtaComparison(to_mpf(double), to_mpf(product), to_mpf(double - product), L, Z, s, dps)


def eta_eta(us: UnitSystem, B, K: int, s, *, dps: int | None = None, table: OrbitTable | None = None) -> EtaComparison:
    """``sum_(mu,k) sign(N mu) ((eps^2k + eps^-2k) |N mu|)^(-s/2)`` against ``L(s/2) Z(s/2)``."""
    return _factorized(us, B, K, s, dps, table, signed=True, multiplicity=1)


def zeta_unsigned(
    us: UnitSystem, B, K: int, s, *, dps: int | None = None, table: OrbitTable | None = None
) -> EtaComparison:
    """Unsigned variant over both eigenvalue signs: ``2 Z(s/2) sum |N mu|^(-s/2)``."""
    return _factorized(us, B, K, s, dps, table, signed=False, multiplicity=2)


def summability_check(us: UnitSystem, B, K: int, s_values, *, dps: int | None = None) -> dict:
    """Truncated ``sum_(mu,k) ((eps^2k + eps^-2k) |N mu|)^(-s/2)`` on a grid of ``s``."""
    dps = _dps(dps)
    tab = enumerate_orbits(us, B)
    with mpmath.workdps(dps):
        vals = []
        for s in s_values:
            half = mpmath.mpf(s) / 2
            zs = mpmath.fsum(_z_terms(us, half, K))
            ls = mpmath.fsum(mpmath.power(_mpf_fraction(abs(n)), -half) for n in tab.norms)
            vals.append(zs * ls)
        finite = all(mpmath.isfinite(v) for v in vals)
        decreasing = all(b < a for a, b in zip(vals, vals[1:]))
        return {"s": list(s_values), "values": vals, "finite": finite, "decreasing": decreasing}


# --------------------------------------------------------------------------
# Dirac modes

_S1 = np.array([[0, 1], [1, 0]], dtype=complex)
_S2 = np.array([[0, -1j], [1j, 0]], dtype=complex)


@dataclass(frozen=True)
class DiracMode:
    """Mode ``A^k(mu)`` of the factored operator ``sign(N) |N|^(1/2) (eps^k s1 + eps^-k s2)``."""

    mu: LatticePoint
    k: int
    sign: int
    abs_norm: Fraction
    # eps^{2k} + eps^{-2k} = Tr(eps^{2k}), a rational integer
    b_square: Fraction
    krein_ok: bool | None = field(default=None, compare=False)

    @property
    def abs_eigenvalue(self) -> float:
        return math.sqrt(float(self.abs_norm) * float(self.b_square))

    @property
    def eigenvalues(self) -> tuple[float, float]:
        e = self.abs_eigenvalue
        return (-e, e)

    def block(self, us: UnitSystem) -> np.ndarray:
        eps = us.epsilon.embed(1)
        return self.sign * math.sqrt(float(self.abs_norm)) * (eps**self.k * _S1 + eps ** (-self.k) * _S2)

    def block_eigenvalues(self, us: UnitSystem) -> np.ndarray:
        return np.linalg.eigvalsh(self.block(us))


def dirac_modes(us: UnitSystem, B, K: int, *, verify_krein: bool = True) -> list[DiracMode]:
    """All modes with ``mu`` an orbit representative, ``|N(mu)| <= B`` and ``|k| <= K``.

    With ``verify_krein`` each mode records whether ``U^+ D U = D`` holds
    exactly on ``e_(A^k mu, +-)``.
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    tab = enumerate_orbits(us, B)
    modes = []
    for mu, nrm in zip(tab.reps, tab.norms):
        for k in range(-K, K + 1):
            b2 = (us.epsilon ** (2 * k)).trace()
            ok = None
            if verify_krein:
                lam = act(us, mu, k)
                ok = krein_symmetry_check(us, [(lam.n, lam.m)])
            modes.append(DiracMode(mu, k, 1 if nrm > 0 else -1, abs(nrm), b2, ok))
    return modes


def modes_csv(modes: list[DiracMode]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mu_n", "mu_m", "k", "sign", "abs_eigenvalue"])
    for m in modes:
        w.writerow([m.mu.n, m.mu.m, m.k, m.sign, repr(m.abs_eigenvalue)])
    return buf.getvalue()
