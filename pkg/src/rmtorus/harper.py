"""Harper operators: U + U* + V + V* on the noncommutative torus and
U + U* + V + V* + W + W* on the twisted group algebra of S(Lambda, V).
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .ncalgebra import SolvCocycle, TorusCocycle
from .quadfield import FieldElement, UnitSystem
from .topology import TraceRange

__all__ = [
    "Gap",
    "GapLabel",
    "SpectrumResult",
    "butterfly",
    "butterfly_csv",
    "detect_gaps",
    "farey_fluxes",
    "gap_labels",
    "solv_hamiltonian",
    "solv_spectrum",
    "torus_bloch_matrices",
    "torus_spectrum",
]

BAND_MERGE_TOL = 1e-9
LABEL_CAP = 50


@dataclass(frozen=True)
class Gap:
    lo: float
    hi: float
    ids: Fraction | float
    # number of eigenvalues below the gap
    count: int

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    bands: list[tuple[float, float]]
    gaps: list[Gap]
    metadata: dict = field(default_factory=dict)
    untrusted: np.ndarray | None = None
    interior_weight: np.ndarray | None = None

    def ids(self, E: float) -> float:
        """Fraction of eigenvalues ``<= E``."""
        return float(np.searchsorted(self.eigenvalues, E, side="right")) / len(self.eigenvalues)

    def interior_ids(self, E: float) -> float:
        """IDS weighted by each eigenvector's mass on interior sites."""
        if self.interior_weight is None:
            return self.ids(E)
        k = int(np.searchsorted(self.eigenvalues, E, side="right"))
        return float(self.interior_weight[:k].sum() / self.interior_weight.sum())

    @property
    def spectral_radius(self) -> float:
        return float(max(abs(self.eigenvalues[0]), abs(self.eigenvalues[-1])))

    def as_dict(self, labels: list[GapLabel] | None = None) -> dict:
        lab = {(gl.gap.lo, gl.gap.hi): gl for gl in (labels or [])}
        gaps = []
        for g in self.gaps:
            entry = {"lo": g.lo, "hi": g.hi, "ids": _num(g.ids), "count": g.count}
            gl = lab.get((g.lo, g.hi))
            if gl is not None:
                entry["label"] = {"p": gl.p, "q": gl.q}
                entry["residual"] = float(gl.residual)
            gaps.append(entry)
        meta = dict(self.metadata)
        return {
            "flux": meta.pop("flux", None),
            "bands": [[lo, hi] for lo, hi in self.bands],
            "gaps": gaps,
            "truncation": meta.pop("truncation", {}),
            "eigenvalue_count": int(len(self.eigenvalues)),
            "untrusted_count": None if self.untrusted is None else int(self.untrusted.sum()),
            "metadata": meta,
        }


def _num(x):
    if isinstance(x, Fraction):
        return {"num": x.numerator, "den": x.denominator, "value": float(x)}
    return float(x)


# --------------------------------------------------------------------------
# torus, rational flux


def _check_flux(p: int, q: int, periodic: bool) -> tuple[int, int]:
    if q < 1:
        raise ValueError("flux denominator must be positive")
    if periodic:
        p %= q
    elif not 0 <= p < q and not (p == 0 and q == 1):
        raise ValueError(f"flux {p}/{q} outside [0, 1); pass periodic=True to reduce it")
    if math.gcd(p, q) != 1:
        raise ValueError(f"flux {p}/{q} is not reduced")
    return p, q


def _momentum_grid(q: int, G: int) -> tuple[np.ndarray, np.ndarray]:
    # eigenvalues depend on (k1, k2) only through cos(k1) and cos(q k2), so
    # [0, pi] x [0, pi/q] with its corners sweeps every Bloch matrix
    k1 = np.linspace(0.0, math.pi, G)
    k2 = np.linspace(0.0, math.pi / q, G)
    K1, K2 = np.meshgrid(k1, k2, indexing="ij")
    return K1.ravel(), K2.ravel()


def torus_bloch_matrices(p: int, q: int, k1: np.ndarray, k2: np.ndarray) -> np.ndarray:
    """Stack of q x q Bloch Hamiltonians of the magnetic translation algebra at flux p/q."""
    k1 = np.atleast_1d(k1)
    k2 = np.atleast_1d(k2)
    n = k1.size
    j = np.arange(q)
    H = np.zeros((n, q, q), dtype=complex)
    H[:, j, j] = 2 * np.cos(k2[:, None] + 2 * np.pi * p * j[None, :] / q)
    hop = np.zeros((n, q, q), dtype=complex)
    for jj in range(q):
        hop[:, (jj + 1) % q, jj] += np.exp(1j * k1) if jj == q - 1 else 1.0
    return H + hop + np.conj(np.transpose(hop, (0, 2, 1)))


def torus_spectrum(p: int, q: int, G: int = 16, *, periodic: bool = False) -> SpectrumResult:
    """Bands of the Harper operator at rational flux ``p/q`` from a ``G x G`` momentum grid.

    Band ``b`` collects the ``b``-th Bloch eigenvalue over the grid, so each
    band holds exactly ``G^2`` of the ``q G^2`` eigenvalues and the IDS in the
    gap above band ``b`` is ``(b+1)/q`` exactly.
    """
    p, q = _check_flux(p, q, periodic)
    if G < 8:
        raise ValueError("grid G must be at least 8")
    k1, k2 = _momentum_grid(q, G)
    ev = np.linalg.eigvalsh(torus_bloch_matrices(p, q, k1, k2))  # (G^2, q), ascending
    lo = ev.min(axis=0)
    hi = ev.max(axis=0)
    bands = [(float(lo[b]), float(hi[b])) for b in range(q)]
    gaps = []
    for b in range(q - 1):
        if lo[b + 1] - hi[b] > BAND_MERGE_TOL:
            gaps.append(Gap(float(hi[b]), float(lo[b + 1]), Fraction((b + 1) * G * G, q * G * G), (b + 1) * G * G))
    return SpectrumResult(
        np.sort(ev.ravel()),
        bands,
        gaps,
        {"flux": {"p": p, "q": q}, "truncation": {"G": G}, "model": "torus"},
    )


def farey_fluxes(q_max: int) -> list[tuple[int, int]]:
    """All reduced ``p/q`` in ``[0, 1)`` with ``q <= q_max``, ordered by ``q`` then ``p``."""
    return [(p, q) for q in range(1, q_max + 1) for p in range(q) if math.gcd(p, q) == 1]


def butterfly(q_max: int, G: int = 16) -> list[tuple[int, int, int, float, float]]:
    if q_max < 2:
        raise ValueError("q_max must be at least 2")
    rows = []
    for p, q in farey_fluxes(q_max):
        spec = torus_spectrum(p, q, G)
        rows.extend((p, q, b, lo, hi) for b, (lo, hi) in enumerate(spec.bands))
    return rows


def butterfly_csv(rows, header_comments: list[str] | None = None) -> str:
    buf = io.StringIO()
    for line in header_comments or []:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "q", "band_index", "lo", "hi"])
    for p, q, b, lo, hi in rows:
        w.writerow([p, q, b, repr(lo), repr(hi)])
    return buf.getvalue()


# --------------------------------------------------------------------------
# solv group, finite section


def _solv_sites(R: int, Kc: int) -> tuple[list[tuple[int, int, int]], dict]:
    sites = [(n, m, k) for k in range(-Kc, Kc + 1) for n in range(-R, R + 1) for m in range(-R, R + 1)]
    return sites, {s: i for i, s in enumerate(sites)}


def _default_flux(us: UnitSystem) -> FieldElement:
    return us.theta / (us.theta_conj - us.theta)


def solv_hamiltonian(
    us: UnitSystem,
    u: FieldElement | float | None = None,
    R: int = 8,
    Kc: int = 1,
    potential: Mapping[tuple[int, int, int], float] | None = None,
) -> tuple[np.ndarray, list, np.ndarray]:
    """Finite section of ``H = U + U* + V + V* + W + W*`` with open boundary.

    Generators act in the right twisted regular representation,
    ``(R_g f)(x) = sigma_s(x, g) f(x g)``, with ``U = (0,1,0)``,
    ``V = (1,0,0)``, ``W = (0,0,1)``.  Returns ``(H, sites, boundary)``
    where ``boundary`` marks sites missing a U or V neighbour.
    """
    x = _default_flux(us) if u is None else u
    sigma = SolvCocycle(TorusCocycle.normalized(x), us.phi)
    sites, index = _solv_sites(R, Kc)
    N = len(sites)
    M = np.zeros((N, N), dtype=complex)
    boundary = np.zeros(N, dtype=bool)
    for i, s in enumerate(sites):
        for g in ((0, 1, 0), (1, 0, 0), (0, 0, 1)):
            j = index.get(sigma.mul(s, g))
            if j is not None:
                M[i, j] += sigma(s, g)
            elif g[2] == 0:
                boundary[i] = True
        for g in ((0, -1, 0), (-1, 0, 0)):
            if sigma.mul(s, g) not in index:
                boundary[i] = True
    H = M + M.conj().T
    if potential:
        for s, v in potential.items():
            if s in index:
                H[index[s], index[s]] += v
    return H, sites, boundary


def detect_gaps(eigenvalues: np.ndarray, window: int = 10, factor: float = 10.0, min_width: float = 1e-3):
    """Spacings larger than ``factor`` times the local mean spacing and ``min_width``."""
    ev = np.asarray(eigenvalues)
    sp = np.diff(ev)
    n = len(sp)
    out = []
    for i in range(n):
        lo, hi = max(0, i - window), min(n, i + window + 1)
        neigh = np.concatenate([sp[lo:i], sp[i + 1 : hi]])
        mean = float(neigh.mean()) if neigh.size else 0.0
        if sp[i] > min_width and sp[i] > factor * mean:
            out.append(Gap(float(ev[i]), float(ev[i + 1]), (i + 1) / len(ev), i + 1))
    return out


def solv_spectrum(
    us: UnitSystem,
    u: FieldElement | float | None = None,
    R: int = 8,
    Kc: int = 1,
    potential: Mapping[tuple[int, int, int], float] | None = None,
) -> SpectrumResult:
    if R < 4 or Kc < 1:
        raise ValueError("need R >= 4 and Kc >= 1")
    H, sites, boundary = solv_hamiltonian(us, u, R, Kc, potential)
    if int((~boundary).sum()) < 100:
        raise ValueError("truncation too small: fewer than 100 interior sites")
    ev, vec = np.linalg.eigh(H)
    weight = np.abs(vec) ** 2
    bmass = weight[boundary].sum(axis=0)
    gaps = detect_gaps(ev)
    edges = [float(ev[0])] + [x for g in gaps for x in (g.lo, g.hi)] + [float(ev[-1])]
    bands = [(edges[2 * i], edges[2 * i + 1]) for i in range(len(edges) // 2)]
    flux = _default_flux(us) if u is None else u
    flux_value = flux.embed(1) if isinstance(flux, FieldElement) else float(flux)
    return SpectrumResult(
        ev,
        bands,
        gaps,
        {
            "flux": {"u": flux_value, "exact": flux.as_dict() if isinstance(flux, FieldElement) else None},
            "truncation": {"R": R, "Kc": Kc},
            "model": "solv",
            "d": us.d,
            "max_hermitian_defect": float(np.max(np.abs(H - H.conj().T))),
        },
        untrusted=bmass > 0.5,
        interior_weight=1.0 - bmass,
    )


# --------------------------------------------------------------------------
# gap labels


@dataclass(frozen=True)
class GapLabel:
    gap: Gap
    ids: Fraction | float
    p: int
    q: int
    nearest: Fraction | float
    residual: Fraction | float


def gap_labels(
    spec: SpectrumResult, module: TraceRange | Fraction | float, tol: float = 1e-9, cap: int = LABEL_CAP
) -> list[GapLabel]:
    """Match each gap IDS to the nearest ``p + q*alpha`` with ``|q| <= cap``.

    ``alpha`` is the trace-range generator (solv case) or the flux (torus
    case).  Candidates are scanned by increasing ``|q|`` and the first one
    within ``tol`` wins; otherwise the best residual is reported.  Rational
    inputs are matched exactly.
    """
    alpha = module.value if isinstance(module, TraceRange) else module
    exact = isinstance(alpha, (int, Fraction))
    out = []
    for g in spec.gaps:
        x = g.ids
        if exact and isinstance(x, Fraction):
            alpha_f = Fraction(alpha)
        else:
            x, alpha_f = float(x), float(alpha)
        best = None
        for mag in range(cap + 1):
            for q in (mag, -mag) if mag else (0,):
                r = x - q * alpha_f
                p = math.floor(r + Fraction(1, 2)) if isinstance(r, Fraction) else math.floor(r + 0.5)
                res = abs(r - p)
                if best is None or res < best[2]:
                    best = (p, q, res)
                if res <= tol:
                    break
            else:
                continue
            break
        p, q, res = best
        out.append(GapLabel(g, g.ids, p, q, p + q * alpha_f, res))
    return out
