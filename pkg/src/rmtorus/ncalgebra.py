"""Two-cocycles, twisted group rings and the K-Krein structure on V_Lambda.

Group elements are integer tuples: ``(n, m)`` for Z^2 (equivalently Lambda via
the basis ``{1, theta}``) and ``(n, m, k)`` for the semidirect product
``S(Lambda, V) = Z^2 x_phi Z`` with law

    (a, k) (b, l) = (a + b phi^k, k + l).

Complex cocycle values are double precision.  Phases are reduced modulo 2pi
from an exact (or double-double) exponent, so large lattice vectors do not
lose accuracy.  Arithmetic cocycle values are exact field elements.
"""

from __future__ import annotations

import cmath
import math
import random
from collections.abc import Callable, Hashable, Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .lattice import LatticePoint, reduce
from .quadfield import FieldElement, Matrix2, UnitSystem, mat_pow

__all__ = [
    "ArithmeticCocycle",
    "ArithmeticSolvCocycle",
    "KOperator",
    "KreinVector",
    "LambdaCocycle",
    "SolvCocycle",
    "TorusCocycle",
    "TwistedElement",
    "arithmetic_translation",
    "cocycle_eval",
    "cocycle_identity_deviation",
    "commutator_check",
    "dirac_operator",
    "j_involution",
    "krein_adjoint_check",
    "krein_pairing",
    "krein_symmetry_check",
    "rep_product_check",
    "sl2_invariance_test",
    "solv_rep_product_check",
    "t_operator",
    "twisted_mul",
    "u_operator",
]

Real = int | float | Fraction | FieldElement
Z2 = tuple[int, int]
Z3 = tuple[int, int, int]


# --------------------------------------------------------------------------
# phases


@lru_cache(maxsize=256)
def _split(x: Real) -> tuple[Fraction, float]:
    """``x = head + tail`` with ``head`` an exact binary fraction."""
    if isinstance(x, FieldElement):
        if x.is_rational:
            return x.to_fraction(), 0.0
        import mpmath

        with mpmath.workdps(40):
            v = x.to_mpf(1)
            head = float(v)
            return Fraction(head), float(v - head)
    if isinstance(x, (int, Fraction)):
        return Fraction(x), 0.0
    return Fraction(float(x)), 0.0


def half_turns(x: Real, w: int) -> float:
    """``x * w`` reduced into ``[0, 2)``."""
    if w == 0:
        return 0.0
    head, tail = _split(x)
    return float((head * w) % 2) + math.fmod(tail * w, 2.0)


def expi_pi(h: float) -> complex:
    """``exp(i pi h)``, exact at multiples of 1/2."""
    h = h % 2.0
    quarter = {0.0: 1 + 0j, 0.5: 1j, 1.0: -1 + 0j, 1.5: -1j}
    if h in quarter:
        return quarter[h]
    return cmath.exp(1j * math.pi * h)


def wedge(a: Z2, b: Z2) -> int:
    return a[0] * b[1] - a[1] * b[0]


def _row_times(a: Z2, phi_k: Matrix2) -> Z2:
    (p, q), (r, s) = phi_k
    return (a[0] * p + a[1] * r, a[0] * q + a[1] * s)


@lru_cache(maxsize=4096)
def _phi_pow(phi: Matrix2, k: int) -> Matrix2:
    return mat_pow(phi, k)


# --------------------------------------------------------------------------
# cocycles


class _Z2Group:
    identity: Z2 = (0, 0)

    @staticmethod
    def mul(g: Z2, h: Z2) -> Z2:
        return (g[0] + h[0], g[1] + h[1])

    @staticmethod
    def inverse(g: Z2) -> Z2:
        return (-g[0], -g[1])


class _SolvGroup:
    identity: Z3 = (0, 0, 0)
    phi: Matrix2

    def mul(self, g: Z3, h: Z3) -> Z3:
        b = _row_times(h[:2], _phi_pow(self.phi, g[2]))
        return (g[0] + b[0], g[1] + b[1], g[2] + h[2])

    def inverse(self, g: Z3) -> Z3:
        a = _row_times(g[:2], _phi_pow(self.phi, -g[2]))
        return (-a[0], -a[1], -g[2])


class _ComplexValues:
    exact = False

    @staticmethod
    def one() -> complex:
        return 1 + 0j

    @staticmethod
    def conj(z: complex) -> complex:
        return z.conjugate()

    @staticmethod
    def is_zero(z: complex) -> bool:
        return z == 0


@dataclass(frozen=True)
class TorusCocycle(_Z2Group, _ComplexValues):
    """``sigma((n,m),(n',m')) = exp(-2 pi i (xi1 n m' + xi2 m n'))``."""

    xi1: Real
    xi2: Real
    kind = "torus"

    @classmethod
    def normalized(cls, theta: Real) -> TorusCocycle:
        """The SL_2(Z)-invariant choice ``xi2 = theta/2 = -xi1``."""
        if isinstance(theta, (int, Fraction)):
            half = Fraction(theta) / 2
        else:
            half = theta / 2
        return cls(-half, half)

    @property
    def theta(self) -> Real:
        return self.xi2 - self.xi1

    def __call__(self, g: Z2, h: Z2) -> complex:
        hx = half_turns(self.xi1, -2 * g[0] * h[1]) + half_turns(self.xi2, -2 * g[1] * h[0])
        return expi_pi(hx)


@dataclass(frozen=True)
class SolvCocycle(_SolvGroup, _ComplexValues):
    """``sigma_s((a,k),(b,l)) = sigma(a, b phi^k)`` on ``Z^2 x_phi Z``."""

    base: TorusCocycle
    phi: Matrix2
    kind = "solv"

    def __call__(self, g: Z3, h: Z3) -> complex:
        return self.base(g[:2], _row_times(h[:2], _phi_pow(self.phi, g[2])))


@dataclass(frozen=True)
class LambdaCocycle(_Z2Group, _ComplexValues):
    """``sigma_u(lambda, eta) = exp(pi i * factor * u * lambda ^ eta)`` on Lambda.

    ``lambda ^ eta`` is the determinant in R^2, which equals
    ``(theta' - theta) (n r - m k)`` in lattice coordinates.  With ``u`` the
    trace-range generator and ``factor = 1`` this is the normalized torus
    cocycle written on Z^2.
    """

    us: UnitSystem = field(repr=False)
    u: FieldElement
    factor: Fraction = Fraction(1)
    kind = "torus"

    @property
    def exponent(self) -> FieldElement:
        return self.u * (self.us.theta_conj - self.us.theta) * self.factor

    def __call__(self, g: Z2, h: Z2) -> complex:
        return expi_pi(half_turns(self.exponent, wedge(g, h)))


class _FieldValues:
    exact = True
    omega: FieldElement

    def one(self) -> FieldElement:
        return FieldElement(1, 0, 1, self.omega.d, _normalized=True)

    @staticmethod
    def conj(z: FieldElement) -> FieldElement:
        return z.conj()

    @staticmethod
    def is_zero(z: FieldElement) -> bool:
        return z.is_zero()

    def power(self, e: int) -> FieldElement:
        return _omega_power(self.omega, e)


@lru_cache(maxsize=8192)
def _omega_power(omega: FieldElement, e: int) -> FieldElement:
    return omega**e


def _check_unit_norm(omega: FieldElement) -> None:
    if omega.norm() != 1:
        raise ValueError(f"omega = {omega} must have norm 1, got {omega.norm()}")


@dataclass(frozen=True)
class ArithmeticCocycle(_Z2Group, _FieldValues):
    """``w((n,m),(r,k)) = omega^((n,m) ^ (r,k))`` with ``N(omega) = 1``."""

    omega: FieldElement
    kind = "arithmetic"

    def __post_init__(self):
        _check_unit_norm(self.omega)

    def exponent(self, g: Z2, h: Z2) -> int:
        return wedge(g, h)

    def __call__(self, g: Z2, h: Z2) -> FieldElement:
        return self.power(self.exponent(g, h))


@dataclass(frozen=True)
class ArithmeticSolvCocycle(_SolvGroup, _FieldValues):
    omega: FieldElement
    phi: Matrix2
    kind = "arithmetic-solv"

    def __post_init__(self):
        _check_unit_norm(self.omega)

    def exponent(self, g: Z3, h: Z3) -> int:
        return wedge(g[:2], _row_times(h[:2], _phi_pow(self.phi, g[2])))

    def __call__(self, g: Z3, h: Z3) -> FieldElement:
        return self.power(self.exponent(g, h))


Cocycle = TorusCocycle | SolvCocycle | LambdaCocycle | ArithmeticCocycle | ArithmeticSolvCocycle


def cocycle_eval(c: Cocycle, g1: tuple, g2: tuple):
    return c(tuple(g1), tuple(g2))


def random_element(c: Cocycle, rng: random.Random, box: int = 10, kbox: int = 2) -> tuple:
    g = (rng.randint(-box, box), rng.randint(-box, box))
    if isinstance(c, (SolvCocycle, ArithmeticSolvCocycle)):
        return g + (rng.randint(-kbox, kbox),)
    return g


def cocycle_identity_deviation(
    c: Cocycle, triples: int = 10_000, seed: int = 0, box: int = 10, kbox: int = 2, exponents: bool = True
) -> float:
    """Max of ``|s(g1,g2) s(g1g2,g3) - s(g1,g2g3) s(g2,g3)|`` over random triples.

    For exact cocycles this is 0.0 when every identity holds and ``inf`` at
    the first failure.  Arithmetic values are all powers of a unit that is
    not a root of unity, so by default the identity is checked on integer
    exponents; ``exponents=False`` multiplies the field values instead.
    """
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(triples):
        g1, g2, g3 = (random_element(c, rng, box, kbox) for _ in range(3))
        if c.exact and exponents:
            e = c.exponent
            if e(g1, g2) + e(c.mul(g1, g2), g3) != e(g1, c.mul(g2, g3)) + e(g2, g3):
                return math.inf
            continue
        lhs = c(g1, g2) * c(c.mul(g1, g2), g3)
        rhs = c(g1, c.mul(g2, g3)) * c(g2, g3)
        if c.exact:
            if lhs != rhs:
                return math.inf
        else:
            worst = max(worst, abs(lhs - rhs))
    return worst


def _random_sl2(rng: random.Random, length: int = 6) -> Matrix2:
    T: Matrix2 = ((1, 1), (0, 1))
    S: Matrix2 = ((0, -1), (1, 0))
    m: Matrix2 = ((1, 0), (0, 1))
    for _ in range(length):
        step = mat_pow(T, rng.randint(-3, 3)) if rng.random() < 0.6 else S
        (a, b), (c, d) = m
        (p, q), (r, s) = step
        m = ((a * p + b * r, a * q + b * s), (c * p + d * r, c * q + d * s))
    return m


def sl2_invariance_test(
    theta: Real, xi1: Real, xi2: Real, trials: int = 1000, seed: int = 0, tol: float = 1e-10
) -> bool:
    """Check ``sigma(x, y) = sigma(x phi, y phi)`` for random pairs and ``phi`` in SL_2(Z).

    ``theta`` labels the algebra; the cocycle itself is built from ``xi1`` and
    ``xi2`` alone.  The generators T and S are always among the tested
    matrices.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    del theta
    sigma = TorusCocycle(xi1, xi2)
    rng = random.Random(seed)
    fixed: list[Matrix2] = [((1, 1), (0, 1)), ((0, -1), (1, 0))]
    for t in range(trials):
        phi = fixed[t] if t < len(fixed) else _random_sl2(rng)
        x = (rng.randint(-5, 5), rng.randint(-5, 5))
        y = (rng.randint(-5, 5), rng.randint(-5, 5))
        if abs(sigma(x, y) - sigma(_row_times(x, phi), _row_times(y, phi))) > tol:
            return False
    return True


# --------------------------------------------------------------------------
# twisted group rings


@dataclass(frozen=True)
class TwistedElement:
    """Finite sum ``sum_g a_g R_g`` in the twisted group ring of ``cocycle``."""

    terms: Mapping[tuple, object]
    cocycle: Cocycle

    def __post_init__(self):
        pruned = {g: a for g, a in self.terms.items() if not self.cocycle.is_zero(a)}
        object.__setattr__(self, "terms", pruned)

    @classmethod
    def basis(cls, cocycle: Cocycle, g: tuple, coeff=None) -> TwistedElement:
        return cls({tuple(g): cocycle.one() if coeff is None else coeff}, cocycle)

    @classmethod
    def unit(cls, cocycle: Cocycle) -> TwistedElement:
        return cls.basis(cocycle, cocycle.identity)

    def _same(self, other: TwistedElement) -> None:
        if self.cocycle != other.cocycle:
            raise ValueError("twisted elements over different cocycles")

    def __add__(self, other: TwistedElement) -> TwistedElement:
        self._same(other)
        out = dict(self.terms)
        for g, a in other.terms.items():
            out[g] = out[g] + a if g in out else a
        return TwistedElement(out, self.cocycle)

    def scale(self, s) -> TwistedElement:
        return TwistedElement({g: s * a for g, a in self.terms.items()}, self.cocycle)

    def __mul__(self, other: TwistedElement) -> TwistedElement:
        return twisted_mul(self, other)

    def star(self) -> TwistedElement:
        c = self.cocycle
        out = {}
        for g, a in self.terms.items():
            gi = c.inverse(g)
            out[gi] = c.conj(a) * c.conj(c(g, gi))
        return TwistedElement(out, c)

    def distance(self, other: TwistedElement) -> float:
        """Max coefficient difference (0.0 or inf for exact coefficients)."""
        self._same(other)
        keys = set(self.terms) | set(other.terms)
        zero = 0 * self.cocycle.one()
        if self.cocycle.exact:
            same = all(self.terms.get(g, zero) == other.terms.get(g, zero) for g in keys)
            return 0.0 if same else math.inf
        return max((abs(self.terms.get(g, 0) - other.terms.get(g, 0)) for g in keys), default=0.0)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TwistedElement) and self.cocycle == other.cocycle and self.distance(other) == 0.0

    __hash__ = None  # type: ignore[assignment]


def twisted_mul(x: TwistedElement, y: TwistedElement) -> TwistedElement:
    x._same(y)
    c = x.cocycle
    out: dict[tuple, object] = {}
    for g, a in x.terms.items():
        for h, b in y.terms.items():
            gh = c.mul(g, h)
            v = a * b * c(g, h)
            out[gh] = out[gh] + v if gh in out else v
    return TwistedElement(out, c)


def random_twisted(c: Cocycle, rng: random.Random, size: int = 5, box: int = 4) -> TwistedElement:
    terms = {}
    for _ in range(size):
        g = random_element(c, rng, box, 1)
        if c.exact:
            d = c.omega.d
            terms[g] = FieldElement(rng.randint(-5, 5), rng.randint(-5, 5), rng.randint(1, 4), d)
        else:
            terms[g] = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
    return TwistedElement(terms, c)


# --------------------------------------------------------------------------
# Fourier-mode representations on a truncation box


def _box_index(R: int):
    side = 2 * R + 1

    def idx(n: int, m: int) -> int | None:
        if -R <= n <= R and -R <= m <= R:
            return (n + R) * side + (m + R)
        return None

    points = [(n, m) for n in range(-R, R + 1) for m in range(-R, R + 1)]
    return idx, points


def _rep_matrix(sigma: Callable, R: int, g: Z2, phi_k: Matrix2 | None = None) -> np.ndarray:
    """``E_zeta -> sigma(g, zeta phi^k) E_{g + zeta phi^k}`` restricted to the box."""
    idx, points = _box_index(R)
    N = len(points)
    M = np.zeros((N, N), dtype=complex)
    for j, z in enumerate(points):
        w = z if phi_k is None else _row_times(z, phi_k)
        i = idx(g[0] + w[0], g[1] + w[1])
        if i is not None:
            M[i, j] = sigma(g, w)
    return M


def _interior_columns(R: int, maps: Iterable[Callable[[Z2], Z2]]) -> np.ndarray:
    """Columns whose successive images under ``maps`` stay in the box."""
    idx, points = _box_index(R)
    maps = list(maps)
    keep = []
    for j, z in enumerate(points):
        ok = True
        for f in maps:
            z = f(z)
            if idx(*z) is None:
                ok = False
                break
        if ok:
            keep.append(j)
    return np.array(keep, dtype=int)


def _default_u(us: UnitSystem) -> FieldElement:
    return us.theta / (us.theta_conj - us.theta)


def rep_product_check(
    us: UnitSystem,
    u: FieldElement | None = None,
    R: int = 6,
    pairs: Iterable[tuple[Z2, Z2]] | None = None,
    n_pairs: int = 100,
    seed: int = 0,
    factor: Fraction = Fraction(1),
) -> float:
    """Max ``|pi(R_l) pi(R_e) - sigma(l, e) pi(R_{l+e})|`` on interior modes.

    ``pi(R_e) E_l = sigma(e, l) E_{e+l}`` with ``sigma`` the Lambda cocycle
    of parameter ``u`` (default: the trace-range generator).
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    sigma = LambdaCocycle(us, _default_u(us) if u is None else u, Fraction(factor))
    if pairs is None:
        rng = random.Random(seed)
        pairs = [
            ((rng.randint(-2, 2), rng.randint(-2, 2)), (rng.randint(-2, 2), rng.randint(-2, 2))) for _ in range(n_pairs)
        ]
    worst = 0.0
    for lam, eta in pairs:
        lhs = _rep_matrix(sigma, R, lam) @ _rep_matrix(sigma, R, eta)
        rhs = sigma(lam, eta) * _rep_matrix(sigma, R, (lam[0] + eta[0], lam[1] + eta[1]))
        cols = _interior_columns(
            R, [lambda z, e=eta: (z[0] + e[0], z[1] + e[1]), lambda z, g=lam: (z[0] + g[0], z[1] + g[1])]
        )
        if cols.size:
            worst = max(worst, float(np.max(np.abs(lhs[:, cols] - rhs[:, cols]))))
    return worst


def solv_rep_product_check(
    us: UnitSystem,
    u: FieldElement | None = None,
    R: int = 6,
    pairs: Iterable[tuple[Z3, Z3]] | None = None,
    n_pairs: int = 50,
    seed: int = 0,
) -> float:
    """Same check for ``pi(R_(l,k)) E_z = sigma(l, A^k z) E_{l + A^k z}``."""
    sigma = LambdaCocycle(us, _default_u(us) if u is None else u)
    phi = us.phi
    if pairs is None:
        rng = random.Random(seed)
        pairs = [
            (
                (rng.randint(-2, 2), rng.randint(-2, 2), rng.randint(-1, 1)),
                (rng.randint(-2, 2), rng.randint(-2, 2), rng.randint(-1, 1)),
            )
            for _ in range(n_pairs)
        ]
    worst = 0.0
    for g, h in pairs:
        lam, k = g[:2], g[2]
        eta, r = h[:2], h[2]
        pk, pr = _phi_pow(phi, k), _phi_pow(phi, r)
        lhs = _rep_matrix(sigma, R, lam, pk) @ _rep_matrix(sigma, R, eta, pr)
        a_eta = _row_times(eta, pk)
        prod = (lam[0] + a_eta[0], lam[1] + a_eta[1])
        rhs = sigma(lam, a_eta) * _rep_matrix(sigma, R, prod, _phi_pow(phi, k + r))

        def step(z, e=eta, p=pr):
            w = _row_times(z, p)
            return (w[0] + e[0], w[1] + e[1])

        def step2(z, e=lam, p=pk):
            w = _row_times(z, p)
            return (w[0] + e[0], w[1] + e[1])

        cols = _interior_columns(R, [step, step2])
        if cols.size:
            worst = max(worst, float(np.max(np.abs(lhs[:, cols] - rhs[:, cols]))))
    return worst


_PAULI1 = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI2 = np.array([[0, -1j], [1j, 0]], dtype=complex)


def commutator_check(
    us: UnitSystem,
    u: FieldElement | None = None,
    R: int = 6,
    etas: Iterable[Z2] | None = None,
    n: int = 20,
    seed: int = 0,
) -> float:
    """Max deviation of ``[D, pi(R_e)]`` from ``(e_1 s_1 + e_2 s_2) pi(R_e)``.

    ``D`` acts on the mode ``E_l`` (a two-component spinor) by
    ``l_1 s_1 + l_2 s_2`` with ``s_i`` the Pauli matrices.
    """
    sigma = LambdaCocycle(us, _default_u(us) if u is None else u)
    _, points = _box_index(R)
    N = len(points)
    t1, t2 = us.theta.embed(1), us.theta.embed(2)

    def emb(p: Z2) -> tuple[float, float]:
        return p[0] + p[1] * t1, p[0] + p[1] * t2

    D = np.zeros((2 * N, 2 * N), dtype=complex)
    for j, z in enumerate(points):
        l1, l2 = emb(z)
        D[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = l1 * _PAULI1 + l2 * _PAULI2
    if etas is None:
        rng = random.Random(seed)
        etas = [(rng.randint(-2, 2), rng.randint(-2, 2)) for _ in range(n)]
    worst = 0.0
    for eta in etas:
        P = np.kron(_rep_matrix(sigma, R, eta), np.eye(2))
        e1, e2 = emb(eta)
        expected = np.kron(np.eye(N), e1 * _PAULI1 + e2 * _PAULI2) @ P
        comm = D @ P - P @ D
        cols1 = _interior_columns(R, [lambda z, e=eta: (z[0] + e[0], z[1] + e[1])])
        cols = np.concatenate([2 * cols1, 2 * cols1 + 1])
        if cols.size:
            worst = max(worst, float(np.max(np.abs(comm[:, cols] - expected[:, cols]))))
    return worst


# --------------------------------------------------------------------------
# K-Krein space V_Lambda (+) V_Lambda


Label = Hashable


@dataclass(frozen=True)
class KreinVector:
    """Finitely supported ``sum a_x e_x`` with coefficients in K."""

    coeffs: Mapping[Label, FieldElement]
    d: int

    def __post_init__(self):
        object.__setattr__(self, "coeffs", {x: a for x, a in self.coeffs.items() if not a.is_zero()})

    @classmethod
    def basis(cls, label: Label, d: int) -> KreinVector:
        return cls({label: FieldElement(1, 0, 1, d)}, d)

    def __add__(self, other: KreinVector) -> KreinVector:
        out = dict(self.coeffs)
        for x, a in other.coeffs.items():
            out[x] = out[x] + a if x in out else a
        return KreinVector(out, self.d)

    def scale(self, s: FieldElement | int) -> KreinVector:
        return KreinVector({x: a * s for x, a in self.coeffs.items()}, self.d)

    def kappa(self) -> KreinVector:
        return KreinVector({x: a.conj() for x, a in self.coeffs.items()}, self.d)

    def inner(self) -> FieldElement:
        """``(kappa v, v)``, totally positive for ``v != 0``."""
        return krein_pairing(self.kappa(), self)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, KreinVector) and self.coeffs == other.coeffs

    __hash__ = None  # type: ignore[assignment]


def krein_pairing(v: KreinVector, w: KreinVector) -> FieldElement:
    """``(v, w) = sum c(a_x) b_x``: conjugate linear in ``v``."""
    total = FieldElement(0, 0, 1, v.d, _normalized=True)
    small, big = (v.coeffs, w.coeffs)
    for x, a in small.items():
        b = big.get(x)
        if b is not None:
            total = total + a.conj() * b
    return total


@dataclass(frozen=True)
class KOperator:
    """K-linear operator given column by column.

    ``column(x)`` is the image of ``e_x``; ``preimage(y)`` lists every ``x``
    whose image can involve ``e_y`` (used to form the Krein adjoint).
    """

    column: Callable[[Label], Mapping[Label, FieldElement]]
    preimage: Callable[[Label], Iterable[Label]]
    d: int
    name: str = "T"

    def __call__(self, v: KreinVector) -> KreinVector:
        out: dict[Label, FieldElement] = {}
        for x, a in v.coeffs.items():
            for y, t in self.column(x).items():
                out[y] = out[y] + t * a if y in out else t * a
        return KreinVector(out, self.d)

    def dagger(self) -> KOperator:
        """``T^dagger = c(T^t)``, characterized by ``(v, T w) = (T^dagger v, w)``."""

        def column(y):
            out = {}
            for x in self.preimage(y):
                t = self.column(x).get(y)
                if t is not None:
                    out[x] = t.conj()
            return out

        def preimage(x):
            return list(self.column(x))

        return KOperator(column, preimage, self.d, f"{self.name}^+")

    def __matmul__(self, other: KOperator) -> KOperator:
        def column(x):
            return self(KreinVector(dict(other.column(x)), self.d)).coeffs

        def preimage(z):
            return [x for y in self.preimage(z) for x in other.preimage(y)]

        return KOperator(column, preimage, self.d, f"{self.name}{other.name}")

    @classmethod
    def from_matrix(cls, entries: Mapping[Label, Mapping[Label, FieldElement]], d: int, name: str = "T"):
        """Finite operator from ``entries[x][y]`` = coefficient of ``e_y`` in ``T e_x``."""
        rows: dict[Label, list[Label]] = {}
        for x, col in entries.items():
            for y in col:
                rows.setdefault(y, []).append(x)
        return cls(lambda x: entries.get(x, {}), lambda y: rows.get(y, []), d, name)


def krein_adjoint_check(T: KOperator, vectors: Iterable[tuple[KreinVector, KreinVector]]) -> bool:
    """Exact check of ``(v, T w) = (T^dagger v, w)`` on the given pairs."""
    Td = T.dagger()
    return all(krein_pairing(v, T(w)) == krein_pairing(Td(v), w) for v, w in vectors)


def arithmetic_translation(cocycle: ArithmeticCocycle, lam: Z2, doubled: bool = True) -> KOperator:
    """``R_lam e_eta = w(eta, lam) e_{lam + eta}``, on both spinor slots if ``doubled``."""
    lam = tuple(lam)

    if doubled:

        def column(x):
            (p, s) = x
            return {((p[0] + lam[0], p[1] + lam[1]), s): cocycle(p, lam)}

        def preimage(y):
            (p, s) = y
            return [((p[0] - lam[0], p[1] - lam[1]), s)]

    else:

        def column(x):
            return {(x[0] + lam[0], x[1] + lam[1]): cocycle(x, lam)}

        def preimage(y):
            return [(y[0] - lam[0], y[1] - lam[1])]

    return KOperator(column, preimage, cocycle.omega.d, f"R{lam}")


# Labels on V_Lambda (+) V_Lambda are ((n, m), s) with s = +1 or -1.


def dirac_operator(us: UnitSystem) -> KOperator:
    """``D e_(l,+) = c(l) e_(l,-)``, ``D e_(l,-) = l e_(l,+)`` with ``l = n + m theta``."""

    def column(x):
        (p, s) = x
        ell = us.element(*p)
        return {(p, -1): ell.conj()} if s > 0 else {(p, 1): ell}

    return KOperator(column, lambda y: [(y[0], 1), (y[0], -1)], us.d, "D")


class _Reducer:
    def __init__(self, us: UnitSystem):
        self.us = us
        self.cache: dict[Z2, tuple[Z2, int]] = {}

    def __call__(self, p: Z2) -> tuple[Z2, int]:
        # the zero mode has no orbit; T and J act on it as the identity
        if p == (0, 0):
            return p, 0
        if p not in self.cache:
            mu, rho = reduce(self.us, LatticePoint(*p))
            self.cache[p] = ((mu.n, mu.m), rho)
        return self.cache[p]

    def j(self, p: Z2) -> Z2:
        mu, rho = self(p)
        q = _row_times(mu, _phi_pow(self.us.phi, -rho))
        return q


def t_operator(us: UnitSystem, reducer: _Reducer | None = None) -> KOperator:
    """``T e_(l,+-) = eps^(+-rho(l)) e_(l,+-)``."""
    red = reducer or _Reducer(us)

    def column(x):
        (p, s) = x
        return {x: us.epsilon ** (s * red(p)[1])}

    return KOperator(column, lambda y: [y], us.d, "T")


def j_involution(us: UnitSystem, reducer: _Reducer | None = None) -> KOperator:
    """``J e_(l,+-) = e_(J l,+-)`` with ``J(A^k mu) = A^-k mu``."""
    red = reducer or _Reducer(us)
    one = FieldElement(1, 0, 1, us.d)

    def column(x):
        (p, s) = x
        return {(red.j(p), s): one}

    def preimage(y):
        (p, s) = y
        return [(red.j(p), s)]

    return KOperator(column, preimage, us.d, "J")


def u_operator(us: UnitSystem) -> KOperator:
    red = _Reducer(us)
    U = t_operator(us, red) @ j_involution(us, red)
    return KOperator(U.column, U.preimage, us.d, "U")


def krein_symmetry_check(us: UnitSystem, points: Iterable[Z2]) -> bool:
    """Exact check of ``U^dagger D U e = D e`` on ``e_(l,+)`` and ``e_(l,-)``."""
    D = dirac_operator(us)
    U = u_operator(us)
    lhs = U.dagger() @ D @ U
    for p in points:
        p = tuple(p)
        if p == (0, 0):
            continue
        for s in (1, -1):
            e = KreinVector.basis((p, s), us.d)
            if lhs(e) != D(e):
                return False
    return True


def random_krein_vector(rng: random.Random, d: int, size: int = 4, box: int = 5, doubled: bool = True) -> KreinVector:
    coeffs = {}
    while not coeffs:
        for _ in range(size):
            p = (rng.randint(-box, box), rng.randint(-box, box))
            label = (p, rng.choice((1, -1))) if doubled else p
            a = FieldElement(rng.randint(-6, 6), rng.randint(-6, 6), rng.randint(1, 5), d)
            if not a.is_zero():
                coeffs[label] = a
    return KreinVector(coeffs, d)
