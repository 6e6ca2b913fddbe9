"""Exact arithmetic in real quadratic fields Q(sqrt d).

Elements are stored as ``(a + b*sqrt(d)) / c`` with Python integers, so every
comparison used downstream (total positivity, fundamental-domain membership)
is decided exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import mpmath

__all__ = [
    "FieldElement",
    "ContinuedFraction",
    "UnitSystem",
    "continued_fraction_period",
    "default_theta",
    "fixed_points_check",
    "is_squarefree",
    "unit_system",
]


class RationalThetaError(ValueError):
    """Raised when a quadratic irrationality was expected but a rational was given."""


def is_squarefree(n: int) -> bool:
    if n < 1:
        return False
    k = 2
    while k * k <= n:
        if n % (k * k) == 0:
            return False
        k += 1
    return True


def _check_d(d: int) -> None:
    if not isinstance(d, int) or d < 2 or not is_squarefree(d):
        raise ValueError(f"d must be squarefree and >= 2, got {d!r}")


class FieldElement:
    """The number ``(a + b*sqrt(d)) / c`` in the real quadratic field Q(sqrt d).

    The first real embedding sends ``sqrt(d)`` to the positive root, the second
    to the negative one.  Arithmetic with ``int`` and ``Fraction`` operands is
    supported; mixing two different ``d`` raises ``ValueError``.
    """

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a: int, b: int, c: int = 1, d: int = 5, *, _normalized: bool = False) -> None:
        if not _normalized:
            if c == 0:
                raise ZeroDivisionError("denominator is zero")
            if c < 0:
                a, b, c = -a, -b, -c
            g = math.gcd(math.gcd(a, b), c)
            if g > 1:
                a, b, c = a // g, b // g, c // g
        self.a = a
        self.b = b
        self.c = c
        self.d = d

    # construction helpers -------------------------------------------------

    @classmethod
    def checked(cls, a: int, b: int, c: int, d: int) -> FieldElement:
        _check_d(d)
        return cls(a, b, c, d)

    @classmethod
    def rational(cls, q: int | Fraction, d: int) -> FieldElement:
        q = Fraction(q)
        return cls(q.numerator, 0, q.denominator, d)

    @classmethod
    def sqrt_d(cls, d: int) -> FieldElement:
        return cls(0, 1, 1, d)

    def _coerce(self, other: object) -> FieldElement:
        if isinstance(other, FieldElement):
            if other.d != self.d:
                raise ValueError(f"field mismatch: Q(sqrt {self.d}) vs Q(sqrt {other.d})")
            return other
        if isinstance(other, (int, Fraction)):
            return FieldElement.rational(other, self.d)
        return NotImplemented  # type: ignore[return-value]

    # arithmetic -----------------------------------------------------------

    def __add__(self, other: object) -> FieldElement:
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return FieldElement(self.a * o.c + o.a * self.c, self.b * o.c + o.b * self.c, self.c * o.c, self.d)

    __radd__ = __add__

    def __neg__(self) -> FieldElement:
        return FieldElement(-self.a, -self.b, self.c, self.d, _normalized=True)

    def __sub__(self, other: object) -> FieldElement:
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other: object) -> FieldElement:
        return (-self) + other

    def __mul__(self, other: object) -> FieldElement:
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return FieldElement(
            self.a * o.a + self.b * o.b * self.d,
            self.a * o.b + self.b * o.a,
            self.c * o.c,
            self.d,
        )

    __rmul__ = __mul__

    def inverse(self) -> FieldElement:
        # 1/x = c * x' / (a^2 - b^2 d)
        den = self.a * self.a - self.b * self.b * self.d
        if den == 0:
            raise ZeroDivisionError("inverse of zero field element")
        return FieldElement(self.c * self.a, -self.c * self.b, den, self.d)

    def __truediv__(self, other: object) -> FieldElement:
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other: object) -> FieldElement:
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int) -> FieldElement:
        if k < 0:
            return self.inverse() ** (-k)
        result = FieldElement(1, 0, 1, self.d, _normalized=True)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # Galois structure -----------------------------------------------------

    def conj(self) -> FieldElement:
        return FieldElement(self.a, -self.b, self.c, self.d, _normalized=True)

    def norm(self) -> Fraction:
        return Fraction(self.a * self.a - self.b * self.b * self.d, self.c * self.c)

    def trace(self) -> Fraction:
        return Fraction(2 * self.a, self.c)

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def to_fraction(self) -> Fraction:
        if self.b != 0:
            raise ValueError(f"{self} is irrational")
        return Fraction(self.a, self.c)

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    # exact sign / order ---------------------------------------------------

    def sign(self, embedding: int = 1) -> int:
        """Exact sign of the image under embedding 1 or 2."""
        if embedding not in (1, 2):
            raise ValueError("embedding must be 1 or 2")
        a = self.a
        b = self.b if embedding == 1 else -self.b
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return 1 if b > 0 else -1
        if (a > 0) == (b > 0):
            return 1 if a > 0 else -1
        # opposite signs: the larger of a^2, b^2 d wins
        if a * a > b * b * self.d:
            return 1 if a > 0 else -1
        return 1 if b > 0 else -1

    def is_totally_positive(self) -> bool:
        return self.sign(1) > 0 and self.sign(2) > 0

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = FieldElement.rational(other, self.d)
        if not isinstance(other, FieldElement):
            return NotImplemented
        return (self.a, self.b, self.c, self.d) == (other.a, other.b, other.c, other.d)

    def __hash__(self) -> int:
        return hash((self.a, self.b, self.c, self.d))

    # Ordering uses the first embedding, the usual picture of K inside R.
    def __lt__(self, other: object) -> bool:
        return (self - other).sign(1) < 0

    def __le__(self, other: object) -> bool:
        return (self - other).sign(1) <= 0

    def __gt__(self, other: object) -> bool:
        return (self - other).sign(1) > 0

    def __ge__(self, other: object) -> bool:
        return (self - other).sign(1) >= 0

    def floor(self) -> int:
        """Exact floor of the first embedding."""
        bd2 = self.b * self.b * self.d
        if self.b == 0:
            t = 0
        elif self.b > 0:
            t = math.isqrt(bd2)
        else:
            t = -math.isqrt(bd2) - 1
        # b*sqrt(d) = t + f with 0 < f < 1 when b != 0
        return (self.a + t) // self.c

    # numerics -------------------------------------------------------------

    def embed(self, embedding: int = 1) -> float:
        return float(self.to_mpf(embedding))

    def to_mpf(self, embedding: int = 1) -> mpmath.mpf:
        b = self.b if embedding == 1 else -self.b
        return (mpmath.mpf(self.a) + b * mpmath.sqrt(self.d)) / self.c

    def __float__(self) -> float:
        return self.embed(1)

    def __repr__(self) -> str:
        return f"FieldElement({self.a}, {self.b}, {self.c}, d={self.d})"

    def __str__(self) -> str:
        root = f"{'' if abs(self.b) == 1 else abs(self.b)}√{self.d}"
        if self.b == 0:
            num = f"{self.a}"
        elif self.a == 0:
            num = f"{'-' if self.b < 0 else ''}{root}"
        else:
            num = f"{self.a}{'+' if self.b > 0 else '-'}{root}"
        if self.c == 1:
            return num
        return f"({num})/{self.c}"

    def as_dict(self) -> dict[str, int]:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d}


def default_theta(d: int) -> FieldElement:
    """Generator of the maximal order: sqrt(d), or (1+sqrt d)/2 when d = 1 mod 4."""
    _check_d(d)
    if d % 4 == 1:
        return FieldElement(1, 1, 2, d)
    return FieldElement(0, 1, 1, d)


def basis_coordinates(x: FieldElement, theta: FieldElement) -> tuple[Fraction, Fraction]:
    """Rational ``(p, q)`` with ``x = p + q*theta``."""
    q = Fraction(x.b, x.c) / Fraction(theta.b, theta.c)
    rest = x - theta * q
    return rest.to_fraction(), q


@dataclass(frozen=True)
class ContinuedFraction:
    preperiod: tuple[int, ...]
    period: tuple[int, ...]
    # complete quotient at the start of the period
    periodic_quotient: FieldElement

    def terms(self, n: int) -> list[int]:
        out = list(self.preperiod)
        i = 0
        while len(out) < n:
            out.append(self.period[i % len(self.period)])
            i += 1
        return out[:n]


def continued_fraction_period(theta: FieldElement, max_steps: int = 100_000) -> ContinuedFraction:
    """Eventually periodic expansion of a quadratic irrationality.

    The period is located by the first recurrence of an exact complete quotient.
    """
    if theta.b == 0:
        raise RationalThetaError(f"{theta} is rational")
    seen: dict[FieldElement, int] = {}
    quotients: list[int] = []
    x = theta
    for step in range(max_steps):
        if x in seen:
            start = seen[x]
            return ContinuedFraction(tuple(quotients[:start]), tuple(quotients[start:]), x)
        seen[x] = step
        a = x.floor()
        quotients.append(a)
        x = (x - a).inverse()
    raise RuntimeError("continued fraction period not found")  # pragma: no cover


def _mat_mul(m: tuple[tuple[int, int], tuple[int, int]], n: tuple[tuple[int, int], tuple[int, int]]):
    return (
        (m[0][0] * n[0][0] + m[0][1] * n[1][0], m[0][0] * n[0][1] + m[0][1] * n[1][1]),
        (m[1][0] * n[0][0] + m[1][1] * n[1][0], m[1][0] * n[0][1] + m[1][1] * n[1][1]),
    )


Matrix2 = tuple[tuple[int, int], tuple[int, int]]


def mat_pow(m: Matrix2, k: int) -> Matrix2:
    """Integer power of a unimodular 2x2 matrix (negative k uses the exact inverse)."""
    if k < 0:
        (a, b), (c, d) = m
        det = a * d - b * c
        if det not in (1, -1):
            raise ValueError("matrix is not unimodular")
        m = ((d * det, -b * det), (-c * det, a * det))
        k = -k
    result: Matrix2 = ((1, 0), (0, 1))
    while k:
        if k & 1:
            result = _mat_mul(result, m)
        m = _mat_mul(m, m)
        k >>= 1
    return result


def period_matrix(period: tuple[int, ...]) -> Matrix2:
    """Product of ``[[a, 1], [1, 0]]`` over the period."""
    m: Matrix2 = ((1, 0), (0, 1))
    for a in period:
        m = _mat_mul(m, ((a, 1), (1, 0)))
    return m


@dataclass(frozen=True)
class UnitSystem:
    """Lattice ``L = Z + Z*theta`` together with the generator of its positive units.

    ``phi`` is written in row-vector convention: multiplication by ``epsilon``
    sends coordinates ``(n, m)`` (meaning ``n + m*theta``) to ``(n, m) @ phi``.
    """

    d: int
    theta: FieldElement
    epsilon: FieldElement
    phi: Matrix2
    cf: ContinuedFraction
    # exponent of the CF unit giving epsilon (1 or 2), times the subgroup index
    power: int = 1
    index: int = 1
    fundamental_unit: FieldElement | None = field(default=None, compare=False)

    @property
    def theta_conj(self) -> FieldElement:
        return self.theta.conj()

    @cached_property
    def epsilon_inv(self) -> FieldElement:
        return self.epsilon.inverse()

    @cached_property
    def theta_trace(self) -> Fraction:
        return self.theta.trace()

    @cached_property
    def theta_norm(self) -> Fraction:
        return self.theta.norm()

    @cached_property
    def log_epsilon(self) -> mpmath.mpf:
        return mpmath.log(self.epsilon.to_mpf(1))

    def element(self, n: int, m: int) -> FieldElement:
        return self.theta * m + n

    def phi_power(self, k: int) -> Matrix2:
        return mat_pow(self.phi, k)

    def summary(self) -> dict:
        return {
            "d": self.d,
            "theta": self.theta.as_dict(),
            "epsilon": self.epsilon.as_dict(),
            "phi": [list(r) for r in self.phi],
            "index": self.index,
        }


def unit_system(d: int, theta: FieldElement | None = None, index: int = 1) -> UnitSystem:
    """Build the unit data of ``L = Z + Z*theta``.

    ``epsilon`` is the smallest totally positive unit ``> 1`` with
    ``epsilon*L`` contained in ``L``, raised to ``index`` when a finite index
    subgroup ``V`` is requested.
    """
    _check_d(d)
    if theta is None:
        theta = default_theta(d)
    if theta.d != d:
        raise ValueError(f"theta lives in Q(sqrt {theta.d}), not Q(sqrt {d})")
    if theta.b == 0:
        raise RationalThetaError(f"theta = {theta} is rational")
    if index < 1:
        raise ValueError("index must be a positive integer")

    cf = continued_fraction_period(theta)
    # For the purely periodic tail x, period_matrix maps (x, 1) to eta*(x, 1)
    # with eta = Q_{p-1} x + Q_{p-2} > 1: a unit of the multiplier ring of L.
    (_, _), (q1, q0) = period_matrix(cf.period)
    x = cf.periodic_quotient
    eta = x * q1 + q0
    power = 1
    eps = eta
    if not (eps.norm() == 1 and eps.is_totally_positive()):
        eps = eta * eta
        power = 2
    eps = eps**index

    a, b = basis_coordinates(eps, theta)
    c, dd = basis_coordinates(eps * theta, theta)
    if any(v.denominator != 1 for v in (a, b, c, dd)):
        raise ArithmeticError("unit does not preserve the lattice")  # pragma: no cover
    phi: Matrix2 = ((int(a), int(b)), (int(c), int(dd)))
    return UnitSystem(d, theta, eps, phi, cf, power, index, fundamental_unit=eta)


def fixed_points_check(us: UnitSystem, phi: Matrix2 | None = None) -> bool:
    """True iff 1/theta and 1/theta' are fixed by x -> (a x + b)/(c x + d)."""
    (a, b), (c, d) = us.phi if phi is None else phi
    for x in (us.theta.inverse(), us.theta_conj.inverse()):
        den = x * c + d
        if den.is_zero() or (x * a + b) / den != x:
            return False
    return True
