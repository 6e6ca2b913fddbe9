"""Property suites shared by ``rmtorus check`` and the acceptance tests.

Each check yields ``{"value": ..., "tolerance": ..., "passed": bool}``.
Exact checks report ``value`` 0.0 (or ``true``) and tolerance 0.
"""

from __future__ import annotations

import random
from collections.abc import Callable

from .ncalgebra import (
    ArithmeticCocycle,
    ArithmeticSolvCocycle,
    LambdaCocycle,
    SolvCocycle,
    TorusCocycle,
    TwistedElement,
    arithmetic_translation,
    cocycle_identity_deviation,
    commutator_check,
    dirac_operator,
    j_involution,
    krein_adjoint_check,
    krein_pairing,
    krein_symmetry_check,
    random_krein_vector,
    random_twisted,
    rep_product_check,
    sl2_invariance_test,
    solv_rep_product_check,
    t_operator,
    u_operator,
)
from .quadfield import UnitSystem, unit_system
from .spectra import summability_check

COMPLEX_TOL = 1e-12
SUITES = ("cocycle", "rep", "krein")


def _entry(value, tol, passed: bool) -> dict:
    return {"value": value, "tolerance": tol, "passed": bool(passed)}


def _dev(value: float, tol: float = COMPLEX_TOL) -> dict:
    return _entry(float(value), tol, value <= tol)


def _flag(ok: bool) -> dict:
    return _entry(bool(ok), 0, ok)


def _trace_u(us: UnitSystem):
    return us.theta / (us.theta_conj - us.theta)


def cocycle_suite(us: UnitSystem, triples: int = 10_000, seed: int = 0, sl2_trials: int = 1000) -> dict:
    theta = us.theta.embed(1)
    torus = TorusCocycle.normalized(theta)
    omega = us.epsilon
    out = {
        "torus_identity": _dev(cocycle_identity_deviation(torus, triples, seed)),
        "solv_identity": _dev(cocycle_identity_deviation(SolvCocycle(torus, us.phi), triples, seed)),
        "lambda_identity": _dev(cocycle_identity_deviation(LambdaCocycle(us, _trace_u(us)), triples, seed)),
        "arithmetic_identity": _dev(cocycle_identity_deviation(ArithmeticCocycle(omega), triples, seed), 0.0),
        "arithmetic_solv_identity": _dev(
            cocycle_identity_deviation(ArithmeticSolvCocycle(omega, us.phi), triples, seed), 0.0
        ),
        "arithmetic_solv_values": _dev(
            cocycle_identity_deviation(ArithmeticSolvCocycle(omega, us.phi), 200, seed, 3, 1, exponents=False), 0.0
        ),
    }
    invariant = sl2_invariance_test(theta, -theta / 2, theta / 2, sl2_trials, seed)
    generic = sl2_invariance_test(theta, 0.0, theta, sl2_trials, seed)
    out["sl2_invariant_normalized"] = _flag(invariant)
    out["sl2_rejects_generic"] = _flag(not generic)
    return out


def associativity_deviation(c, triples: int, seed: int = 0, size: int = 5) -> float:
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(triples):
        x, y, z = (random_twisted(c, rng, size) for _ in range(3))
        worst = max(worst, ((x * y) * z).distance(x * (y * z)))
    return worst


def star_deviation(c, pairs: int, seed: int = 0, size: int = 5) -> float:
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(pairs):
        x, y = random_twisted(c, rng, size), random_twisted(c, rng, size)
        worst = max(worst, x.star().star().distance(x), (x * y).star().distance(y.star() * x.star()))
    return worst


def rep_suite(us: UnitSystem, seed: int = 0, assoc_triples: int = 200, R: int = 8) -> dict:
    theta = us.theta.embed(1)
    torus = TorusCocycle.normalized(theta)
    solv = SolvCocycle(torus, us.phi)
    arith = ArithmeticSolvCocycle(us.epsilon, us.phi)
    gens = [TwistedElement.basis(solv, g) for g in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
    a, b, c = gens
    return {
        "rep_product": _dev(rep_product_check(us, R=R, n_pairs=100, seed=seed)),
        "solv_rep_product": _dev(solv_rep_product_check(us, R=min(R, 6), seed=seed)),
        "commutator": _dev(commutator_check(us, R=min(R, 6), seed=seed)),
        "generator_associativity": _dev(((a * b) * c).distance(a * (b * c))),
        "torus_associativity": _dev(associativity_deviation(torus, assoc_triples, seed)),
        "solv_associativity": _dev(associativity_deviation(solv, assoc_triples, seed)),
        "arithmetic_solv_associativity": _dev(associativity_deviation(arith, assoc_triples, seed), 0.0),
        "star_involution": _dev(star_deviation(solv, assoc_triples, seed)),
    }


def _basis_points(count: int, seed: int) -> list[tuple[int, int]]:
    rng = random.Random(seed)
    pts: list[tuple[int, int]] = []
    while len(pts) < count:
        p = (rng.randint(-12, 12), rng.randint(-12, 12))
        if p != (0, 0) and p not in pts:
            pts.append(p)
    return pts


def krein_suite(
    us: UnitSystem, seed: int = 0, vectors: int = 1000, basis: int = 100, s_values=(3, 3.5, 4, 4.5, 5, 5.5, 6)
) -> dict:
    rng = random.Random(seed)
    arith = ArithmeticCocycle(us.epsilon)
    iso = True
    for _ in range(50):
        lam = (rng.randint(-4, 4), rng.randint(-4, 4))
        R = arithmetic_translation(arith, lam)
        v = random_krein_vector(rng, us.d)
        w = random_krein_vector(rng, us.d)
        iso &= krein_pairing(R(v), R(w)) == krein_pairing(v, w)
    positive = all(random_krein_vector(rng, us.d).inner().is_totally_positive() for _ in range(vectors))
    pairs = [(random_krein_vector(rng, us.d, box=8), random_krein_vector(rng, us.d, box=8)) for _ in range(30)]
    ops = {
        "D": dirac_operator(us),
        "T": t_operator(us),
        "J": j_involution(us),
        "U": u_operator(us),
        "R": arithmetic_translation(arith, (1, 2)),
    }
    adjoint = all(krein_adjoint_check(T, pairs) for T in ops.values())
    summ = summability_check(us, 50, 60, list(s_values))
    return {
        "translation_isometry": _flag(iso),
        "dirac_unit_invariance": _flag(krein_symmetry_check(us, _basis_points(basis, seed))),
        "krein_adjoints": _flag(adjoint),
        "positivity": _flag(positive),
        "summability": _entry([float(v) for v in summ["values"]], 0, summ["finite"] and summ["decreasing"]),
    }


_RUNNERS: dict[str, Callable[..., dict]] = {
    "cocycle": lambda us, seed, triples: cocycle_suite(us, triples, seed),
    "rep": lambda us, seed, triples: rep_suite(us, seed),
    "krein": lambda us, seed, triples: krein_suite(us, seed),
}


def run_suites(d: int, suite: str = "all", seed: int = 0, triples: int = 10_000) -> dict:
    if suite != "all" and suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    us = unit_system(d)
    names = SUITES if suite == "all" else (suite,)
    results = {name: _RUNNERS[name](us, seed, triples) for name in names}
    passed = all(c["passed"] for r in results.values() for c in r.values())
    return {"d": d, "suite": suite, "seed": seed, "suites": results, "passed": passed}
