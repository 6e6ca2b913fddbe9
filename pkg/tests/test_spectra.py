from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import brute_orbits

from rmtorus import unit_system
from rmtorus.lattice import LatticePoint, enumerate_orbits
from rmtorus.spectra import (
    default_dps,
    dirac_modes,
    eta_eta,
    heat_constant,
    heat_functional_check,
    heat_h,
    heat_log_slope,
    modes_csv,
    residue_estimate,
    shimizu_L,
    summability_check,
    z_epsilon,
    z_epsilon_accelerated,
    zeta_unsigned,
)


def l_oracle(us, B, s):
    """Brute-force scan with float orbit dedupe, independent of the orbit table."""
    reps = brute_orbits(us, B, 140)
    return math.fsum((1 if float(k[0]) > 0 else -1) * abs(float(k[0])) ** (-s) for k in reps)


def z_oracle(us, s, K):
    eps = float(us.epsilon.embed(1))
    return math.fsum((eps ** (2 * k) + eps ** (-2 * k)) ** (-s) for k in range(-K, K + 1))


def test_default_dps(monkeypatch):
    monkeypatch.delenv("RMTORUS_DPS", raising=False)
    assert default_dps() == 50
    monkeypatch.setenv("RMTORUS_DPS", "80")
    assert default_dps() == 80
    monkeypatch.setenv("RMTORUS_DPS", "3")
    with pytest.raises(ValueError):
        default_dps()


@pytest.mark.parametrize("d", [3, 5, 7])
def test_shimizu_L_matches_brute_force(d):
    us = unit_system(d)
    v = shimizu_L(us, 50, 2)
    assert abs(float(v.value) - l_oracle(us, 50, 2.0)) < 1e-12
    assert v.n_terms == len(enumerate_orbits(us, 50))
    assert shimizu_L(us, 50, 2).value == v.value  # reproducible


def test_shimizu_L_vanishes_with_norm_minus_one_unit():
    # theta has norm -1 for d = 5, so mu and theta*mu pair off with opposite signs
    for d in (2, 5, 13):
        assert shimizu_L(unit_system(d), 60, 2.5).value == 0


def test_shimizu_L_edge_cases():
    us = unit_system(3)
    assert shimizu_L(us, Fraction(1, 2), 2).value == 0
    with pytest.raises(ValueError):
        shimizu_L(us, 10, 1)
    raw = shimizu_L(us, 10, 0.5, raw=True)
    assert raw.warning is not None


def test_shimizu_L_doubling_bound():
    us = unit_system(3)
    a, b = shimizu_L(us, 40, 2), shimizu_L(us, 80, 2)
    new = [n for n in enumerate_orbits(us, 80).norms if abs(n) > 40]
    assert abs(b.value - a.value) <= sum(abs(float(n)) ** -2 for n in new) + 1e-30


def test_z_epsilon_values(us):
    z = z_epsilon(us, 1, 60)
    assert abs(float(z.value) - z_oracle(us, 1.0, 60)) < 1e-13
    z2 = z_epsilon(us, 1, 120)
    assert abs(z2.value - z.value) < 1e-12
    assert abs(z2.value - z.value) <= z.tail_bound
    # large s: k = 0 term 2^-s dominates
    big = z_epsilon(us, 40, 5)
    assert abs(big.value / mpmath.mpf(2) ** -40 - 1) < 1e-10


def test_z_epsilon_tail_bound_honored():
    us = unit_system(5)
    for s in (0.05, 0.5, 2):
        a = z_epsilon(us, s, 10)
        b = z_epsilon(us, s, 30)
        assert b.value - a.value <= a.tail_bound


def test_z_epsilon_abs_err():
    us = unit_system(5)
    z = z_epsilon(us, 0.5, abs_err=1e-20)
    assert z.tail_bound <= 1e-20
    assert z_epsilon(us, 0.5, z.K - 1).tail_bound > 1e-20
    with pytest.raises(ValueError):
        z_epsilon(us, 0, 5)
    with pytest.raises(ValueError):
        z_epsilon(us, 1)


def test_accelerated_matches_direct():
    us = unit_system(13)
    for s in (0.3, 1.0, 2.5):
        a = z_epsilon_accelerated(us, s).value
        b = z_epsilon(us, s, abs_err=1e-45).value
        assert abs(a - b) < 1e-40


def test_small_s_residue_behavior():
    us = unit_system(5)
    s = mpmath.mpf("1e-4")
    assert abs(s * z_epsilon_accelerated(us, s).value - 1 / us.log_epsilon) < 1e-3


def test_residue(us):
    r = residue_estimate(us)
    assert r["deviation"] < 1e-3
    with mpmath.workdps(50):
        assert abs(r["target"] - 1 / mpmath.log(us.epsilon.to_mpf(1))) < mpmath.mpf(10) ** -40


def test_residue_examples():
    assert abs(float(residue_estimate(unit_system(5))["estimate"]) - 1.03904) < 1e-3
    assert abs(float(residue_estimate(unit_system(2))["estimate"]) - 1 / math.log(3 + 2 * math.sqrt(2))) < 1e-3


def test_residue_scaling_with_index():
    r1 = residue_estimate(unit_system(5))["estimate"]
    r2 = residue_estimate(unit_system(5, index=2))["estimate"]
    assert abs(r2 - r1 / 2) < 1e-10


def test_heat_examples():
    us = unit_system(5)
    assert abs(heat_h(us, 100, dps=60) - mpmath.exp(-100)) < mpmath.mpf(10) ** -40
    assert heat_h(us, 1000) == 0
    with pytest.raises(ValueError):
        heat_h(us, 0)


@given(st.sampled_from([2, 3, 5, 13]), st.floats(-3, 3))
def test_heat_functional_equation(d, log10_t):
    assert heat_functional_check(unit_system(d), 10.0**log10_t) < 1e-12


def test_heat_slope_and_constant(us):
    sl = heat_log_slope(us)
    assert sl["relative_error"] < 1e-2
    c = heat_constant(us)
    assert mpmath.isfinite(c)


def test_heat_slope_window_validation():
    with pytest.raises(ValueError):
        heat_log_slope(unit_system(13), 1e-4, 1e-3)


@pytest.mark.parametrize("s", [3, 4, 6])
def test_eta_factorization_exact(s):
    for d in (3, 5):
        cmp = eta_eta(unit_system(d), 50, 60, s)
        assert cmp.difference == 0


def test_eta_against_double_sum_oracle():
    us = unit_system(3)
    cmp = eta_eta(us, 50, 60, 4)
    oracle = l_oracle(us, 50, 2.0) * z_oracle(us, 2.0, 60)
    assert abs(float(cmp.double_sum) - oracle) < 1e-12
    assert abs(float(cmp.double_sum) - 0.37206) < 1e-5


def test_zeta_variant():
    us = unit_system(5)
    cmp = zeta_unsigned(us, 50, 60, 4)
    tab = enumerate_orbits(us, 50)
    unsigned = math.fsum(abs(float(n)) ** -2.0 for n in tab.norms)
    assert abs(float(cmp.product) - 2 * z_oracle(us, 2.0, 60) * unsigned) < 1e-12
    assert cmp.difference == 0


def test_eta_domain():
    with pytest.raises(ValueError):
        eta_eta(unit_system(3), 10, 5, 2)


def test_summability_decreasing(us):
    out = summability_check(us, 50, 60, [3, 3.5, 4, 5, 6])
    assert out["finite"] and out["decreasing"]


def test_dirac_modes():
    us = unit_system(5)
    modes = dirac_modes(us, 5, 2)
    assert len(modes) == len(enumerate_orbits(us, 5)) * 5
    assert all(m.krein_ok for m in modes)
    for m in modes:
        ev = m.block_eigenvalues(us)
        assert abs(ev[0] + ev[1]) < 1e-12  # symmetric about 0
        assert abs(ev[1] - m.abs_eigenvalue) < 1e-12
        if m.k == 0:
            assert abs(m.abs_eigenvalue - math.sqrt(2 * float(m.abs_norm))) < 1e-12
    # mu = (1, 0), k = 1: top eigenvalue sqrt(eps^2 + eps^-2)
    eps = us.epsilon.embed(1)
    one = next(m for m in modes if m.mu == LatticePoint(1, 0) and m.k == 1)
    assert abs(np.max(one.block_eigenvalues(us)) - math.sqrt(eps**2 + eps**-2)) < 1e-12


def test_modes_csv():
    modes = dirac_modes(unit_system(13), 3, 1, verify_krein=False)
    lines = modes_csv(modes).splitlines()
    assert lines[0] == "mu_n,mu_m,k,sign,abs_eigenvalue"
    assert len(lines) == len(modes) + 1
