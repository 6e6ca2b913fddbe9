from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import cyclic_profile, quotient_profile

from rmtorus import unit_system
from rmtorus.quadfield import FieldElement
from rmtorus.topology import (
    AbelianGroup,
    cohomology,
    cokernel,
    homology,
    k_theory,
    one_minus_phi,
    smith_normal_form,
    topology_report,
    trace_membership,
    trace_range,
)


def matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


def det(M):
    if len(M) == 1:
        return M[0][0]
    return sum((-1) ** j * M[0][j] * det([row[:j] + row[j + 1 :] for row in M[1:]]) for j in range(len(M)))


@pytest.mark.parametrize(
    "M, diag",
    [([[0, -1], [-1, -1]], [1, 1]), ([[-2, -2], [-4, -2]], [2, 2]), ([[1, 0], [0, 1]], [1, 1])],
)
def test_snf_examples(M, diag):
    U, D, V = smith_normal_form(M)
    assert [D[i][i] for i in range(2)] == diag
    assert matmul(matmul(U, M), V) == D


@given(
    st.integers(1, 4).flatmap(
        lambda r: st.integers(1, 4).flatmap(
            lambda c: st.lists(st.lists(st.integers(-30, 30), min_size=c, max_size=c), min_size=r, max_size=r)
        )
    )
)
def test_snf_properties(M):
    U, D, V = smith_normal_form(M)
    assert matmul(matmul(U, M), V) == D
    assert abs(det(U)) == 1 and abs(det(V)) == 1
    rows, cols = len(D), len(D[0])
    assert all(D[i][j] == 0 for i in range(rows) for j in range(cols) if i != j)
    diag = [D[i][i] for i in range(min(rows, cols))]
    nz = [x for x in diag if x]
    assert all(x > 0 for x in nz)
    assert diag[: len(nz)] == nz  # zeros trail
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))


@given(st.lists(st.integers(-12, 12), min_size=4, max_size=4))
def test_cokernel_matches_enumeration(entries):
    a, b, c, d = entries
    M = [[a, b], [c, d]]
    if a * d - b * c == 0 or abs(a * d - b * c) > 60:
        return
    g = cokernel(M)
    assert g.free_rank == 0
    assert cyclic_profile(g.torsion) == quotient_profile(M)


def test_abelian_group_validation_and_canonical_form():
    with pytest.raises(ValueError):
        AbelianGroup(0, (4, 2))
    with pytest.raises(ValueError):
        AbelianGroup(0, (1,))
    assert AbelianGroup.from_factors(1, [6, 4]).torsion == (2, 12)
    assert str(AbelianGroup(1, (2, 2))) == "Z + Z/2 + Z/2"
    assert str(AbelianGroup(0)) == "0"


def test_homology_examples():
    h5, h2 = homology(unit_system(5)), homology(unit_system(2))
    assert h5["H1"] == AbelianGroup(1)
    assert h2["H1"] == AbelianGroup(1, (2, 2))
    k5, k2 = k_theory(unit_system(5)), k_theory(unit_system(2))
    assert k5 == {"K0": AbelianGroup(2), "K1": AbelianGroup(2)}
    assert k2["K1"] == AbelianGroup(2, (2, 2))


def test_groups_general(us):
    H, K, C = homology(us), k_theory(us), cohomology(us)
    assert H["H0"] == H["H3"] == AbelianGroup(1)
    assert H["H2"] == AbelianGroup(1)
    assert K["K0"].free_rank == 2 and not K["K0"].torsion
    assert K["K1"].torsion == H["H1"].torsion == C["H^2"].torsion
    coker = cokernel(one_minus_phi(us))
    tr = us.phi[0][0] + us.phi[1][1]
    assert coker.order_of_torsion == abs(2 - tr)


def test_specific_cokernels():
    assert cokernel(one_minus_phi(unit_system(3))).torsion == (2,)
    assert cokernel(one_minus_phi(unit_system(13))).torsion == (3, 3)


def test_trace_range_values():
    tr5 = trace_range(unit_system(5))
    assert tr5.u == FieldElement(-5, -1, 10, 5)
    assert tr5.is_dense
    tr2 = trace_range(unit_system(2))
    assert tr2.u == FieldElement(-1, 0, 2, 2) and not tr2.is_dense
    assert tr5.element(1, 2) == tr5.u * 2 + 1


def test_trace_membership_examples():
    tr = trace_range(unit_system(5))
    assert trace_membership(tr, tr.value, 1e-9) == (0, 1)
    assert trace_membership(tr, 1 + 2 * tr.value + 1e-9, 1e-6) == (1, 2)
    assert trace_membership(tr, 0.123456789, 1e-15, cap=1000) is None
    with pytest.raises(ValueError):
        trace_membership(tr, 0.0, 0.0)


def test_trace_membership_matches_brute_force():
    tr = trace_range(unit_system(13))
    u = tr.value
    x = -3 + 7 * u + 2e-9
    brute = None
    for mag in range(0, 1001):
        for q in (mag, -mag) if mag else (0,):
            p = round(x - q * u)
            if abs(x - p - q * u) < 1e-6:
                brute = (p, q)
                break
        if brute:
            break
    assert trace_membership(tr, x, 1e-6) == brute == (-3, 7)


@given(st.sampled_from([5, 13, 17, 21]), st.integers(-40, 40), st.integers(-40, 40))
def test_trace_membership_recovers_pairs(d, p, q):
    # only dense ranges have unique pairs; theta = sqrt(d) gives u = -1/2
    tr = trace_range(unit_system(d))
    assert tr.is_dense
    assert trace_membership(tr, p + q * tr.value, 1e-9) == (p, q)


def test_report_shape():
    rep = topology_report(unit_system(2))
    assert rep["coker_order"] == 4
    assert rep["trace_range_u"] == {"num_a": -1, "num_b": 0, "den": 2}
    assert [h["free_rank"] for h in rep["H"]] == [1, 1, 1, 1]
