import itertools
import random
from fractions import Fraction

import numpy as np
import pytest

from killcert.op2 import (
    BASEPOINT,
    DIM,
    E,
    GRAM,
    H3O,
    PYTHAGOREAN,
    MembershipFailed,
    OP2Point,
    TangentVec,
    base_geodesic,
    derivation_basis,
    det3,
    inner3,
    jordan,
    k_a,
    op2_chart,
    phi3,
    phi3_fast,
    phi3_form,
    random_oct,
    tangent_basis,
    trace3,
    traceless_basis,
    T_vec,
)
from killcert.op2_suites import ToleranceExceeded, cubic_residual, flow_constancy_check, unit_x1, random_h3o, random_traceless
from killcert.linalg import MatR, exact_rank
from killcert.scalars import ONE, ZERO, Oct


@pytest.fixture(scope="module")
def derivs():
    return derivation_basis()


def test_jordan_basics():
    rng = random.Random(0)
    assert jordan(E, E) == E
    for _ in range(50):
        A, B = random_h3o(rng), random_h3o(rng)
        assert jordan(A, B) == jordan(B, A)
    for _ in range(20):
        A, B = random_h3o(rng), random_h3o(rng)
        AA = jordan(A, A)
        assert jordan(AA, jordan(A, B)) == jordan(A, jordan(AA, B))


def test_det_examples():
    assert det3(H3O(2, 3, 5)) == 30
    assert det3(E) == 0
    assert trace3(E) == 1
    assert det3(H3O(1, 1, 1, ONE, ONE, ONE)) == 0


def test_polarization():
    rng = random.Random(1)
    for _ in range(30):
        A = random_h3o(rng)
        assert phi3(A, A, A) == det3(A)
    assert phi3(E, E, E) == 0


def test_phi3_symmetric_and_fast_path():
    rng = random.Random(2)
    for _ in range(5):
        A, B, C = random_h3o(rng), random_h3o(rng), random_h3o(rng)
        v = phi3(A, B, C)
        assert phi3_fast(A, B, C) == v
        assert all(phi3_fast(*p) == v for p in itertools.permutations((A, B, C)))


def test_one_third():
    assert phi3(T_vec(ONE, ZERO), T_vec(ZERO, ONE), unit_x1()) == Fraction(1, 3)


def test_inner_product_is_positive_definite():
    rng = random.Random(3)
    assert all(g > 0 for g in GRAM)
    for _ in range(10):
        A = random_h3o(rng)
        assert inner3(A, A) == trace3(jordan(A, A)) > 0


def test_chart_examples():
    assert op2_chart(ZERO, ZERO).X == H3O(0, 0, 1)
    X = op2_chart(ONE, ZERO).X
    assert X == H3O(Fraction(1, 2), 0, Fraction(1, 2), ZERO, Oct.real(Fraction(1, 2)), ZERO)


def test_chart_points_satisfy_the_equations():
    rng = random.Random(4)
    for _ in range(10):
        pt = op2_chart(random_oct(rng, 2, 8), random_oct(rng, 2, 8))
        assert not any(pt.membership_residuals())


def test_membership_failure():
    with pytest.raises(MembershipFailed):
        OP2Point(H3O(1, 1, -1)).check()


def test_tangent_spaces():
    at_E = tangent_basis(BASEPOINT)
    assert len(at_E) == 16
    span = [t.T.coords() for t in at_E]
    for y, z in ((ONE, ZERO), (ZERO, ONE)):
        assert exact_rank(MatR(span + [T_vec(y, z).coords()])) == 16
    assert len(tangent_basis(op2_chart(ONE, ZERO))) == 16
    rng = random.Random(5)
    for _ in range(20):
        pt = op2_chart(random_oct(rng, 2, 8), random_oct(rng, 2, 8))
        assert len(tangent_basis(pt)) == 16


def test_derivations(derivs):
    assert len(derivs) == 52
    for d in derivs:
        assert d.leibniz_ok()
        assert d.trace_free()
        assert d.skew()


def test_derivations_are_tangent(derivs):
    rng = random.Random(6)
    for _ in range(5):
        pt = op2_chart(random_oct(rng, 2, 8), random_oct(rng, 2, 8))
        for d in derivs:
            TangentVec(pt, d.apply(pt.X)).check()


def test_k_a():
    xi = TangentVec(BASEPOINT, T_vec(ONE, ZERO))
    eta = TangentVec(BASEPOINT, T_vec(ZERO, ONE))
    assert k_a(H3O.zero(), xi, eta) == 0
    assert k_a(unit_x1(), xi, eta) == Fraction(1, 3)
    assert k_a(unit_x1(), xi, eta) == k_a(unit_x1(), eta, xi)
    with pytest.raises(ValueError):
        k_a(E, xi, eta)


def test_base_geodesic():
    pt, v = base_geodesic(1, 0)
    assert pt.X == E and v.T == T_vec(ONE, ZERO)
    base_geodesic(Fraction(3, 5), Fraction(4, 5))
    with pytest.raises(ValueError):
        base_geodesic(Fraction(1, 2), Fraction(1, 2))


def test_K_A_along_base_geodesic():
    rng = random.Random(7)
    geo = [base_geodesic(c, s) for c, s in PYTHAGOREAN]
    for _ in range(20):
        A = random_traceless(rng)
        vals = {k_a(A, v, v) for _, v in geo}
        assert vals == {-A.r3 / 3}


def test_traceless_basis():
    basis = traceless_basis()
    assert len(basis) == 26
    assert all(trace3(A) == 0 for A in basis)
    assert exact_rank(MatR([A.coords() for A in basis])) == 26


def test_flow_check(derivs):
    rng = random.Random(8)
    A = random_traceless(rng)
    rep = flow_constancy_check(A, derivs[:3], [[0.3, -0.7, 0.9]], 1e-9)
    assert rep["drift"] < 1e-9 and rep["det"] < 1e-9
    rep = flow_constancy_check(A, [], [[]], 1e-9)
    assert max(rep.values()) < 1e-12


def test_flow_check_reports_tolerance():
    rng = random.Random(9)
    D = MatR([[rng.randint(-1, 1) for _ in range(DIM)] for _ in range(DIM)])

    class NotADerivation:
        pass

    nd = NotADerivation()
    nd.D = D
    with pytest.raises(ToleranceExceeded):
        flow_constancy_check(random_traceless(rng), [nd], [[0.5]], 1e-9)


def test_det_satisfies_the_cubic_identity():
    rng = random.Random(10)
    for _ in range(30):
        assert cubic_residual(random_h3o(rng)) == H3O.zero()
    assert cubic_residual(unit_x1()) == H3O.zero()
