import random
from fractions import Fraction

import pytest

from killcert.hpn import (
    Diag,
    HorizontalityError,
    HorizontalSample,
    Off,
    PhiEvaluator,
    QuadFormV,
    basis_element,
    build_quat_structure,
    coeff_system,
    dim_v,
    geodesic_constancy_sphere,
    in_v,
    isometry_algebra_basis,
    lie_derivative_expansion,
    lie_derivative_poly,
    phi_poly,
    phi_row,
    sample_horizontal,
    sym2_pairs,
    trace_coords,
    trace_multiples,
    ts_poly,
    ts_tensor,
    v_basis,
    v_basis_indices,
)
from killcert.hpn_suites import decomposable_gap, phi_values_int, termwise_identity
from killcert.linalg import MatR, commutator, kernel_basis, exact_rank
from killcert.scalars import Oct


@pytest.fixture(scope="module")
def qs3():
    return build_quat_structure(3)


def test_quaternionic_structure():
    for n in (1, 2, 3, 4):
        qs = build_quat_structure(n)
        qs.check()
        J1, J2, J3 = qs.J
        I = MatR.identity(qs.dim)
        assert J1 @ J1 == -I
        assert commutator(J1, J2) == J3 * 2
        assert J1 @ J2 @ J3 == -I


def test_basis_counts():
    for n in (1, 2, 3, 4):
        assert len(v_basis_indices(n)) == dim_v(n) == n * (2 * n + 3) + 1
    assert dim_v(3) == 28
    assert len(sym2_pairs(28)) == 406


def test_basis_elements(qs3):
    S1 = basis_element(Diag(1), 1)
    assert S1 == MatR([[int(i == j and i < 4) for j in range(8)] for i in range(8)])
    assert basis_element(Off(1, 2, "i"), 1).trace() == 0
    for idx in v_basis_indices(3):
        S = basis_element(idx, 3)
        assert in_v(S, qs3)
        assert S.trace() == (4 if idx.is_diag else 0)
        for J in qs3.J:
            SJ = S @ J
            assert (SJ + SJ.T).is_zero()


def test_invalid_index():
    with pytest.raises(ValueError):
        basis_element(Diag(5), 2)
    with pytest.raises(ValueError):
        basis_element(Off(2, 1, 0), 2)


def test_identity_tensor_vanishes_on_horizontal_samples():
    qs = build_quat_structure(2)
    poly = ts_poly(MatR.identity(qs.dim), qs)
    for seed in range(5):
        s = sample_horizontal(2, seed, qs)
        assert poly.eval(s.X, s.P) == 0


def test_ts_poly_value_at_unit_vectors():
    qs = build_quat_structure(1)
    S = basis_element(Diag(1), 1)
    X = [Fraction(int(k == 0)) for k in range(8)]
    P = [Fraction(int(k == 4)) for k in range(8)]
    direct = sum(((S @ J) @ X)[4] ** 2 for J in qs.J)
    assert ts_poly(S, qs).eval(X, P) == direct


def test_ts_poly_rejects_non_members():
    qs = build_quat_structure(1)
    rng = random.Random(0)
    A = MatR([[rng.randint(-2, 2) for _ in range(8)] for _ in range(8)])
    with pytest.raises(ValueError):
        ts_poly(A + A.T, qs)


def test_tensor_symmetries_and_bianchi(qs3):
    rng = random.Random(1)
    S = v_basis(3)[9]

    def vec():
        return [Fraction(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(qs3.dim)]

    for _ in range(5):
        X, Y, P, Q = vec(), vec(), vec(), vec()
        assert ts_tensor(S, qs3, X, Y, P, Q) == ts_tensor(S, qs3, Y, X, P, Q)
        assert ts_tensor(S, qs3, X, Y, P, Q) == ts_tensor(S, qs3, X, Y, Q, P)
        cyc = ts_tensor(S, qs3, X, Y, P, Q) + ts_tensor(S, qs3, Y, P, X, Q) + ts_tensor(S, qs3, P, X, Y, Q)
        assert cyc == 0
        assert ts_tensor(S, qs3, X, X, P, P) == ts_poly(S, qs3).eval(X, P)


def test_lie_derivative_vanishes_on_the_basis(qs3):
    for S in v_basis(3):
        for beta in (1, 2, 3):
            assert lie_derivative_poly(S, beta, qs3).is_zero()
            assert lie_derivative_expansion(S, beta, qs3).is_zero()


def test_lie_derivative_negative_control():
    qs = build_quat_structure(1)
    rng = random.Random(2)
    A = MatR([[rng.randint(-2, 2) for _ in range(8)] for _ in range(8)])
    A = A + A.T
    assert not in_v(A, qs)
    assert any(not lie_derivative_poly(A, beta, qs).is_zero() for beta in (1, 2, 3))


def test_samples_are_horizontal_and_deterministic():
    qs = build_quat_structure(2)
    a = sample_horizontal(2, 11, qs)
    assert a == sample_horizontal(2, 11, qs)
    a.check(qs)
    assert any(a.P)


def test_horizontality_violation_is_reported():
    qs = build_quat_structure(1)
    X = tuple(Fraction(int(k == 0)) for k in range(8))
    with pytest.raises(HorizontalityError):
        HorizontalSample(X, X).check(qs)


def test_phi_row_linear_and_kills_trace_multiples():
    n = 2
    ev = PhiEvaluator(n)
    rng = random.Random(3)
    size = dim_v(n)
    tr = trace_coords(n)
    s = sample_horizontal(n, 4, ev.qs)
    for B in range(size):
        e = [int(k == B) for k in range(size)]
        assert phi_row(QuadFormV.product(n, tr, e), s, ev) == 0
    assert phi_row(QuadFormV.zero(n), s, ev) == 0
    u = [Fraction(rng.randint(-2, 2)) for _ in range(size)]
    v = [Fraction(rng.randint(-2, 2)) for _ in range(size)]
    Q1, Q2 = QuadFormV.product(n, u, u), QuadFormV.product(n, v, v)
    Qs = QuadFormV(n, [[a + 3 * b for a, b in zip(r1, r2)] for r1, r2 in zip(Q1.q, Q2.q)])
    assert phi_row(Qs, s, ev) == phi_row(Q1, s, ev) + 3 * phi_row(Q2, s, ev)


def test_phi_row_block_one_example():
    n = 1
    qs = build_quat_structure(n)
    ev = PhiEvaluator(n, qs)
    X = [Fraction(v) for v in (1, 2, 0, -1, 0, 0, 0, 0)]
    P = [Fraction(0)] * 8
    P[4] = Fraction(3)
    s = HorizontalSample(tuple(X), tuple(P))
    s.check(qs)
    Q = QuadFormV.product(n, [1, 0, 0, 0, 0, 0], [1, 0, 0, 0, 0, 0])
    # S_1 kills block 2, where P lives
    assert phi_row(Q, s, ev) == 0


def test_phi_values_match_phi_row():
    n = 2
    ev = PhiEvaluator(n)
    s = sample_horizontal(n, 5, ev.qs, bound=2, max_den=1).primitive()
    vals = phi_values_int(ev, s)
    pairs = sym2_pairs(dim_v(n))
    for k in (0, 7, 50, len(pairs) - 1):
        a, b = pairs[k]
        e_a = [int(t == a) for t in range(dim_v(n))]
        e_b = [int(t == b) for t in range(dim_v(n))]
        Q = QuadFormV.product(n, e_a, e_b)
        assert phi_row(Q, s, ev) == vals[k]


def test_sym2_coordinates_roundtrip():
    n = 1
    rng = random.Random(6)
    coords = [Fraction(rng.randint(-3, 3)) for _ in range(len(sym2_pairs(dim_v(n))))]
    assert QuadFormV.from_sym2_coords(n, coords).sym2_coords() == coords


def test_bihomogeneity():
    n = 2
    ev = PhiEvaluator(n)
    s = sample_horizontal(n, 8, ev.qs)
    lam, mu = Fraction(2, 3), Fraction(-5)
    t = HorizontalSample(tuple(lam * x for x in s.X), tuple(mu * p for p in s.P))
    Q = QuadFormV.product(n, trace_coords(n), [int(k == 3) for k in range(dim_v(n))])
    Q2 = QuadFormV.product(n, [int(k == 5) for k in range(dim_v(n))], [int(k == 9) for k in range(dim_v(n))])
    for q in (Q, Q2):
        assert phi_row(q, t, ev) == lam**2 * mu**2 * phi_row(q, s, ev)
        assert phi_poly(q, ev.qs).eval(t.X, t.P) == lam**2 * mu**2 * phi_poly(q, ev.qs).eval(s.X, s.P)


def test_coefficient_system_solutions_are_trace_multiples():
    sol = kernel_basis(coeff_system(3))
    tm = trace_multiples(3)
    assert len(sol) == 28
    assert exact_rank(MatR(sol + tm)) == 28


def test_termwise_identity_small_n():
    assert termwise_identity(1)
    assert termwise_identity(2)


def test_isometry_algebra():
    assert len(isometry_algebra_basis(1)) == 10
    basis = isometry_algebra_basis(3)
    assert len(basis) == 36
    J1 = build_quat_structure(3).J[0]
    assert all(M @ J1 == J1 @ M for M in basis)


def test_geodesic_constancy(qs3):
    rep = geodesic_constancy_sphere(MatR.identity(qs3.dim), qs3, 3, 0)
    assert rep["ok"]
    for S in v_basis(3)[:6]:
        assert geodesic_constancy_sphere(S, qs3, 5, 1)["ok"]


def test_geodesic_constancy_negative_control(qs3):
    rng = random.Random(7)
    A = MatR([[rng.randint(-2, 2) for _ in range(16)] for _ in range(16)])
    rep = geodesic_constancy_sphere(A + A.T, qs3, 5, 1, check_membership=False)
    assert not rep["ok"]


def test_decomposable_gap_formula():
    assert [decomposable_gap(n) for n in (2, 3, 4)] == [0, 42, 165]
