import random
from fractions import Fraction

import pytest

from killcert import linalg
from killcert.linalg import (
    CHECK_PRIMES,
    DEFAULT_PRIMES,
    BadPrime,
    FarkasWitness,
    MatR,
    exact_rank,
    exact_solve,
    farkas_witnesses,
    kernel_basis,
    modular_rank,
    numpy_rank_mod,
    pairing_rank,
    rational_reconstruct,
    rref_exact,
    rref_naive,
    solve_or_witness,
    verify_kernel_vector,
    verify_witness_batch,
)


def rand_mat(rng, m, n, lo=-3, hi=3, den=3):
    return MatR([[Fraction(rng.randint(lo, hi), rng.randint(1, den)) for _ in range(n)] for _ in range(m)], cols=n)


def low_rank(rng, m, n, r):
    A = rand_mat(rng, m, r)
    B = rand_mat(rng, r, n)
    return A @ B


def test_rref_matches_naive():
    rng = random.Random(0)
    for _ in range(60):
        M = low_rank(rng, rng.randint(1, 7), rng.randint(1, 7), rng.randint(1, 4))
        assert rref_exact(M) == rref_naive(M)


def test_rank_of_transpose():
    rng = random.Random(1)
    for _ in range(30):
        M = low_rank(rng, rng.randint(1, 8), rng.randint(1, 8), rng.randint(1, 4))
        assert rref_exact(M)[1] == rref_exact(M.T)[1]


def test_kernel_basis_is_exact_and_complete():
    rng = random.Random(2)
    for _ in range(30):
        M = low_rank(rng, 6, 8, rng.randint(1, 5))
        K = kernel_basis(M)
        assert len(K) == M.cols - rref_exact(M)[1]
        assert all(verify_kernel_vector(M, v) for v in K)


def test_modular_kernel_path_matches_exact():
    rng = random.Random(3)
    M = low_rank(rng, 30, 25, 17)
    K = linalg.modular_kernel_basis(M)
    assert len(K) == 8
    assert all(verify_kernel_vector(M, v) for v in K)


def test_modular_rank_is_a_lower_bound():
    rng = random.Random(4)
    for _ in range(20):
        M = low_rank(rng, 7, 7, rng.randint(1, 6))
        r = rref_exact(M)[1]
        for p in (3, 5, 7, DEFAULT_PRIMES[0]):
            try:
                assert modular_rank(M, p) <= r
            except BadPrime:
                pass
        assert modular_rank(M, DEFAULT_PRIMES[0]) == r


def test_bad_prime_is_reported():
    with pytest.raises(BadPrime):
        modular_rank(MatR([[Fraction(1, 7)]]), 7)


def test_numpy_rank_agrees_with_flint():
    rng = random.Random(5)
    rows = [[rng.randint(-50, 50) for _ in range(12)] for _ in range(5)]
    rows += [[a + b for a, b in zip(rows[0], rows[1])]]
    for p in CHECK_PRIMES:
        assert numpy_rank_mod(rows, p) == 5


def test_rational_reconstruction():
    m = DEFAULT_PRIMES[0] * DEFAULT_PRIMES[1]
    for q in (Fraction(3, 7), Fraction(-22, 9), Fraction(0)):
        a = q.numerator * pow(q.denominator, -1, m) % m
        assert rational_reconstruct(a, m) == q


def test_solve_branch():
    G = MatR([[1, 2], [3, 4], [5, 6]])
    f = G @ [Fraction(1, 3), Fraction(-2)]
    c = solve_or_witness(G, f)
    assert not isinstance(c, FarkasWitness)
    assert G @ c == f


def test_witness_branch():
    G = MatR([[1, 0], [0, 1], [1, 1]])
    f = [Fraction(0), Fraction(0), Fraction(1)]
    w = solve_or_witness(G, f)
    assert isinstance(w, FarkasWitness)
    assert w.verify(G, f)
    assert w.target_value != 0


def test_witness_json_roundtrip():
    G = MatR([[1, 0], [0, 1], [1, 1]])
    f = [0, 0, 1]
    w = solve_or_witness(G, f)
    again = FarkasWitness.from_json(w.to_json())
    assert again.verify(G, [Fraction(v) for v in f])


def test_random_solve_or_witness_decisions():
    rng = random.Random(6)
    for _ in range(80):
        m, n = rng.randint(1, 7), rng.randint(1, 5)
        G = rand_mat(rng, m, n)
        f = [Fraction(rng.randint(-3, 3), rng.randint(1, 4)) for _ in range(m)]
        res = solve_or_witness(G, f)
        aug = MatR([G.row(i) + [f[i]] for i in range(m)])
        consistent = rref_exact(aug)[1] == rref_exact(G)[1]
        if isinstance(res, FarkasWitness):
            assert not consistent and res.verify(G, f)
        else:
            assert consistent and G @ res == f


def test_perturbed_witness_fails():
    G = MatR([[1, 0], [0, 1], [1, 1]])
    f = [Fraction(0), Fraction(0), Fraction(1)]
    w = solve_or_witness(G, f)
    bad = list(w.w)
    bad[0] += 1
    assert not FarkasWitness(bad, w.target_value).verify(G, f)


def test_exact_solve_both_paths():
    rng = random.Random(7)
    A = [[rng.randint(-9, 9) for _ in range(12)] for _ in range(12)]
    B = [[rng.randint(-9, 9) for _ in range(2)] for _ in range(12)]
    for primes in (DEFAULT_PRIMES, DEFAULT_PRIMES[:1]):
        Y, den = exact_solve(A, B, primes)
        assert all(sum(A[i][k] * Y[k][j] for k in range(12)) == den * B[i][j] for i in range(12) for j in range(2))


def test_batch_witnesses_pair_with_full_rank():
    rng = random.Random(8)
    G = [[rng.randint(-4, 4) for _ in range(5)] for _ in range(25)]
    F = [[rng.randint(-4, 4) for _ in range(3)] for _ in range(25)]
    ws, info = farkas_witnesses(G, F)
    ok, FW, bad = verify_witness_batch(ws, G, F)
    assert ok and not bad
    assert len(ws) == 3
    assert exact_rank(MatR(FW)) == 3


def test_pairing_rank_is_invariant_under_row_operations():
    rng = random.Random(9)
    F = rand_mat(rng, 6, 3)
    W = [[Fraction(rng.randint(-3, 3)) for _ in range(6)] for _ in range(3)]
    r = pairing_rank(W, F)
    mixed = [W[0], [a + 2 * b for a, b in zip(W[1], W[0])], [a - b for a, b in zip(W[2], W[1])]]
    assert pairing_rank(mixed, F) == r


def test_recorded_minor_check():
    rows = [[1, 2, 3], [2, 4, 6], [0, 1, 1]]
    R, C = linalg.pivot_minor(rows, DEFAULT_PRIMES[0])
    assert len(R) == 2
    assert linalg.check_minor(rows, R, C)
    assert not linalg.check_minor(rows, [0, 1], [0, 1])


def test_matr_json_roundtrip():
    M = MatR([[Fraction(1, 2), 3], [0, Fraction(-5, 7)]])
    assert MatR.from_json(M.to_json()) == M
    assert M.digest() == MatR.from_json(M.to_json()).digest()
