"""Verification suites on HP^n: algebra, Killing property, Lie derivative,
the kernel of Phi and the indecomposability certificate."""

from __future__ import annotations

import math
import random
import time
from fractions import Fraction

import numpy as np

from . import linalg
from .bihom import Bihom22
from .certs import CertBundle, digest, int_strs, pmap, sample_seed, sparse_from_json, sparse_json
from .hpn import (
    HorizontalSample,
    PhiEvaluator,
    QuadFormV,
    UndersampledRank,
    _stack,
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
    sample_horizontal,
    stacked_pairing,
    trace_coords,
    trace_multiples,
    v_basis,
    v_basis_indices,
)
from .linalg import DEFAULT_PRIMES, MatR, commutator
from .scalars import parse_rat, rat_str

# sampling boxes: the kernel suite uses the default box, the witness suite
# uses entries in {-1, 0, 1} to keep witness denominators manageable
KERNEL_BOX = {"bound": 10, "max_den": 16}
WITNESS_BOX = {"bound": 1, "max_den": 1}


def decomposable_gap(n: int) -> int:
    """(n - 2)(n + 1)(2n + 1)(2n + 3) / 6."""
    return (n - 2) * (n + 1) * (2 * n + 1) * (2 * n + 3) // 6


# -- row evaluation (module level so it can run in worker processes) --------------

_CTX: dict = {}


def _context(n: int) -> dict:
    ctx = _CTX.get(n)
    if ctx is None:
        qs = build_quat_structure(n)
        ev = PhiEvaluator(n, qs)
        sp = isometry_algebra_basis(n, qs)
        ctx = {"qs": qs, "ev": ev, "sp": sp, "sp_stack": _stack(sp)}
        _CTX[n] = ctx
    return ctx


def _upper(vec: list[int]) -> list[int]:
    v = np.array(vec, dtype=object)
    iu = np.triu_indices(len(vec))
    return [int(x) for x in np.multiply.outer(v, v)[iu]]


def _momenta_ints(ev: PhiEvaluator, s: HorizontalSample) -> list[int]:
    flat = stacked_pairing(ev._SJ, s.X, s.P)
    return [int(v) for v in flat]


def phi_values_int(ev: PhiEvaluator, s: HorizontalSample) -> list[int]:
    """Phi(pair basis) at an integer sample, as exact integers."""
    m = np.array(_momenta_ints(ev, s), dtype=object).reshape(-1, 3)
    H = m.dot(m.T)
    iu = np.triu_indices(m.shape[0])
    return [int(x) for x in H[iu]]


def decomposable_values_int(ctx: dict, s: HorizontalSample) -> list[int]:
    k = [int(v) for v in stacked_pairing(ctx["sp_stack"], s.X, s.P)]
    return _upper(k)


def _draw(n: int, seed: int, i: int, box: dict) -> HorizontalSample:
    qs = _context(n)["qs"]
    return sample_horizontal(n, sample_seed(seed, i), qs, **box).primitive()


def _kernel_job(args):
    n, seed, i = args
    s = _draw(n, seed, i, KERNEL_BOX)
    return s, phi_values_int(_context(n)["ev"], s)


def _witness_job(args):
    n, seed, i = args
    ctx = _context(n)
    s = _draw(n, seed, i, WITNESS_BOX)
    return s, decomposable_values_int(ctx, s), phi_values_int(ctx["ev"], s)


def _sample_json(s: HorizontalSample) -> list[list[str]]:
    return [int_strs(int(v) for v in s.X), int_strs(int(v) for v in s.P)]


def _sample_from_json(obj) -> HorizontalSample:
    return HorizontalSample(tuple(Fraction(int(v)) for v in obj[0]), tuple(Fraction(int(v)) for v in obj[1]))


def _timer(bundle: CertBundle, key: str, t0: float) -> float:
    now = time.perf_counter()
    bundle.timing[key] = round(now - t0, 3)
    return now


# -- algebra --------------------------------------------------------------------

def algebra_suite(n: int) -> CertBundle:
    b = CertBundle("algebra", "hpn", params={"n": n})
    t0 = time.perf_counter()
    qs = build_quat_structure(n)
    J1, J2, J3 = qs.J
    I = MatR.identity(qs.dim)
    qs.check()
    b.claim("J_squares_minus_identity", True, all(J @ J == -I for J in qs.J))
    b.claim("J1J2_commutator_is_2J3", True, commutator(J1, J2) == J3 * 2)
    b.claim("J1J2J3_is_minus_identity", True, J1 @ J2 @ J3 == -I)
    idx = v_basis_indices(n)
    b.claim("dim_V", n * (2 * n + 3) + 1, len(idx))
    ok_sym = ok_comm = ok_tr = ok_skew = True
    for i in idx:
        S = basis_element(i, n)
        ok_sym &= S.is_symmetric()
        ok_comm &= all(commutator(S, J).is_zero() for J in qs.J)
        ok_tr &= S.trace() == (4 if i.is_diag else 0)
        ok_skew &= all(((S @ J) + (S @ J).T).is_zero() for J in qs.J)
    b.claim("basis_symmetric", True, ok_sym)
    b.claim("basis_commutes_with_J", True, ok_comm)
    b.claim("basis_traces", True, ok_tr)
    b.claim("SJ_skew", True, ok_skew)
    sp = isometry_algebra_basis(n, qs)
    b.claim("dim_isometry_algebra", (n + 1) * (2 * n + 3), len(sp))
    b.data["v_basis"] = [i.label() for i in idx]
    b.data["isometry_basis_digest"] = digest([M.to_json() for M in sp])
    _timer(b, "total", t0)
    return b


# -- Killing property and Lie derivative ------------------------------------------

def _non_member(N: int, seed: int) -> MatR:
    """A symmetric integer matrix that does not commute with J1."""
    rng = random.Random(seed)
    A = MatR([[rng.randint(-2, 2) for _ in range(N)] for _ in range(N)], cols=N)
    return A + A.T


def killing_suite(n: int, trials: int = 100, seed: int = 0) -> CertBundle:
    b = CertBundle("killing", "hpn", params={"n": n, "trials": trials, "seed": seed})
    t0 = time.perf_counter()
    qs = build_quat_structure(n)
    results = {}
    for k, (i, S) in enumerate(zip(v_basis_indices(n), v_basis(n))):
        results[i.label()] = geodesic_constancy_sphere(S, qs, trials, sample_seed(seed, k))
    b.claim("constant_along_geodesics", True, all(r["ok"] for r in results.values()))
    ctrl = _non_member(qs.dim, seed)
    rc = geodesic_constancy_sphere(ctrl, qs, 5, seed, check_membership=False)
    b.claim("negative_control_detected", True, not in_v(ctrl, qs) and rc["constant"] < 5)
    b.data["per_element"] = results
    b.data["negative_control"] = rc
    _timer(b, "total", t0)
    return b


def lie_suite(n: int, seed: int = 0) -> CertBundle:
    b = CertBundle("lie", "hpn", params={"n": n, "seed": seed})
    t0 = time.perf_counter()
    qs = build_quat_structure(n)
    zero = expansion_zero = True
    for S in v_basis(n):
        for beta in (1, 2, 3):
            zero &= lie_derivative_poly(S, beta, qs).is_zero()
            expansion_zero &= lie_derivative_expansion(S, beta, qs).is_zero()
    b.claim("lie_derivative_vanishes", True, zero)
    b.claim("commutator_expansion_vanishes", True, expansion_zero)
    ctrl = _non_member(qs.dim, seed)
    nonzero = [beta for beta in (1, 2, 3) if not lie_derivative_poly(ctrl, beta, qs).is_zero()]
    b.claim("negative_control_nonzero", True, bool(nonzero))
    b.data["negative_control_nonzero_betas"] = nonzero
    _timer(b, "total", t0)
    return b


# -- the kernel of Phi ---------------------------------------------------------------

def termwise_identity(n: int, qs=None) -> bool:
    """Phi(Tr . S_B) = sum_a <J_a X, P><S_B J_a X, P> as polynomials, for every B.

    Each term on the right carries a factor <J_a X, P>, which vanishes on
    the horizontal distribution.
    """
    qs = qs or build_quat_structure(n)
    tr = trace_coords(n)
    size = dim_v(n)
    basis = v_basis(n)
    for B in range(size):
        e = [int(k == B) for k in range(size)]
        lhs = phi_poly(QuadFormV.product(n, tr, e), qs)
        rhs = Bihom22.from_skew_pairs([(J, basis[B] @ J) for J in qs.J])
        if lhs != rhs:
            return False
    return True


def same_span(U: list, V: list) -> bool:
    ru = linalg.exact_rank(MatR(U)) if U else 0
    rv = linalg.exact_rank(MatR(V)) if V else 0
    return ru == rv == (linalg.exact_rank(MatR(U + V)) if U or V else 0)


def phi_kernel_suite(n: int, sample_count: int, seed: int, primes=DEFAULT_PRIMES, jobs: int = 1) -> CertBundle:
    """Exact kernel of the sampled evaluation matrix of Phi on Sym^2(V)."""
    if n < 2:
        raise ValueError("the kernel suite needs n >= 2")
    size = dim_v(n)
    ncols = size * (size + 1) // 2
    if sample_count < ncols:
        raise ValueError(f"need at least {ncols} samples")
    b = CertBundle("kernel", "hpn", params={"n": n, "samples": sample_count, "seed": seed,
                                             "box": KERNEL_BOX, "primes": list(primes)})
    t = t0 = time.perf_counter()
    _context(n)
    out = pmap(_kernel_job, [(n, seed, i) for i in range(sample_count)], jobs)
    samples = [s for s, _ in out]
    rows = [r for _, r in out]
    t = _timer(b, "evaluate", t)

    p = primes[0]
    R, C = linalg.pivot_minor(rows, p)
    rank = len(R)
    b.data["rank_minor"] = {"prime": p, "rows": R, "cols": C}
    t = _timer(b, "rank", t)

    trace_vecs = trace_multiples(n)
    b.claim("sym2_dim", size * (size + 1) // 2, ncols)
    b.claim("trace_multiples_vanish_on_samples", True, linalg.kills(rows, trace_vecs))
    b.claim("trace_multiples_independent", size, linalg.exact_rank(MatR(trace_vecs)))
    b.claim("termwise_identity", True, termwise_identity(n))
    t = _timer(b, "trace_multiples", t)

    K = linalg.modular_kernel_basis(rows, primes, cols=ncols)
    t = _timer(b, "kernel", t)
    # rank >= `rank` (nonsingular minor) and the kernel vectors are exact:
    # together they pin down the kernel
    b.claim("kernel_complete", ncols - rank, len(K))
    b.claim("kernel_dim", size, len(K), ok=(len(K) == size) if n >= 3 else True)
    b.claim("kernel_equals_trace_multiples", True, same_span(K, trace_vecs),
            ok=same_span(K, trace_vecs) if n >= 3 else True)
    if n >= 3:
        sol = linalg.kernel_basis(coeff_system(n))
        b.claim("kernel_equals_coefficient_solutions", True, same_span(sol, K))
    t = _timer(b, "cross_check", t)

    extra = max(1, math.ceil(sample_count / 10))
    more = pmap(_kernel_job, [(n, seed, i) for i in range(sample_count, sample_count + extra)], jobs)
    ext_rank = linalg.mod_matrix(rows + [r for _, r in more], p).rank()
    if ext_rank != rank:
        raise UndersampledRank(f"rank moved from {rank} to {ext_rank} with {extra} more samples")
    b.claim("rank_stable_under_oversampling", rank, ext_rank)
    _timer(b, "guard", t)

    b.data["rank_lower_bound"] = rank
    b.data["kernel_basis"] = [[rat_str(v) for v in vec] for vec in K]
    b.data["samples"] = [_sample_json(s) for s in samples]
    if n < 3:
        b.notes.append("n = 2: kernel data recorded, no kernel claim made")
    b.timing["total"] = round(time.perf_counter() - t0, 3)
    return b


def reverify_kernel(b: CertBundle) -> list[str]:
    n = b.params["n"]
    qs = build_quat_structure(n)
    ev = PhiEvaluator(n, qs)
    errors = []
    samples = [_sample_from_json(o) for o in b.data["samples"]]
    for k, s in enumerate(samples):
        try:
            s.check(qs)
        except Exception:
            errors.append(f"kernel: sample {k} is not horizontal")
    if errors:
        return errors
    rows = [phi_values_int(ev, s) for s in samples]
    K = [[parse_rat(v) for v in vec] for vec in b.data["kernel_basis"]]
    if not linalg.kills(rows, K):
        errors.append("kernel: a recorded kernel vector does not vanish on the samples")
    if not linalg.kills(rows, trace_multiples(n)):
        errors.append("kernel: a trace multiple does not vanish on the samples")
    m = b.data["rank_minor"]
    if not linalg.check_minor(rows, m["rows"], m["cols"]):
        errors.append("kernel: recorded rank minor is singular")
    size = dim_v(n)
    if len(m["rows"]) + len(K) != size * (size + 1) // 2:
        errors.append("kernel: rank bound and kernel size do not add up")
    if K and linalg.exact_rank(MatR(K)) != len(K):
        errors.append("kernel: recorded kernel vectors are dependent")
    return errors


# -- indecomposability ------------------------------------------------------------

def _evaluate_witness_rows(n, seed, start, stop, jobs):
    out = pmap(_witness_job, [(n, seed, i) for i in range(start, stop)], jobs)
    return [s for s, _, _ in out], [g for _, g, _ in out], [f for _, _, f in out]


def indecomposability_suite_hpn(n: int, sample_count: int, seed: int, primes=DEFAULT_PRIMES,
                                jobs: int = 1) -> CertBundle:
    """Witnesses that annihilate the decomposable span, paired against image Phi."""
    if n < 2:
        raise ValueError("the indecomposability suite needs n >= 2")
    expected = decomposable_gap(n)
    b = CertBundle("indecomposable", "hpn", params={"n": n, "samples": sample_count, "seed": seed,
                                                     "box": WITNESS_BOX, "primes": list(primes)})
    t = t0 = time.perf_counter()
    ctx = _context(n)
    b.claim("dim_isometry_algebra", (n + 1) * (2 * n + 3), len(ctx["sp"]))
    samples, G, F = _evaluate_witness_rows(n, seed, 0, sample_count, jobs)
    t = _timer(b, "evaluate", t)

    ws, info = linalg.farkas_witnesses(G, F, primes)
    t = _timer(b, "witness_search", t)
    ok, FW, bad = linalg.verify_witness_batch(ws, G, F)
    t = _timer(b, "witness_verify", t)
    b.claim("witnesses_annihilate_decomposables", True, ok)
    p = primes[0]
    PR, PC = linalg.pivot_minor(FW, p) if FW else ([], [])
    pairing = len(PR) if ok else 0
    b.claim("pairing_rank", expected, pairing)
    b.data["rank_G_lower_bound"] = len(info["R0"])
    b.data["rank_GF_lower_bound"] = len(info["Rstar"])
    b.data["columns_G"] = len(G[0])
    b.data["columns_F"] = len(F[0])
    b.data["structure"] = {"R0": info["R0"], "T": info["T"], "C": info["C"]}
    b.data["witnesses"] = [sparse_json(w) for w in ws]
    b.data["pairing_minor"] = {"prime": p, "rows": PR, "cols": PC}
    b.data["pairing_digest"] = digest([int_strs(r) for r in FW])
    b.data["isometry_basis_digest"] = digest([M.to_json() for M in ctx["sp"]])

    if not info["T"]:
        # certify the other direction on the samples: F = G c exactly
        c = _span_coefficients(G, F, info, primes)
        b.claim("image_inside_decomposable_span", True, c is not None)
        if c is not None:
            Ynum, den, C = c
            b.data["span_coefficients"] = {"den": str(den), "cols": C, "num": [int_strs(r) for r in Ynum]}
    t = _timer(b, "span", t)

    extra = max(1, math.ceil(sample_count / 10))
    _, G2, F2 = _evaluate_witness_rows(n, seed, sample_count, sample_count + extra, jobs)
    Gall, Fall = G + G2, F + F2
    rg = linalg.mod_matrix(Gall, p).rank()
    rgf = linalg.mod_matrix([g + f for g, f in zip(Gall, Fall)], p).rank()
    if rgf - rg != len(info["T"]):
        raise UndersampledRank(f"rank gap moved from {len(info['T'])} to {rgf - rg}")
    b.claim("rank_gap_stable_under_oversampling", len(info["T"]), rgf - rg)
    _timer(b, "guard", t)
    b.data["samples"] = [_sample_json(s) for s in samples]
    b.timing["total"] = round(time.perf_counter() - t0, 3)
    return b


def _span_coefficients(G, F, info, primes):
    R0, C = info["R0"], info["C"]
    if not R0:
        return None if any(v for r in F for v in r) else ([], 1, [])
    A = [[G[i][c] for c in C] for i in R0]
    B = [F[i] for i in R0]
    Ynum, den = linalg.exact_solve(A, B, primes)
    if not _check_span(G, F, C, Ynum, den):
        return None
    return Ynum, den, C


def _check_span(G, F, C, Ynum, den) -> bool:
    Gc = np.array([[r[c] for c in C] for r in G], dtype=object)
    return bool(np.all(Gc.dot(np.array(Ynum, dtype=object)) == np.array(F, dtype=object) * den))


def reverify_indecomposable(b: CertBundle) -> list[str]:
    n = b.params["n"]
    ctx = _context(n)
    errors = []
    if b.data["isometry_basis_digest"] != digest([M.to_json() for M in ctx["sp"]]):
        errors.append("indecomposable: isometry algebra basis differs from the recorded one")
    samples = [_sample_from_json(o) for o in b.data["samples"]]
    for k, s in enumerate(samples):
        try:
            s.check(ctx["qs"])
        except Exception:
            errors.append(f"indecomposable: sample {k} is not horizontal")
    if errors:
        return errors
    G = [decomposable_values_int(ctx, s) for s in samples]
    F = [phi_values_int(ctx["ev"], s) for s in samples]
    ws = [sparse_from_json(o) for o in b.data["witnesses"]]
    GW = linalg.apply_witnesses(ws, G)
    for k, r in enumerate(GW):
        if any(r):
            errors.append(f"indecomposable: witness {k} does not annihilate the decomposable span")
    FW = linalg.apply_witnesses(ws, F)
    if digest([int_strs(r) for r in FW]) != b.data["pairing_digest"]:
        errors.append("indecomposable: pairing matrix differs from the recorded digest")
    m = b.data["pairing_minor"]
    if not linalg.check_minor(FW, m["rows"], m["cols"]):
        errors.append("indecomposable: recorded pairing minor is singular")
    observed = len(m["rows"])
    if observed != b.claims["pairing_rank"]["observed"]:
        errors.append("indecomposable: pairing rank does not match the recorded minor")
    sc = b.data.get("span_coefficients")
    if sc is not None:
        Ynum = [[int(v) for v in r] for r in sc["num"]]
        if sc["cols"] and not _check_span(G, F, sc["cols"], Ynum, int(sc["den"])):
            errors.append("indecomposable: span coefficients do not reproduce F")
    return errors
