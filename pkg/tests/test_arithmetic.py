import itertools
import json
import random

import numpy as np
import pytest

from supq import arithmetic as ar
from supq.arithmetic import GaussInt, LatticeElement
from supq.group import Signature
from supq.rootdata import max_R


def congruent_entries(max_norm, N, residue):
    r = int(max_norm ** 0.5) + 1
    return [(x, y) for x in range(-r, r + 1) for y in range(-r, r + 1)
            if x * x + y * y <= max_norm and (x - residue) % N == 0 and y % N == 0]


def brute_su11(N, bound):
    """Every 2x2 Gaussian-integer matrix in the level-N subgroup, entry by entry."""
    diag = congruent_entries(bound, N, 1)
    off = congruent_entries(bound, N, 0)
    nrm = lambda v: v[0] * v[0] + v[1] * v[1]
    out = set()
    for a, b, c, d in itertools.product(diag, off, off, diag):
        if nrm(a) + nrm(b) + nrm(c) + nrm(d) > bound:
            continue
        a_, b_, c_, d_ = (complex(*v) for v in (a, b, c, d))
        # g* I g = I and det g = 1, all in exact integers
        if (nrm(a) - nrm(c) == 1 and nrm(d) - nrm(b) == 1
                and a_.conjugate() * b_ - c_.conjugate() * d_ == 0 and a_ * d_ - b_ * c_ == 1):
            out.add((a, b, c, d))
    return out


def as_tuples(elems):
    return {tuple((x.re, x.im) for row in e.entries for x in row) for e in elems}


def test_gauss_int_arithmetic():
    a, b = GaussInt(1, 2), GaussInt(3, -1)
    assert a * b == GaussInt(5, 5)
    assert (a + b, a - b, -a) == (GaussInt(4, 1), GaussInt(-2, 3), GaussInt(-1, -2))
    assert a.conj().norm() == 5 and complex(a) == 1 + 2j
    assert ar._gi(2 + 3j) == GaussInt(2, 3) and ar._gi((4, 5)) == GaussInt(4, 5)
    with pytest.raises(TypeError):
        ar._gi(0.5)


def test_gdet_matches_float_det():
    rng = random.Random(3)
    for n in (1, 2, 3, 4):
        m = [[GaussInt(rng.randint(-4, 4), rng.randint(-4, 4)) for _ in range(n)] for _ in range(n)]
        ref = np.linalg.det(np.array([[complex(x) for x in row] for row in m]))
        d = ar.gdet(tuple(map(tuple, m)))
        assert abs(complex(d) - ref) < 1e-9


@pytest.mark.parametrize("N,bound", [(1, 14), (2, 40), (3, 80)])
def test_su11_enumeration_matches_brute_force(N, bound):
    sig = Signature(1, 1)
    normal = ar.enumerate_gamma(sig, N, bound, method="normal_form")
    back = ar.enumerate_gamma(sig, N, bound, method="backtrack")
    assert as_tuples(normal) == as_tuples(back) == brute_su11(N, bound)


def test_enumeration_sorted_and_exact():
    elems = ar.enumerate_gamma(Signature(1, 1), 3, 400)
    keys = [ar._sort_key(e) for e in elems]
    assert keys == sorted(keys)
    assert all(e.is_unitary_for_form() and e.level_ok(3) for e in elems)
    assert elems[0].norm_sq == 2 and elems[0].in_K()


@pytest.mark.parametrize("pq,N,bound", [((2, 1), 2, 30), ((2, 1), 3, 60), ((2, 2), 3, 50)])
def test_backtracking_general_signatures(pq, N, bound):
    sig = Signature(*pq)
    elems = ar.enumerate_gamma(sig, N, bound)
    assert elems[0].norm_sq == sig.n and elems[0].in_K()
    assert all(e.is_unitary_for_form() and e.level_ok(N) and e.norm_sq <= bound for e in elems)
    # closed under g -> g^{-1} = I g* I, which preserves the norm
    ipq = np.diag([1] * sig.p + [-1] * sig.q)
    mats = {tuple(np.round(e.matrix().ravel()).astype(complex)) for e in elems}
    for e in elems:
        inv = ipq @ e.matrix().conj().T @ ipq
        assert tuple(inv.ravel()) in mats
    rep = ar.check_lemma_8_3(sig, N, elems)
    assert rep.off_K == 0 or rep.min_off_K_norm >= rep.required


def test_candidate_cap():
    with pytest.raises(ar.BoundTooLarge):
        ar.enumerate_gamma(Signature(2, 1), 1, 200, cap=50)
    with pytest.raises(ValueError):
        ar.enumerate_gamma(Signature(2, 1), 1, 20, method="normal_form")


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
def test_off_k_norm_bound_is_tight_for_su11(N):
    # off-K elements [[a, b], [conj b, conj a]] have norm 2 + 4|b|^2 with |b| >= N
    sig = Signature(1, 1)
    rep = ar.check_lemma_8_3(sig, N, ar.enumerate_gamma(sig, N, 4 * N * N + 2 + 60))
    assert rep.min_off_K_norm == 4 * N * N + 2


def test_off_k_norm_violation_detected():
    sig = Signature(1, 1)
    fake = LatticeElement.of(sig, [[1, 1], [1, 1]])
    with pytest.raises(ar.Violation):
        ar.check_lemma_8_3(sig, 3, [fake])


def test_json_line():
    e = LatticeElement.of(Signature(1, 1), [[1 + 3j, -3], [-3, 1 - 3j]])
    rec = json.loads(e.to_json(3))
    assert rec == {"level": 3, "norm_sq": 38, "entries": [[[1, 3], [-3, 0]], [[-3, 0], [1, -3]]]}


@pytest.mark.parametrize("pq", [(1, 1), (2, 1), (2, 2)])
def test_ksk_norm_bound_samples(pq):
    sig = Signature(*pq)
    rng = np.random.default_rng(8)
    for R in (0.2, max_R(sig.n, 3)):
        mats = ar.sample_KSK_matrices(sig, R, 5000, rng)
        assert np.max(np.abs(mats.conj().transpose(0, 2, 1) @ sig.ipq() @ mats - sig.ipq())) < 1e-9
        assert np.all(np.sum(np.abs(mats) ** 2, axis=(1, 2)) < ar.ksk_norm_bound(sig, R))
    # at the chamber corner t = l = (R, ..., R): ||exp(H_{2t})||^2 = (p - q) + 2q cosh 4R,
    # which reaches the bound n cosh 4R exactly when p = q
    R = 0.5
    g = ar._exp_Ht_batch(sig, np.full((1, sig.q), 2 * R))[0]
    corner = np.sum(np.abs(g) ** 2)
    assert corner == pytest.approx((sig.p - sig.q) + 2 * sig.q * np.cosh(4 * R), rel=1e-14)
    assert corner <= ar.ksk_norm_bound(sig, R) * (1 + 1e-14)


def test_s1_tests_agree():
    for n, pq in ((2, (1, 1)), (3, (2, 1)), (4, (2, 2))):
        sig = Signature(*pq)
        for N in (3, 5, 11):
            Rmax = max_R(n, N)
            for R in (0.5 * Rmax, 0.999 * Rmax, 1.001 * Rmax):
                assert ar.check_s1(sig, N, R) == ar.check_s1_radius(sig, N, R) == (R <= Rmax)
    with pytest.raises(ValueError):
        ar.check_s1(Signature(1, 1), 2, 0.1)


def test_poincare_identity_term_and_order_independence():
    sig = Signature(1, 1)
    rep = ar.truncated_poincare(sig, 3, 4, 0, np.zeros((1, 1)), 2)
    assert rep.partial_value == 1 and rep.terms_used == 1
    elems = ar.enumerate_gamma(sig, 3, 2000)
    ref = ar.truncated_poincare(sig, 3, 4, 1, np.array([[0.2 - 0.1j]]), 2000, elems)
    shuffled = list(elems)
    random.Random(0).shuffle(shuffled)
    again = ar.truncated_poincare(sig, 3, 4, 1, np.array([[0.2 - 0.1j]]), 2000, shuffled)
    assert ref.partial_value == again.partial_value and ref.terms_used == len(elems)
    with pytest.raises(ValueError):
        ar.truncated_poincare(Signature(2, 1), 3, 5, 0, np.zeros((2, 1)), 10)


def test_poincare_matches_direct_sum():
    sig = Signature(1, 1)
    z = 0.25 + 0.1j
    elems = ar.enumerate_gamma(sig, 3, 3000)
    direct = sum((g.matrix()[0, 0] * z + g.matrix()[0, 1]) ** 2 / (g.matrix()[1, 0] * z + g.matrix()[1, 1]) ** 7
                 for g in elems)
    rep = ar.truncated_poincare(sig, 3, 5, 2, np.array([[z]]), 3000, elems)
    assert abs(rep.partial_value - direct) < 1e-12


def test_equivariance_mismatch_shrinks():
    sig = Signature(1, 1)
    g0 = LatticeElement.of(sig, [[1 + 3j, -3], [-3, 1 - 3j]])
    elems = ar.enumerate_gamma(sig, 3, 1 << 14)
    z = np.array([[0.3 + 0.2j]])
    errs = [ar.equivariance_mismatch(sig, 3, 4, 0, z, g0, b, elems) for b in (1 << 10, 1 << 14)]
    assert errs[1] < 0.1 * errs[0]
