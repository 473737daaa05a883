import numpy as np
import pytest

from supq import integrand as it
from supq.group import Signature
from supq.integrand import Constant, DetPower, KAverageConfig, MonomialSum, WeightSpec


def test_weight_spec_bound():
    WeightSpec(Signature(2, 2), 7)
    with pytest.raises(ValueError):
        WeightSpec(Signature(2, 2), 6)
    with pytest.raises(ValueError):
        WeightSpec(Signature(1, 1), 2)


def test_det_power_requires_square():
    with pytest.raises(ValueError):
        DetPower(1).check(Signature(2, 1))
    with pytest.raises(ValueError):
        DetPower(-1)
    assert DetPower(2)(np.array([[0.5, 0], [0, 0.5j]])) == pytest.approx(-1 / 16)


def test_parse_poly():
    sig = Signature(2, 2)
    assert it.parse_poly("det^3", sig) == DetPower(3)
    assert it.parse_poly("const (1+2j)", sig) == Constant(1 + 2j)
    f = it.parse_poly("sum: z[1][1]*z[2][2] - z[1][2]*z[2][1]", sig)
    z = np.array([[0.1 + 0.2j, 0.3], [-0.4j, 0.5]])
    assert f(z) == pytest.approx(np.linalg.det(z))
    g = it.parse_poly("sum: 2*z[1][2]^3 + (0.5-1j)*z[2][1]", sig)
    assert g(z) == pytest.approx(2 * 0.3 ** 3 + (0.5 - 1j) * (-0.4j))
    for bad in ("det^x", "sum: z[3][1]", "cubic"):
        with pytest.raises(ValueError):
            it.parse_poly(bad, sig)
    with pytest.raises(ValueError):
        it.parse_poly("det^1", Signature(2, 1))


def test_monomial_sum_vectorized_and_zero():
    f = MonomialSum.of([([[1, 0], [0, 1]], 1.0), ([[0, 1], [1, 0]], -1.0)])
    zs = np.random.default_rng(0).standard_normal((6, 2, 2)) + 0j
    assert np.allclose(f(zs), np.linalg.det(zs))
    assert MonomialSum.of([([[1]], 0.0)]).is_zero()
    with pytest.raises(ValueError):
        f.check(Signature(2, 1))


@pytest.mark.parametrize("pq", [(1, 1), (2, 1), (2, 2), (3, 2)])
def test_haar_K_is_special_unitary(pq):
    sig = Signature(*pq)
    a, d = it.haar_batch_K(sig, 200, 5)
    assert np.allclose(np.linalg.det(a) * np.linalg.det(d), 1.0, atol=1e-12)
    assert np.allclose(a.conj().transpose(0, 2, 1) @ a, np.eye(sig.p), atol=1e-12)
    k = it.haar_sample_K(sig, it.HaarSampler(3))
    assert abs(np.linalg.det(k.matrix()) - 1) < 1e-12


def test_haar_moments():
    rng = np.random.default_rng(7)
    d = 3
    u = it.haar_unitary_batch(d, 200_000, rng)
    x = np.abs(u[:, 0, 0]) ** 2
    # |u_11|^2 ~ Beta(1, d - 1)
    assert x.mean() == pytest.approx(1 / d, abs=3e-3)
    assert (x ** 2).mean() == pytest.approx(2 / (d * (d + 1)), abs=3e-3)


def test_phi_pointwise():
    sig = Signature(1, 1)
    w = WeightSpec(sig, 4)
    k = it.haar_sample_K(sig, 1)
    # for p = q = 1, |det(A x^{1/2} D*)| = x^{1/2}
    assert it.phi(w, DetPower(2), k, [0.3]) == pytest.approx(0.7 ** 2 * 0.3)
    with pytest.raises(ValueError):
        it.phi(w, DetPower(2), k, [1.0])


def test_closed_form_vs_monte_carlo_det():
    sig = Signature(2, 2)
    w = WeightSpec(sig, 9)
    x = np.array([[0.6, 0.2], [0.3, 0.1]])
    exact, err0 = it.phi_k_avg(w, DetPower(1), x)
    assert np.all(err0 == 0)
    mc, err = it.phi_k_avg(w, DetPower(1), x, KAverageConfig(samples=500, method="mc"))
    # |det| is K-invariant, so sampling is exact here
    assert np.allclose(mc, exact, rtol=1e-12)
    assert np.allclose(exact, (1 - x).prod(axis=1) ** 4.5 * np.sqrt(x.prod(axis=1)))


def test_monte_carlo_entry_average():
    # (2,1): z_11 = a_11 x^{1/2} conj(d); |a_11|^2 is uniform on [0, 1], so E|z_11| = (2/3) x^{1/2}
    sig = Signature(2, 1)
    w = WeightSpec(sig, 5)
    f = it.parse_poly("sum: z[1][1]", sig)
    x = np.array([[0.25], [0.64]])
    val, err = it.phi_k_avg(w, f, x, KAverageConfig(samples=40_000, seed=1))
    exact = (1 - x[:, 0]) ** 2.5 * (2 / 3) * np.sqrt(x[:, 0])
    assert np.all(np.abs(val - exact) < 5 * err)
    assert np.all(err < 0.01 * exact)


def test_batches_partition_the_sample():
    sig = Signature(2, 1)
    w = WeightSpec(sig, 5)
    f = it.parse_poly("sum: z[1][1] + z[2][1]^2", sig)
    cfg = KAverageConfig(samples=1600, seed=4)
    x = np.array([[0.2], [0.5], [0.7]])
    b = it.phi_k_batches(w, f, x, cfg, batches=16)
    assert b.shape == (3, 16)
    assert np.allclose(b.mean(axis=1), it.phi_k_avg(w, f, x, cfg)[0], rtol=1e-12)
    # common random numbers: identical on rerun
    assert np.array_equal(b, it.phi_k_batches(w, f, x, cfg, batches=16))


def test_scalar_return():
    sig = Signature(1, 1)
    val, err = it.phi_k_avg(WeightSpec(sig, 3), Constant(2.0), [0.5])
    assert isinstance(val, float) and val == pytest.approx(2 * 0.5 ** 1.5) and err == 0.0
