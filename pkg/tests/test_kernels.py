import math

import numpy as np
import pytest
from scipy import integrate

from wishlpp import kernels
from wishlpp.errors import ParameterError, ValidationError
from wishlpp.sampling import ParameterSet, RngStream


def test_vandermonde_values():
    assert kernels.vandermonde([3, 1]) == pytest.approx(2.0)
    assert kernels.vandermonde([4, 2, 1]) == pytest.approx(6.0)
    assert kernels.vandermonde([2, 2, 1]) == 0.0


def test_h_one_dimensional():
    assert kernels.h_pi([0.7], [2.5]) == pytest.approx(math.exp(-0.7 * 2.5), rel=1e-14)


def test_h_two_by_two_example():
    # det{e^{-pi_i z_j}} with pi = z = (2,1) and unit Vandermondes
    assert kernels.h_pi([2, 1], [2, 1]) == pytest.approx(
        math.exp(-5) - math.exp(-4), rel=1e-12
    )


def test_h_confluent_pair():
    p, z = 0.8, np.array([2.0, 1.0])
    assert kernels.h_pi([p, p], z) == pytest.approx(-math.exp(-p * z.sum()), rel=1e-12)


def test_h_near_confluence_matches_limit():
    p, z = 0.8, np.array([2.0, 1.0])
    eps = 1e-6
    near = kernels.h_pi([p, p + eps], z)
    limit = kernels.h_pi([p, p], z)
    assert near == pytest.approx(limit, rel=1e-5)


def test_h_confluence_continuity():
    # Richardson-style: the deviation shrinks with the perturbation
    p, z = 1.1, np.array([3.0, 1.5, 0.2])
    limit = kernels.h_pi([p, p, p + 1.0], z)
    d4 = abs(kernels.h_pi([p, p + 1e-4, p + 1.0], z) - limit)
    d6 = abs(kernels.h_pi([p, p + 1e-6, p + 1.0], z) - limit)
    assert d6 < d4
    assert d6 / abs(limit) < 1e-4


def test_h_permutation_invariance():
    gen = np.random.default_rng(11)
    for _ in range(10):
        pi = gen.uniform(0.3, 2.0, 4)
        z = np.sort(gen.uniform(0.0, 4.0, 4))[::-1]
        base = kernels.h_pi(pi, z)
        assert kernels.h_pi(gen.permutation(pi), z) == pytest.approx(base, rel=1e-10)
        assert kernels.h_pi(pi, gen.permutation(z)) == pytest.approx(base, rel=1e-10)


def test_h_z_ties_are_finite():
    val = kernels.h_pi([2.0, 1.0], [1.5, 1.5])
    assert np.isfinite(val) and val != 0.0


def test_hciz_constant_values():
    assert kernels.hciz_constant(1) == 1.0
    assert kernels.hciz_constant(2) == -1.0
    assert kernels.hciz_constant(3) == -0.5


def test_hciz_monte_carlo_small():
    pi, mu = np.array([1.5, 0.5]), np.array([2.0, 1.0])
    est, se = kernels.hciz_monte_carlo(pi, mu, 200_000, RngStream(21))
    closed = kernels.h_pi(pi, mu) / kernels.hciz_constant(2)
    assert closed > 0
    assert abs(est - closed) < 4 * se


def test_q_density_one_dimensional():
    assert kernels.q_density([1.0], [1.7]) == pytest.approx(math.exp(-0.7), rel=1e-14)
    assert kernels.q_density([1.0], [0.9]) == 0.0
    val, _ = integrate.quad(lambda t: kernels.q_density([1.0], [t]), 1.0, np.inf)
    assert val == pytest.approx(1.0, abs=1e-10)


def test_q_density_normalization_n2():
    z = np.array([2.0, 1.0])
    val, _ = integrate.dblquad(
        lambda y, x: kernels.q_density(z, np.array([x, y])),
        z[0], np.inf, z[1], z[0], epsabs=1e-10, epsrel=1e-10,
    )
    assert val == pytest.approx(1.0, abs=1e-8)


def test_q_density_boundary_state_rejected():
    with pytest.raises(ValidationError):
        kernels.q_density([1.0, 1.0], [2.0, 1.0])


def test_q_pihat_collapses_in_one_dimension():
    pi, pihat = 1.3, 0.4
    z, zp = [2.0], [2.9]
    expect = (pi + pihat) * math.exp(-(pi + pihat) * 0.9)
    assert kernels.q_pihat_density(z, zp, [pi], pihat) == pytest.approx(expect, rel=1e-12)


def test_q_pihat_standard_case_is_q():
    z, zp = np.array([2.0, 1.0]), np.array([2.7, 1.4])
    assert kernels.q_pihat_density(z, zp, [1.0, 1.0], 0.0) == pytest.approx(
        kernels.q_density(z, zp), rel=1e-10
    )


def test_q_pihat_nonnegative_sweep():
    gen = np.random.default_rng(5)
    for _ in range(50):
        dim = int(gen.integers(2, 4))
        z = np.sort(gen.uniform(0, 4, dim))[::-1]
        if np.min(-np.diff(z)) < 1e-3:
            continue
        zp = np.empty(dim)
        zp[0] = z[0] + gen.exponential(1.0)
        for i in range(1, dim):
            zp[i] = gen.uniform(z[i], z[i - 1])
        pi = gen.uniform(0.3, 2.0, dim)
        assert kernels.q_pihat_density(z, zp, pi, gen.uniform(0, 1)) >= 0.0


def test_kernel_normalization_one_dimensional():
    assert kernels.kernel_normalization([1.5], [0.8], 0.6) == pytest.approx(1.0, abs=1e-12)


def test_kernel_normalization_methods_agree_n2():
    z, pi, pihat = np.array([2.0, 1.0]), np.array([1.5, 0.5]), 0.3
    quad = kernels.kernel_normalization(z, pi, pihat, method="quadrature")
    cb = kernels.kernel_normalization(z, pi, pihat, method="cauchy_binet")
    assert quad == pytest.approx(cb, abs=1e-9)
    assert quad == pytest.approx(1.0, abs=1e-7)


def test_kernel_normalization_n3_cauchy_binet():
    val = kernels.kernel_normalization(
        [3.0, 1.7, 0.4], [1.0, 0.7, 1.3], 0.5, method="cauchy_binet"
    )
    assert val == pytest.approx(1.0, abs=1e-5)


def test_kernel_normalization_unknown_method():
    with pytest.raises(ParameterError):
        kernels.kernel_normalization([1.0], [1.0], 0.0, method="magic")


def test_rn_spectra_standard_is_unity():
    params = ParameterSet.standard(3, 4)
    path = np.array(
        [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.5, 0.8, 0.0],
            [2.5, 1.0, 0.4],
            [3.0, 1.4, 0.9],
        ]
    )
    assert kernels.rn_spectra(path, params) == pytest.approx(1.0, abs=1e-12)


def test_rn_spectra_single_step_collapse():
    # n=1, N=1: must equal the ratio of the reweighted to the standard kernel
    params = ParameterSet(np.array([1.3]), np.array([0.4]))
    path = np.array([[0.5], [1.7]])
    expect = kernels.q_pihat_density([0.5], [1.7], [1.3], 0.4) / kernels.q_density(
        [0.5], [1.7]
    )
    assert kernels.rn_spectra(path, params) == pytest.approx(expect, rel=1e-12)


def test_rn_spectra_rejects_non_interlacing():
    params = ParameterSet.standard(2, 1)
    with pytest.raises(ValidationError):
        kernels.rn_spectra(np.array([[2.0, 1.0], [1.5, 0.5]]), params)


def test_interlacing_predicate():
    assert kernels.is_interlaced([2.0, 1.0], [2.5, 1.5])
    assert kernels.is_interlaced([2.0, 1.0], [2.0, 1.0])
    assert not kernels.is_interlaced([2.0, 1.0], [2.5, 0.5])
    assert not kernels.is_interlaced([2.0, 1.0], [1.9, 1.5])
