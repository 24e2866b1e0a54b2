import math

import numpy as np
import pytest
from scipy import stats as sps

from wishlpp import kernels, matrixproc
from wishlpp.errors import ConfigError, ValidationError
from wishlpp.matrixproc import MatrixPath
from wishlpp.sampling import ParameterSet, RngStream


@pytest.fixture
def params3():
    return ParameterSet(np.array([1.0, 0.7, 1.3]), np.array([0.5, 0.0, 0.5, 0.0]))


def test_null_start(params3):
    path = matrixproc.simulate_wishart_path(params3, 0, RngStream(1))
    assert path.horizon == 0
    assert np.all(path.states[0] == 0)
    assert np.all(matrixproc.hermitian_spectrum(path.states[0]) == 0)


def test_horizon_exceeds_pihat(params3):
    with pytest.raises(ConfigError):
        matrixproc.simulate_wishart_path(params3, 5, RngStream(1))


def test_rank_one_increments(params3):
    path = matrixproc.simulate_wishart_path(params3, 4, RngStream(2))
    for m in range(1, 5):
        ev = np.sort(np.linalg.eigvalsh(path.increment(m)))
        assert ev[-1] > 0
        assert abs(ev[-2]) <= 1e-9 * ev.sum()


def test_path_interlacing_and_monotone_trace(params3):
    stream = RngStream(3)
    for r in range(50):
        path = matrixproc.simulate_wishart_path(params3, 4, stream.child(r))
        spectra = path.spectra()
        traces = spectra.sum(axis=1)
        assert np.all(np.diff(traces) >= -1e-12)
        for m in range(1, 5):
            assert kernels.is_interlaced(spectra[m - 1], spectra[m], tol=1e-9)


def test_scalar_top_eigenvalue_is_exponential():
    params = ParameterSet(np.array([1.0]), np.array([0.0]))
    samples = matrixproc.simulate_wishart_spectra(params, [1], 100_000, RngStream(4))[:, 0]
    d, p = sps.kstest(samples, "expon")
    assert p > 0.01


def test_diagonal_increments_are_exponential(params3):
    reps = 100_000
    stream = RngStream(25)
    rates = params3.rate_matrix(2)
    cols = np.empty((reps, 3, 2), dtype=complex)
    for r in range(reps):
        cols[r] = matrixproc.sample_complex_gaussian(stream.child(r), rates)
    sq = np.abs(cols) ** 2
    for i in range(3):
        for m in range(2):
            _, p = sps.kstest(sq[:, i, m], "expon", args=(0, 1.0 / rates[i, m]))
            assert p > 0.01, (i, m)


def test_spectrum_examples():
    assert np.allclose(matrixproc.hermitian_spectrum(np.diag([3.0, 1.0])), [3, 1])
    assert np.allclose(
        matrixproc.hermitian_spectrum(np.array([[2.0, 1.0], [1.0, 2.0]])), [3, 1]
    )


def test_spectrum_trace_determinant_identities():
    gen = np.random.default_rng(6)
    a = gen.standard_normal((5, 5)) + 1j * gen.standard_normal((5, 5))
    m = a + a.conj().T
    ev = matrixproc.hermitian_spectrum(m)
    assert np.all(np.diff(ev) <= 0)
    assert ev.sum() == pytest.approx(np.trace(m).real, rel=1e-9)
    assert np.prod(ev) == pytest.approx(np.linalg.det(m).real, rel=1e-6)


def test_non_hermitian_rejected():
    with pytest.raises(ValidationError):
        matrixproc.hermitian_spectrum(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_rn_increments_standard_is_one():
    params = ParameterSet.standard(3, 3)
    path = matrixproc.simulate_wishart_path(params, 3, RngStream(7))
    assert matrixproc.rn_derivative_increments(path, params) == 1.0


def test_rn_increments_direct_value():
    # one scalar step with rate parameter 2 and diagonal increment 0.5
    path = MatrixPath(states=[np.zeros((1, 1)), np.array([[0.5]])])
    params = ParameterSet(np.array([2.0]), np.array([0.0]))
    expect = 2.0 * math.exp(-0.5)
    assert matrixproc.rn_derivative_increments(path, params) == pytest.approx(expect, rel=1e-14)


def test_rn_increments_rejects_negative_diagonal():
    path = MatrixPath(states=[np.zeros((1, 1)), np.array([[-0.1]])])
    with pytest.raises(ValidationError):
        matrixproc.rn_derivative_increments(path, ParameterSet(np.array([2.0]), np.array([0.0])))


def test_importance_sampling_identity(params3):
    # E_standard[RN * tr M(2)] must match E_target[tr M(2)]
    from wishlpp.checks import importance_sampling_checks

    reports = importance_sampling_checks(params3, 2, 20_000, RngStream(8))
    for rep in reports:
        assert rep.passed, (rep.test_name, rep.statistic)


def test_isospectral_zero():
    assert np.all(matrixproc.sample_isospectral(np.zeros(3), RngStream(9)) == 0)


def test_isospectral_preserves_spectrum():
    mu = np.array([2.0, 1.0])
    m = matrixproc.sample_isospectral(mu, RngStream(10))
    assert np.allclose(matrixproc.hermitian_spectrum(m), mu, atol=1e-9)


def test_isospectral_diagonal_mean():
    # E[U diag(mu) U*] = (sum(mu)/N) I by conjugation invariance
    mu = np.array([2.0, 1.0, 0.5])
    reps = 10_000
    batch = matrixproc.sample_isospectral(mu, RngStream(11), size=reps)
    diags = np.einsum("kii->ki", batch).real
    se = diags.std(axis=0, ddof=1) / math.sqrt(reps)
    assert np.all(np.abs(diags.mean(axis=0) - mu.sum() / 3) < 3 * se)


def test_isospectral_rejects_unsorted():
    with pytest.raises(ValidationError):
        matrixproc.sample_isospectral(np.array([1.0, 2.0]), RngStream(0))


def test_tilted_isospectral_matches_kernel_marginal():
    # the tilted start is what makes one-step transitions follow the
    # reweighted kernel; the plain start provably does not for pi != 1
    from scipy import integrate

    z, pi, pihat = np.array([2.0, 1.0]), np.array([1.5, 0.5]), 0.3
    reps = 30_000
    samples = matrixproc.one_step_spectra(z, pi, pihat, reps, RngStream(12))
    assert np.allclose(
        matrixproc.hermitian_spectrum(
            matrixproc.sample_isospectral_tilted(z, pi, RngStream(13))
        ),
        z,
        atol=1e-9,
    )
    for cut in (2.5, 3.5):
        analytic, _ = integrate.dblquad(
            lambda y, x: kernels.q_pihat_density(z, np.array([x, y]), pi, pihat),
            z[0], cut, z[1], z[0], epsabs=1e-10, epsrel=1e-10,
        )
        empirical = np.mean(samples[:, 0] < cut)
        se = math.sqrt(analytic * (1 - analytic) / reps)
        assert abs(empirical - analytic) < 4 * se


def test_rn_initial_scalar_is_one():
    assert matrixproc.rn_derivative_initial(
        np.array([[1.7]]), np.array([1.7]), np.array([1.0])
    ) == pytest.approx(1.0, rel=1e-12)


def test_rn_initial_diag_standard_pi():
    # pi = 1: the tilt term cancels and the value only depends on mu
    mu = np.array([2.0, 1.0])
    val = matrixproc.rn_derivative_initial(np.diag(mu), mu, np.ones(2))
    sign, logabs = kernels.h_pi_logsign(np.ones(2), mu)
    expect = np.sign(kernels.hciz_constant(2)) * sign * math.exp(
        math.log(abs(kernels.hciz_constant(2))) - logabs - mu.sum()
    )
    assert val == pytest.approx(expect, rel=1e-12)
    assert val > 0


def test_rn_initial_unit_mean():
    # normalization forced by the unitary-integral identity
    mu, pi = np.array([2.0, 1.0]), np.array([1.5, 0.5])
    reps = 1_000_000
    batch = matrixproc.sample_isospectral(mu, RngStream(14), size=reps)
    diags = np.einsum("kii->ki", batch).real
    sign, logabs = kernels.h_pi_logsign(pi, mu)
    c = kernels.hciz_constant(2)
    vals = np.sign(c) * sign * np.exp(
        math.log(abs(c)) - logabs - mu.sum() - (diags * (pi - 1.0)).sum(axis=1)
    )
    se = vals.std(ddof=1) / math.sqrt(reps)
    assert abs(vals.mean() - 1.0) < 3 * se


def test_rn_initial_spectrum_mismatch():
    with pytest.raises(ValidationError):
        matrixproc.rn_derivative_initial(np.diag([2.0, 1.0]), np.array([2.0, 1.5]), np.ones(2))
