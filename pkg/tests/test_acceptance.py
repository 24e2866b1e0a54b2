"""Acceptance suite: one test per criterion, at the stated sizes and tolerances.

Run with ``pytest -s tests/test_acceptance.py`` to see one line per criterion.
All randomness derives from the fixed root seed below; each criterion uses its
own stream path, so a rerun reproduces the exact same statistics.
"""

import numpy as np

from wishlpp import checks, rsk, stats
from wishlpp.sampling import ParameterSet, RngStream

ROOT_SEED = 20260810

CELL_A = ParameterSet(np.array([1.0, 1.0]), np.zeros(5))
CELL_B = ParameterSet(np.array([1.0, 0.7, 1.3]), np.array([0.5, 0.0, 0.5, 0.0, 0.5]))


def _stream(criterion: int) -> RngStream:
    return RngStream(ROOT_SEED, (criterion,))


def _announce(num: int, name: str, ok: bool, detail: str = "") -> None:
    print(f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())


def test_criterion_01_theorem1_marginal():
    stream = _stream(1)
    reports = []
    for idx, params in enumerate((CELL_A, CELL_B)):
        reports += checks.theorem1_marginal_checks(
            params, [1, 2, 5], 100_000, 0.001, stream.child(idx)
        )
    ok = all(r.passed for r in reports)
    detail = "; ".join(f"{r.test_name}: D={r.statistic:.5f} (<= {r.threshold:.5f})" for r in reports)
    _announce(1, "equality in law of largest eigenvalue and passage value (marginals)", ok, detail)
    assert ok, detail


def test_criterion_02_theorem1_process_level():
    stream = _stream(2)
    reports = checks.theorem1_process_checks(CELL_B, [2, 5], 10_000, 500, 0.01, stream)
    ok = all(r.passed for r in reports)
    detail = "; ".join(f"{r.test_name}: {r.statistic:.4f} (<= {r.threshold:.4f})" for r in reports)
    _announce(2, "joint and increment laws over the time grid (energy tests)", ok, detail)
    assert ok, detail


def test_criterion_03_one_step_transition():
    report = checks.one_step_kernel_check(
        np.array([2.0, 1.0]), np.array([1.5, 0.5]), 0.3, 100_000, 0.01, _stream(3)
    )
    ok = report.passed and report.details["bins"] >= 20
    detail = (
        f"chi2={report.statistic:.2f} (<= {report.threshold:.2f}), bins={report.details['bins']}"
    )
    _announce(3, "one-step spectral transition matches the reweighted kernel", ok, detail)
    assert ok, detail


def test_criterion_04_kernel_normalization():
    stream = _stream(4)
    r2 = checks.normalization_sweep(2, 20, "quadrature", 1e-7, stream.child(0))
    r3 = checks.normalization_sweep(3, 20, "cauchy_binet", 1e-5, stream.child(1))
    ok = r2.passed and r3.passed
    detail = f"N=2 worst |1-mass|={r2.statistic:.2e}; N=3 worst={r3.statistic:.2e}"
    _announce(4, "reweighted kernels have unit mass", ok, detail)
    assert ok, detail


def test_criterion_05_unitary_integral_constant():
    stream = _stream(5)
    r2 = checks.hciz_check(np.array([1.5, 0.5]), np.array([2.0, 1.0]), 1_000_000, 0.01, stream.child(0))
    r3 = checks.hciz_check(
        np.array([1.0, 0.7, 1.3]), np.array([2.5, 1.3, 0.4]), 1_000_000, 0.02, stream.child(1)
    )
    ok = r2.passed and r3.passed
    detail = f"N=2 rel err={r2.statistic:.4f} (<1%); N=3 rel err={r3.statistic:.4f} (<2%)"
    _announce(5, "Monte Carlo certifies the closed-form unitary-integral constant", ok, detail)
    assert ok, detail


def test_criterion_06_rsk_exactness():
    stream = _stream(6)
    real_report = checks.rsk_exactness_check((4, 6), 1000, 1e-12, stream)
    shape = (4,) * 9
    grids = np.stack(np.unravel_index(np.arange(4**9), shape), axis=1).reshape(-1, 3, 3)
    exhaustive = checks.greene_consistency_check(grids)
    ok = real_report.passed and exhaustive.passed
    detail = (
        f"real 4x6 worst diff={real_report.statistic:.2e}; "
        f"exhaustive 3x3 worst diff={exhaustive.statistic:g} over {grids.shape[0]} instances"
    )
    _announce(6, "pattern top entry equals passage value; partial sums equal path maxima", ok, detail)
    assert ok, detail


def test_criterion_07_discrete_transition_law():
    stream = _stream(7)
    chain = rsk.rsk_chain_check(
        np.array([0.5, 0.5]), np.array([0.5, 0.5]), 2, 100_000, stream.child(0),
        alpha=0.01, m_star=2,
    )
    schur = checks.schur_bialternant_check(100, 1e-10, stream.child(1))
    ok = chain.passed and schur.passed
    detail = (
        f"chain chi2={chain.statistic:.2f} (<= {chain.threshold:.2f}, "
        f"visits={chain.details.get('visits')}); schur worst rel={schur.statistic:.2e}"
    )
    _announce(7, "bottom-row transitions match the discrete kernel; Schur forms agree", ok, detail)
    assert ok, detail


def test_criterion_08_change_of_measure():
    params = ParameterSet(np.array([1.0, 0.7, 1.3]), np.array([0.5, 0.0]))
    reports = checks.importance_sampling_checks(params, 2, 100_000, _stream(8))
    ok = all(r.passed for r in reports)
    detail = "; ".join(f"{r.test_name}: {r.statistic:.2f} se (<= 3)" for r in reports)
    _announce(8, "reweighted standard-measure estimates match direct estimates", ok, detail)
    assert ok, detail


def test_criterion_09_geometric_limit():
    params = ParameterSet(np.array([1.0, 1.0]), np.zeros(2))
    report = checks.geometric_limit_check(params, 2, 2000.0, 10_000, 0.001, _stream(9))
    detail = f"D={report.statistic:.5f} (<= {report.threshold:.5f})"
    _announce(9, "scaled geometric passage values match the exponential model", report.passed, detail)
    assert report.passed, detail


def test_criterion_10_path_density_identity():
    params = ParameterSet(np.array([1.0, 0.7, 1.3]), np.array([0.5, 0.0, 0.25, 0.1]))
    report = checks.rn_spectra_identity_check(params, 4, 1000, 1e-10, _stream(10))
    detail = f"worst log discrepancy={report.statistic:.2e} (<= 1e-10)"
    _announce(10, "kernel products factor through the path density ratio", report.passed, detail)
    assert report.passed, detail


def test_criterion_11_verifier_calibration():
    stream = _stream(11)
    reps, alpha = 100, 0.01
    band = 3 * np.sqrt(alpha * (1 - alpha) / reps)

    ks_pass = 0
    for r in range(reps):
        s = stream.child(0, r)
        x = s.child(0).generator.exponential(1.0, 2000)
        y = s.child(1).generator.exponential(1.0, 2000)
        ks_pass += stats.ks_two_sample(x, y, alpha).passed
    ks_rate = ks_pass / reps

    chi_pass = 0
    edges = np.concatenate([[0.0], -np.log(1.0 - np.arange(1, 10) / 10.0), [np.inf]])
    for r in range(reps):
        draws = stream.child(1, r).generator.exponential(1.0, 10_000)
        counts, _ = np.histogram(draws, bins=edges)
        chi_pass += stats.chi_square_binned(counts, np.full(10, 0.1), alpha).passed
    chi_rate = chi_pass / reps

    energy_pass = 0
    for r in range(reps):
        s = stream.child(2, r)
        x = s.child(0).generator.exponential(1.0, (400, 2))
        y = s.child(1).generator.exponential(1.0, (400, 2))
        energy_pass += stats.energy_distance_test(x, y, 200, alpha, stream=s.child(2)).passed
    energy_rate = energy_pass / reps

    ok = all(abs(rate - (1 - alpha)) <= band for rate in (ks_rate, chi_rate, energy_rate))
    detail = (
        f"null pass rates: ks={ks_rate:.2f}, chi2={chi_rate:.2f}, energy={energy_rate:.2f}"
        f" (target {1 - alpha:.2f} +/- {band:.3f})"
    )
    _announce(11, "verifiers are calibrated under the null", ok, detail)
    assert ok, detail
