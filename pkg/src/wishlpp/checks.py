"""Reusable verification procedures behind the CLI suites and the acceptance run.

Each check simulates what it needs from explicitly passed streams and returns
one or more :class:`~wishlpp.stats.TestReport` objects, so every run is
reproducible from (root seed, derivation path) alone.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from . import kernels, lpp, matrixproc, rsk, stats
from .errors import ValidationError
from .sampling import ParameterSet, RngStream, sample_complex_gaussian


def theorem1_marginal_checks(
    params: ParameterSet, grid, reps: int, alpha: float, stream: RngStream
) -> list:
    """Two-sample KS between largest eigenvalues and passage values, per grid time."""
    eig = matrixproc.simulate_wishart_spectra(params, grid, reps, stream.child(0))
    y = lpp.simulate_lpp_batch(params, grid, reps, stream.child(1))
    return [
        stats.ks_two_sample(
            eig[:, g], y[:, g], alpha,
            name=f"eigenvalue_vs_lpp_t{t}", seed_info=stream.describe(),
        )
        for g, t in enumerate(grid)
    ]


def theorem1_process_checks(
    params: ParameterSet, grid, reps: int, permutations: int, alpha: float, stream: RngStream
) -> list:
    """Energy tests on the joint grid vector and on the increment vector."""
    if len(grid) < 2:
        raise ValidationError("process-level check needs at least two grid times")
    eig = matrixproc.simulate_wishart_spectra(params, grid, reps, stream.child(0))
    y = lpp.simulate_lpp_batch(params, grid, reps, stream.child(1))
    joint = stats.energy_distance_test(
        eig, y, permutations, alpha, stream=stream.child(2), name="process_joint_energy"
    )
    to_inc = lambda v: np.column_stack([v[:, 0], np.diff(v, axis=1)])
    incr = stats.energy_distance_test(
        to_inc(eig), to_inc(y), permutations, alpha,
        stream=stream.child(3), name="process_increment_energy",
    )
    return [joint, incr]


def one_step_kernel_check(
    z,
    pi,
    pihat_1: float,
    reps: int,
    alpha: float,
    stream: RngStream,
    bins=(6, 5),
) -> stats.TestReport:
    """Chi-square of one-step spectral transitions against the reweighted kernel.

    Two-dimensional states only: samples are binned on a quantile product
    grid over the interlacing cell and expectations come from adaptive
    quadrature of the kernel density over each rectangle.
    """
    z = np.asarray(z, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if z.size != 2:
        raise ValidationError("the binned transition check is implemented for dimension 2")
    samples = matrixproc.one_step_spectra(z, pi, pihat_1, reps, stream)
    b1, b2 = bins
    qs1 = np.quantile(samples[:, 0], np.linspace(0, 1, b1 + 1)[1:-1])
    edges1 = np.concatenate([[z[0]], np.unique(qs1), [np.inf]])
    qs2 = np.quantile(samples[:, 1], np.linspace(0, 1, b2 + 1)[1:-1])
    qs2 = qs2[(qs2 > z[1]) & (qs2 < z[0])]
    edges2 = np.concatenate([[z[1]], np.unique(qs2), [z[0]]])
    observed, _, _ = np.histogram2d(samples[:, 0], samples[:, 1], bins=[edges1, edges2])
    expected = np.empty_like(observed)
    for i in range(edges1.size - 1):
        for j in range(edges2.size - 1):
            expected[i, j], _ = integrate.dblquad(
                lambda y, x: kernels.q_pihat_density(z, np.array([x, y]), pi, pihat_1),
                edges1[i], edges1[i + 1], edges2[j], edges2[j + 1],
                epsabs=1e-9, epsrel=1e-9,
            )
    probs = expected.reshape(-1)
    probs = probs / probs.sum()
    report = stats.chi_square_binned(
        observed.reshape(-1), probs, alpha=alpha,
        name="one_step_transition_chi2", seed_info=stream.describe(),
    )
    report.details["source_state"] = z.tolist()
    return report


def bottom_row_process_check(
    params: ParameterSet, t: int, reps: int, permutations: int, alpha: float, stream: RngStream
) -> stats.TestReport:
    """Full-vector law match: spectrum of M(t) against the RSK bottom row at t."""
    spec = matrixproc.simulate_wishart_spectra(
        params, [t], reps, stream.child(0), observable="full"
    )[:, 0, :]
    w = lpp.sample_weights(params, t, reps, stream.child(1))
    bottoms = rsk.evolve_bottom_rows(w)[t]
    return stats.energy_distance_test(
        spec, bottoms, permutations, alpha,
        stream=stream.child(2), name=f"bottom_row_vs_spectrum_t{t}",
    )


def normalization_sweep(
    dim: int, count: int, method: str, tol: float, stream: RngStream
) -> stats.TestReport:
    """Worst-case |1 - kernel mass| over random states and parameters."""
    gen = stream.generator
    worst = 0.0
    for _ in range(count):
        z = np.sort(gen.uniform(0.0, 5.0, dim))[::-1]
        while dim > 1 and np.min(-np.diff(z)) < 0.05:
            z = np.sort(gen.uniform(0.0, 5.0, dim))[::-1]
        pi = gen.uniform(0.3, 2.0, dim)
        pihat_n = gen.uniform(0.0, 1.0)
        value = kernels.kernel_normalization(z, pi, pihat_n, method=method)
        worst = max(worst, abs(1.0 - value))
    return stats.make_report(
        f"kernel_normalization_{method}_dim{dim}",
        statistic=worst, threshold=tol, n1=count, n2=0, alpha=0.0,
        seed_info=stream.describe(), method=method,
    )


def hciz_check(
    pi, mu, reps: int, rel_tol: float, stream: RngStream
) -> stats.TestReport:
    """Monte Carlo unitary integral against the closed form h_pi(mu)/c_N."""
    pi = np.asarray(pi, dtype=float)
    mu = np.asarray(mu, dtype=float)
    estimate, stderr = kernels.hciz_monte_carlo(pi, mu, reps, stream)
    closed = kernels.h_pi(pi, mu) / kernels.hciz_constant(mu.size)
    rel = abs(estimate - closed) / abs(estimate)
    return stats.make_report(
        f"hciz_dim{mu.size}",
        statistic=rel, threshold=rel_tol, n1=reps, n2=0, alpha=0.0,
        seed_info=stream.describe(),
        monte_carlo=estimate, closed_form=closed, mc_stderr=stderr,
    )


def importance_sampling_checks(
    params: ParameterSet, t: int, reps: int, stream: RngStream
) -> list:
    """Reweighted standard-measure estimates against direct target-measure estimates.

    For f in {trace M(t), largest eigenvalue of M(t)}, compares
    E_standard[RN * f] with E_target[f]; the statistic is the discrepancy in
    combined standard errors, thresholded at 3.
    """
    dim = params.dim
    standard = ParameterSet.standard(dim, t)
    rates_std = standard.rate_matrix(t)
    cols = np.empty((reps, dim, t), dtype=complex)
    child = stream.child(0)
    for r in range(reps):
        cols[r] = sample_complex_gaussian(child.child(r), rates_std)
    sq = np.abs(cols) ** 2
    log_rn = matrixproc._log_rn_from_diag(np.swapaxes(sq, 1, 2), params)
    rn = np.exp(log_rn)
    m_std = cols @ cols.conj().swapaxes(1, 2)
    f_std = {
        "trace": np.einsum("kii->k", m_std).real,
        "lambda_max": np.linalg.eigvalsh(m_std)[:, -1],
    }
    direct = matrixproc.simulate_wishart_spectra(params, [t], reps, stream.child(1), observable="full")
    f_tgt = {
        "trace": direct[:, 0, :].sum(axis=1),
        "lambda_max": direct[:, 0, 0],
    }
    out = []
    for fname in ("trace", "lambda_max"):
        weighted = rn * f_std[fname]
        mean_is, se_is = weighted.mean(), weighted.std(ddof=1) / math.sqrt(reps)
        mean_d, se_d = f_tgt[fname].mean(), f_tgt[fname].std(ddof=1) / math.sqrt(reps)
        se = math.hypot(se_is, se_d)
        out.append(
            stats.make_report(
                f"importance_sampling_{fname}_t{t}",
                statistic=abs(mean_is - mean_d) / se, threshold=3.0,
                n1=reps, n2=reps, alpha=0.0, seed_info=stream.describe(),
                reweighted_mean=float(mean_is), direct_mean=float(mean_d),
                combined_se=float(se),
            )
        )
    return out


def random_interlacing_path(dim: int, steps: int, gen: np.random.Generator) -> np.ndarray:
    """A random strictly interlacing path of spectra, for identity checks."""
    path = np.empty((steps + 1, dim))
    base = np.sort(gen.uniform(0.0, 3.0, dim))[::-1]
    while dim > 1 and np.min(-np.diff(base)) < 1e-3:
        base = np.sort(gen.uniform(0.0, 3.0, dim))[::-1]
    path[0] = base
    for r in range(1, steps + 1):
        prev = path[r - 1]
        nxt = np.empty(dim)
        nxt[0] = prev[0] + gen.exponential(0.7)
        for i in range(1, dim):
            nxt[i] = gen.uniform(prev[i], prev[i - 1])
        path[r] = nxt
    return path


def rn_spectra_identity_check(
    params: ParameterSet, steps: int, count: int, tol: float, stream: RngStream
) -> stats.TestReport:
    """prod_r reweighted-kernel = path-density-ratio * prod_r standard-kernel.

    Checked in log space on random interlacing paths; the statistic is the
    worst absolute log discrepancy (= relative error at this scale).
    """
    gen = stream.generator
    worst = 0.0
    for _ in range(count):
        path = random_interlacing_path(params.dim, steps, gen)
        lhs = sum(
            kernels.q_pihat_density(path[r - 1], path[r], params.pi, params.pihat[r - 1], log=True)
            for r in range(1, steps + 1)
        )
        rhs = kernels.rn_spectra(path, params, log=True) + sum(
            kernels.q_density(path[r - 1], path[r], log=True) for r in range(1, steps + 1)
        )
        worst = max(worst, abs(lhs - rhs))
    return stats.make_report(
        "rn_spectra_identity",
        statistic=worst, threshold=tol, n1=count, n2=0, alpha=0.0,
        seed_info=stream.describe(), steps=steps,
    )


def geometric_limit_check(
    params: ParameterSet, t: int, scale: float, reps: int, alpha: float, stream: RngStream
) -> stats.TestReport:
    """KS between scaled geometric passage values and exponential passage values."""
    geo = lpp.simulate_geometric_lpp_batch(params, [t], scale, reps, stream.child(0))[:, 0]
    exp = lpp.simulate_lpp_batch(params, [t], reps, stream.child(1))[:, 0]
    report = stats.ks_two_sample(
        geo, exp, alpha, name=f"geometric_limit_t{t}", seed_info=stream.describe()
    )
    report.details["scale"] = scale
    return report


def rsk_exactness_check(
    shape, count: int, tol: float, stream: RngStream
) -> stats.TestReport:
    """Top-entry = passage value and mass conservation, on random real arrays."""
    rows, cols = shape
    xi = stream.generator.uniform(0.0, 1.0, size=(count, rows, cols))
    bottoms = rsk.evolve_bottom_rows(xi)
    grid = lpp.lpp_grid(xi)
    worst = 0.0
    for t in range(1, cols + 1):
        worst = max(worst, float(np.abs(bottoms[t][:, 0] - grid[:, -1, t - 1]).max()))
    mass = float(np.abs(bottoms[cols].sum(axis=1) - xi.sum(axis=(1, 2))).max())
    return stats.make_report(
        "rsk_top_entry_and_mass",
        statistic=max(worst, mass), threshold=tol, n1=count, n2=0, alpha=0.0,
        seed_info=stream.describe(), shape=list(shape),
    )


def greene_consistency_check(instances) -> stats.TestReport:
    """Bottom-row partial sums against the disjoint-path maxima, exactly.

    ``instances`` is an integer array of shape (count, rows, cols) with rows
    and cols small enough for family enumeration.
    """
    instances = np.asarray(instances)
    count, rows, cols = instances.shape
    k_max = min(rows, cols)
    bottoms = rsk.evolve_bottom_rows(instances)[cols]
    flat = instances.reshape(count, -1).astype(float)
    worst = 0.0
    for k in range(1, k_max + 1):
        ind = rsk._family_indicator(rows, cols, k)
        greene = (flat @ ind.T).max(axis=1)
        partial = bottoms[:, :k].sum(axis=1)
        worst = max(worst, float(np.abs(greene - partial).max()))
    return stats.make_report(
        "greene_partial_sums",
        statistic=worst, threshold=0.0, n1=count, n2=0, alpha=0.0,
        shape=[rows, cols],
    )


def schur_bialternant_check(count: int, tol: float, stream: RngStream) -> stats.TestReport:
    """GT-enumeration Schur values against the bialternant determinant ratio."""
    gen = stream.generator
    worst = 0.0
    for _ in range(count):
        depth = int(gen.integers(2, 5))
        lam = tuple(sorted((int(v) for v in gen.integers(0, 9, depth)), reverse=True))
        a = gen.uniform(0.2, 1.5, depth)
        while np.min(np.abs(np.subtract.outer(a, a)[np.triu_indices(depth, 1)])) < 1e-3:
            a = gen.uniform(0.2, 1.5, depth)
        enum = rsk.schur_gt(lam, a)
        det = rsk.schur_bialternant(lam, a)
        worst = max(worst, abs(enum - det) / abs(det))
    return stats.make_report(
        "schur_enumeration_vs_bialternant",
        statistic=worst, threshold=tol, n1=count, n2=0, alpha=0.0,
        seed_info=stream.describe(),
    )
