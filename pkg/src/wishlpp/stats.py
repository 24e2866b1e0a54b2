"""Statistical verifiers that turn sampled ensembles into pass/fail reports.

Every test is deterministic given its inputs and, where randomness is needed
(permutation shuffles), an explicit :class:`~wishlpp.sampling.RngStream`.
A report passes iff ``statistic <= threshold``; tests that cannot run at the
requested size return an inconclusive report rather than a failure.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import chi2 as chi2_dist

from .errors import ParameterError, ValidationError
from .sampling import RngStream

try:
    from numba import njit, prange

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional speedup
    _HAVE_NUMBA = False


@dataclass
class TestReport:
    """Named statistical test outcome; ``passed`` iff statistic <= threshold."""

    test_name: str
    statistic: float
    threshold: float
    n1: int
    n2: int
    alpha: float
    passed: bool
    seed_info: str = ""
    inconclusive: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def make_report(
    test_name: str,
    statistic: float,
    threshold: float,
    n1: int,
    n2: int,
    alpha: float,
    seed_info: str = "",
    inconclusive: bool = False,
    **details,
) -> TestReport:
    passed = bool(np.isfinite(statistic) and statistic <= threshold)
    return TestReport(
        test_name=test_name,
        statistic=float(statistic),
        threshold=float(threshold),
        n1=int(n1),
        n2=int(n2),
        alpha=float(alpha),
        passed=passed and not inconclusive,
        seed_info=seed_info,
        inconclusive=inconclusive,
        details=details,
    )


def ks_critical(alpha: float) -> float:
    """Asymptotic two-sample KS critical coefficient c(alpha) = sqrt(-ln(alpha/2)/2).

    c(0.01) = 1.628, c(0.001) = 1.949.
    """
    if not 0 < alpha < 1:
        raise ParameterError("alpha must lie in (0, 1)")
    return math.sqrt(-math.log(alpha / 2.0) / 2.0)


def ks_statistic(x, y) -> float:
    """Sup distance between the empirical CDFs of two samples."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    support = np.concatenate([x, y])
    fx = np.searchsorted(x, support, side="right") / x.size
    fy = np.searchsorted(y, support, side="right") / y.size
    return float(np.abs(fx - fy).max())


def ks_two_sample(
    x, y, alpha: float = 0.01, name: str = "ks_two_sample", seed_info: str = ""
) -> TestReport:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic threshold."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n1, n2 = x.size, y.size
    threshold = ks_critical(alpha) * math.sqrt((n1 + n2) / (n1 * n2)) if n1 and n2 else np.inf
    if n1 < 100 or n2 < 100:
        return make_report(
            name, float("nan"), threshold, n1, n2, alpha, seed_info,
            inconclusive=True, note="samples below the asymptotic-threshold regime",
        )
    return make_report(name, ks_statistic(x, y), threshold, n1, n2, alpha, seed_info)


def chi_square_binned(
    observed,
    expected,
    alpha: float = 0.01,
    min_expected: float = 5.0,
    name: str = "chi_square",
    seed_info: str = "",
) -> TestReport:
    """Pearson chi-square of observed counts against expected bin probabilities.

    Bins whose expected count falls below ``min_expected`` are pooled into a
    single bin (and the pool merged onward if still too small).  Fewer than
    two usable bins yields an inconclusive report.
    """
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    if observed.shape != expected.shape or observed.ndim != 1:
        raise ValidationError("observed and expected must be equal-length vectors")
    if np.any(expected < 0) or abs(expected.sum() - 1.0) > 1e-6:
        raise ValidationError("expected must be probabilities summing to 1")
    n = observed.sum()
    exp_counts = expected * n
    small = exp_counts < min_expected
    obs_bins = list(observed[~small])
    exp_bins = list(exp_counts[~small])
    if np.any(small):
        obs_bins.append(observed[small].sum())
        exp_bins.append(exp_counts[small].sum())
        if exp_bins[-1] < min_expected and len(exp_bins) > 1:
            pooled_obs, pooled_exp = obs_bins.pop(), exp_bins.pop()
            j = int(np.argmin(exp_bins))
            obs_bins[j] += pooled_obs
            exp_bins[j] += pooled_exp
    dof = len(obs_bins) - 1
    if dof < 1:
        return make_report(
            name, float("nan"), 0.0, int(n), len(obs_bins), alpha, seed_info,
            inconclusive=True, note="degenerate binning after merging",
        )
    obs_arr, exp_arr = np.array(obs_bins), np.array(exp_bins)
    statistic = float(((obs_arr - exp_arr) ** 2 / exp_arr).sum())
    threshold = float(chi2_dist.ppf(1.0 - alpha, dof))
    return make_report(
        name, statistic, threshold, int(n), len(obs_bins), alpha, seed_info,
        dof=dof, bins=len(obs_bins),
    )


if _HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def _x_row_sums(dist, labels, x_idx):  # pragma: no cover - compiled
        # scanning only the X rows halves the memory traffic; the Y-Y sum
        # follows from the (permutation-invariant) total
        m = x_idx.shape[0]
        row_x = np.zeros(m)
        row_y = np.zeros(m)
        for k in prange(m):
            i = x_idx[k]
            sx = 0.0
            sy = 0.0
            for j in range(dist.shape[1]):
                d = dist[i, j]
                if labels[j]:
                    sx += d
                else:
                    sy += d
            row_x[k] = sx
            row_y[k] = sy
        return row_x, row_y


def _pair_sums(dist, labels, total=None):
    """(sum_xx, sum_xy, sum_yy) of the full distance matrix split by labels.

    ``total`` is the full-matrix sum; when provided, only X rows are scanned.
    """
    if total is None:
        total = float(dist.sum(dtype=np.float64))
    x_idx = np.flatnonzero(labels)
    if _HAVE_NUMBA:
        row_x, row_y = _x_row_sums(dist, labels, x_idx)
        sxx, sxy = float(row_x.sum()), float(row_y.sum())
    else:
        rows = dist[x_idx].astype(np.float64)
        col_is_x = labels.astype(np.float64)
        per_col = rows.sum(axis=0)
        sxx = float(per_col @ col_is_x)
        sxy = float(per_col @ (1.0 - col_is_x))
    syy = total - sxx - 2.0 * sxy
    return sxx, sxy, syy


def energy_statistic_from_sums(sxx, sxy, syy, n, m) -> float:
    e = 2.0 * sxy / (n * m) - sxx / (n * n) - syy / (m * m)
    return n * m / (n + m) * e


def energy_statistic(x, y) -> float:
    """The two-sample energy statistic n m/(n+m) * E(x, y)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    dist = _distance_matrix(np.vstack([x, y]))
    labels = np.zeros(x.shape[0] + y.shape[0], dtype=np.bool_)
    labels[: x.shape[0]] = True
    return energy_statistic_from_sums(*_pair_sums(dist, labels), x.shape[0], y.shape[0])


def _distance_matrix(pool, block: int = 2048) -> np.ndarray:
    size = pool.shape[0]
    if size * size > 8 * 10**8:
        raise ParameterError("pooled sample too large for a dense distance matrix")
    dist = np.empty((size, size), dtype=np.float32)
    for lo in range(0, size, block):
        hi = min(lo + block, size)
        dist[lo:hi] = cdist(pool[lo:hi], pool).astype(np.float32)
    return dist


def energy_distance_test(
    x,
    y,
    permutations: int = 500,
    alpha: float = 0.01,
    stream: RngStream | None = None,
    name: str = "energy_distance",
) -> TestReport:
    """Permutation test on the multivariate energy statistic.

    The threshold is the empirical (1 - alpha) quantile of the statistic over
    label permutations drawn from ``stream``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1]:
        raise ValidationError("samples must be 2-D with matching dimension")
    if permutations < 200:
        raise ParameterError("need at least 200 permutations")
    if stream is None:
        raise ParameterError("an RngStream is required for permutation shuffles")
    n, m = x.shape[0], y.shape[0]
    pool = np.ascontiguousarray(np.vstack([x, y]))
    dist = _distance_matrix(pool)
    total = float(dist.sum(dtype=np.float64))
    labels = np.zeros(n + m, dtype=np.bool_)
    labels[:n] = True
    observed = energy_statistic_from_sums(*_pair_sums(dist, labels, total), n, m)
    gen = stream.generator
    perm_stats = np.empty(permutations)
    for b in range(permutations):
        shuffled = gen.permutation(labels)
        perm_stats[b] = energy_statistic_from_sums(*_pair_sums(dist, shuffled, total), n, m)
    threshold = float(np.quantile(perm_stats, 1.0 - alpha, method="higher"))
    return make_report(
        name, observed, threshold, n, m, alpha,
        seed_info=stream.describe(), permutations=permutations,
    )
