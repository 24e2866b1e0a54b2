"""Row-insertion RSK in its triangular-array growth form, and the discrete kernel.

The algorithm maintains a triangular pattern whose level k is the shape of
the inserted word's sub-alphabet {1..k}.  Inserting one input column updates
levels bottom-up with max/min/plus operations only, so it applies verbatim to
real-valued inputs and every entry is 1-Lipschitz in every input.  Per level
the update is

    new[k][1] = max(old[k][1], new[k-1][1]) + column[k]
    new[k][i] = max(old[k][i], new[k-1][i]) + bumped[i-1]
    new[k][k] = old[k][k] + bumped[k-1]

where ``bumped[i] = min(old[k][i], new[k-1][i]) - old[k-1][i]`` is the mass
pushed from entry i of level k down to entry i+1 (and ``bumped[0]`` is the
fresh input).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product

import numpy as np

from . import kernels, stats
from .errors import (
    DegenerateStateError,
    NumericError,
    ParameterError,
    SizeError,
    ValidationError,
)
from .sampling import RngStream, sample_geometric

# Greene-oracle enumeration of disjoint path families is exponential; the
# contract caps instances at this many rows/columns.
_GREENE_MAX = 6
_SCHUR_MAX_PATTERNS = 10**7


@dataclass
class GTPattern:
    """Triangular array with interlacing consecutive levels; level k has k entries."""

    levels: list

    def __post_init__(self):
        self.levels = [np.atleast_1d(np.asarray(lv)) for lv in self.levels]
        for k, lv in enumerate(self.levels, start=1):
            if lv.shape[-1] != k:
                raise ValidationError(f"level {k} must have {k} entries")

    @classmethod
    def null(cls, depth: int, dtype=float) -> "GTPattern":
        return cls([np.zeros(k, dtype=dtype) for k in range(1, depth + 1)])

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def bottom(self) -> np.ndarray:
        return self.levels[-1]

    def level_sums(self) -> np.ndarray:
        return np.array([lv.sum() for lv in self.levels])

    def is_valid(self, tol: float = 0.0) -> bool:
        for k in range(1, self.depth):
            lower, upper = self.levels[k - 1], self.levels[k]
            if np.any(lower > upper[:-1] + tol) or np.any(upper[1:] > lower + tol):
                return False
        return True

    def require_valid(self, tol: float = 0.0) -> None:
        if not self.is_valid(tol):
            raise ValidationError("pattern levels do not interlace")


def _insert_column(levels, col):
    """One growth step; ``levels[k]`` has shape (..., k+1), ``col`` shape (..., depth)."""
    new = [levels[0] + col[..., :1]]
    for ell in range(1, len(levels)):
        old = levels[ell]
        below = new[ell - 1]
        head = old[..., :-1]
        mx = np.maximum(head, below)
        bumped = np.minimum(head, below) - levels[ell - 1]
        push = np.concatenate([col[..., ell : ell + 1], bumped[..., :-1]], axis=-1)
        tail = old[..., -1:] + bumped[..., -1:]
        new.append(np.concatenate([mx + push, tail], axis=-1))
    return new


def _check_inputs(xi) -> np.ndarray:
    xi = np.asarray(xi)
    if xi.ndim < 2:
        raise ValidationError("input array must be at least 2-D")
    if np.any(xi < 0):
        raise ValidationError("input entries must be nonnegative")
    return xi


def rsk_apply(xi, steps: int | None = None) -> list:
    """Apply RSK to the columns of ``xi``, starting from the null pattern.

    Returns the patterns after 1, ..., steps insertions.  Integer inputs keep
    integer entries.
    """
    xi = _check_inputs(xi)
    if xi.ndim != 2:
        raise ValidationError("rsk_apply expects a single 2-D input array")
    depth, n = xi.shape
    steps = n if steps is None else steps
    if steps > n:
        raise ParameterError(f"requested {steps} steps but input has {n} columns")
    dtype = xi.dtype if np.issubdtype(xi.dtype, np.integer) else float
    levels = [np.zeros(k, dtype=dtype) for k in range(1, depth + 1)]
    out = []
    for j in range(steps):
        levels = _insert_column(levels, xi[:, j])
        out.append(GTPattern([lv.copy() for lv in levels]))
    return out


def evolve_bottom_rows(xi) -> np.ndarray:
    """Bottom rows after each insertion, batched: (..., N, n) -> (n+1, ..., N).

    Index 0 is the null start.
    """
    xi = _check_inputs(xi)
    depth, n = xi.shape[-2], xi.shape[-1]
    lead = xi.shape[:-2]
    dtype = xi.dtype if np.issubdtype(xi.dtype, np.integer) else float
    levels = [np.zeros(lead + (k,), dtype=dtype) for k in range(1, depth + 1)]
    bottoms = np.zeros((n + 1,) + lead + (depth,), dtype=dtype)
    for j in range(n):
        levels = _insert_column(levels, xi[..., :, j])
        bottoms[j + 1] = levels[-1]
    return bottoms


# ---------------------------------------------------------------------------
# Greene's theorem oracle: maxima over families of disjoint up-right paths.

@lru_cache(maxsize=None)
def _paths_between(rows, cols, r0, c0, r1, c1):
    """All up-right paths as tuples of flat cell indices."""
    dr, dc = r1 - r0, c1 - c0
    out = []
    for downs in combinations(range(dr + dc), dr):
        i, j = r0, c0
        cells = [i * cols + j]
        down_set = set(downs)
        for s in range(dr + dc):
            if s in down_set:
                i += 1
            else:
                j += 1
            cells.append(i * cols + j)
        out.append(tuple(cells))
    return tuple(out)


@lru_cache(maxsize=None)
def _family_indicator(rows, cols, k):
    """Indicator matrix (families x cells) of pairwise-disjoint path k-tuples.

    Path r runs from (1, r) to (rows, cols - k + r); families must be
    vertex-disjoint.
    """
    per_path = [
        _paths_between(rows, cols, 0, r, rows - 1, cols - k + r)
        for r in range(k)
    ]
    families = []
    for combo in product(*per_path):
        sets = [frozenset(p) for p in combo]
        union = frozenset().union(*sets)
        if len(union) == sum(len(s) for s in sets):
            families.append(sorted(union))
    if not families:
        raise NumericError("no disjoint path family exists for this geometry")
    ind = np.zeros((len(families), rows * cols))
    for f, cells in enumerate(families):
        ind[f, cells] = 1.0
    return ind


def greene_oracle(xi, k: int) -> float:
    """Maximum total weight over k pairwise-disjoint up-right path families.

    Equals the sum of the k largest bottom-row entries of the RSK pattern.
    Enumeration-based; rows and columns are capped at 6.
    """
    xi = _check_inputs(xi)
    if xi.ndim != 2:
        raise ValidationError("greene_oracle expects a single 2-D instance")
    rows, cols = xi.shape
    if rows > _GREENE_MAX or cols > _GREENE_MAX:
        raise SizeError(f"instance {rows} x {cols} too large for family enumeration")
    if not 1 <= k <= min(rows, cols):
        raise ParameterError("k must satisfy 1 <= k <= min(rows, cols)")
    ind = _family_indicator(rows, cols, k)
    return float((ind @ xi.reshape(-1)).max())


# ---------------------------------------------------------------------------
# Schur polynomials: pattern-weight sum, and the bialternant form as the
# independent cross-check.

def _as_partition(lam, depth: int) -> tuple:
    lam = tuple(int(v) for v in lam)
    if any(v < 0 for v in lam) or any(lam[i] < lam[i + 1] for i in range(len(lam) - 1)):
        raise ValidationError("partition parts must be nonnegative and weakly decreasing")
    if len(lam) > depth:
        raise ValidationError(f"partition has more than {depth} parts")
    return lam + (0,) * (depth - len(lam))


def gt_pattern_count(lam, depth: int) -> float:
    """Number of integer patterns with the given bottom row (Weyl dimension formula)."""
    lam = _as_partition(lam, depth)
    count = 1.0
    for i in range(depth):
        for j in range(i + 1, depth):
            count *= (lam[i] - lam[j] + j - i) / (j - i)
    return round(count)


def gt_patterns(lam, depth: int):
    """Yield integer patterns with bottom row ``lam`` as lists of level tuples."""
    lam = _as_partition(lam, depth)

    def descend(row):
        if len(row) == 1:
            yield [row]
            return
        spans = [range(row[i + 1], row[i] + 1) for i in range(len(row) - 1)]
        for prev in product(*spans):
            for below in descend(prev):
                yield below + [row]

    yield from descend(lam)


def pattern_weight(levels, a) -> float:
    """The monomial weight of a pattern: prod_k a_k^(level-sum increment)."""
    a = np.asarray(a, dtype=float)
    sums = [float(np.sum(lv)) for lv in levels]
    w = a[0] ** sums[0]
    for k in range(1, len(sums)):
        w *= a[k] ** (sums[k] - sums[k - 1])
    return float(w)


def schur_gt(lam, a) -> float:
    """Schur polynomial as the weight sum over patterns with bottom row ``lam``."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise ParameterError("weight variables must be positive")
    depth = a.size
    if gt_pattern_count(lam, depth) > _SCHUR_MAX_PATTERNS:
        raise SizeError("too many patterns to enumerate")
    return float(sum(pattern_weight(levels, a) for levels in gt_patterns(lam, depth)))


def schur_bialternant(lam, a) -> float:
    """Schur polynomial as det{a_i^(lam_j + N - j)} / det{a_i^(N - j)}.

    Requires distinct variables; used as the independent oracle against
    :func:`schur_gt`.
    """
    a = np.asarray(a, dtype=float)
    depth = a.size
    lam = _as_partition(lam, depth)
    if depth > 1 and np.min(np.abs(np.subtract.outer(a, a)[np.triu_indices(depth, 1)])) == 0:
        raise ParameterError("bialternant form needs distinct variables")
    powers = np.array(lam) + depth - 1 - np.arange(depth)
    numer = np.linalg.det(a[:, None] ** powers[None, :])
    denom = np.linalg.det(a[:, None] ** (depth - 1 - np.arange(depth))[None, :])
    return float(numer / denom)


@lru_cache(maxsize=200_000)
def _schur_cached(lam: tuple, a: tuple) -> float:
    return schur_gt(lam, np.array(a))


def discrete_kernel_pmf(x, xp, a, b_n: float) -> float:
    """One-step bottom-row transition probability of the geometric-input chain.

    ``prod_i (1 - a_i b_n) * (s_x'(a)/s_x(a)) * b_n^(|x'| - |x|)`` on
    interlacing pairs ``0 <= x < x'``, zero otherwise.
    """
    a = np.asarray(a, dtype=float)
    depth = a.size
    x = _as_partition(x, depth)
    xp = _as_partition(xp, depth)
    if np.any(a * b_n <= 0) or np.any(a * b_n >= 1):
        raise ParameterError("a_i * b_n must lie in (0, 1)")
    if not kernels.is_interlaced(np.array(x, dtype=float), np.array(xp, dtype=float)):
        return 0.0
    s_x = _schur_cached(x, tuple(a))
    if s_x <= 0:
        raise DegenerateStateError("Schur weight vanished at the source partition")
    growth = sum(xp) - sum(x)
    return float(
        np.prod(1.0 - a * b_n) * (_schur_cached(xp, tuple(a)) / s_x) * b_n**growth
    )


def enumerate_transitions(x, a, b_n: float, tail_bound: float = 1e-10):
    """Reachable states from ``x`` with their probabilities, covering all but
    ``tail_bound`` of the mass.

    Returns (states, probs).  The top part bound grows until the enumerated
    mass exceeds ``1 - tail_bound``; geometric tails guarantee termination.
    """
    a = np.asarray(a, dtype=float)
    depth = a.size
    x = _as_partition(x, depth)
    bound = 8
    while True:
        spans = [range(x[0], x[0] + bound + 1)]
        spans += [range(x[i], x[i - 1] + 1) for i in range(1, depth)]
        states, probs = [], []
        for xp in product(*spans):
            if any(xp[i] < xp[i + 1] for i in range(depth - 1)):
                continue
            p = discrete_kernel_pmf(x, xp, a, b_n)
            if p > 0:
                states.append(xp)
                probs.append(p)
        total = sum(probs)
        if 1.0 - total < tail_bound:
            return states, np.array(probs)
        bound *= 2
        if bound > 4096:
            raise NumericError("transition mass did not accumulate; check parameters")


def rsk_chain_check(
    a,
    b,
    n: int,
    reps: int,
    stream: RngStream,
    alpha: float = 0.01,
    m_star: int | None = None,
    min_visits: int = 500,
) -> stats.TestReport:
    """Chi-square test of empirical bottom-row transitions against the kernel.

    Simulates ``reps`` independent geometric-input chains for ``m_star``
    steps, conditions on the most frequent state at step ``m_star - 1``, and
    compares the next-step distribution with :func:`discrete_kernel_pmf` at
    the step-``m_star`` parameter.  Too few visits to the conditioning state
    yields an inconclusive (not failed) report.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m_star = n if m_star is None else m_star
    if not 1 <= m_star <= n:
        raise ParameterError("m_star must lie in 1..n")
    if b.size < m_star:
        raise ParameterError("b must cover the simulated steps")
    p = np.outer(a, b[:m_star])
    if np.any(p <= 0) or np.any(p >= 1):
        raise ParameterError("a_i * b_j must lie in (0, 1)")
    xi = np.empty((reps, a.size, m_star), dtype=np.int64)
    for r in range(reps):
        xi[r] = sample_geometric(stream.child(r), p)
    bottoms = evolve_bottom_rows(xi)
    prev, nxt = bottoms[m_star - 1], bottoms[m_star]
    states, counts = np.unique(prev, axis=0, return_counts=True)
    x_star = states[counts.argmax()]
    mask = np.all(prev == x_star, axis=1)
    visits = int(mask.sum())
    if visits < min_visits:
        return stats.make_report(
            "rsk_bottom_row_transition",
            statistic=float("nan"),
            threshold=0.0,
            n1=visits,
            n2=0,
            alpha=alpha,
            seed_info=stream.describe(),
            inconclusive=True,
            note=f"only {visits} visits to the modal state (need {min_visits})",
        )
    observed_states = nxt[mask]
    cand, probs = enumerate_transitions(tuple(x_star.tolist()), a, float(b[m_star - 1]))
    index = {s: i for i, s in enumerate(cand)}
    observed = np.zeros(len(cand) + 1)
    for row in observed_states:
        observed[index.get(tuple(int(v) for v in row), len(cand))] += 1
    expected = np.append(probs, max(1.0 - probs.sum(), 0.0))
    report = stats.chi_square_binned(
        observed, expected, alpha=alpha, seed_info=stream.describe(),
        name="rsk_bottom_row_transition",
    )
    report.details["conditioning_state"] = [int(v) for v in x_star]
    report.details["visits"] = visits
    report.details["step"] = m_star
    return report


def initial_pattern_pmf(x: GTPattern, lam, a) -> float:
    """Probability of an initial pattern with bottom row ``lam``: a^x / s_lam(a)."""
    a = np.asarray(a, dtype=float)
    lam = _as_partition(lam, a.size)
    x.require_valid()
    if tuple(int(v) for v in x.bottom) != lam:
        raise ValidationError("pattern bottom row does not match the partition")
    return pattern_weight(x.levels, a) / _schur_cached(lam, tuple(a))


def initial_gt_density(z: GTPattern, mu, pi) -> float:
    """Density of the non-null initial pattern on the fiber with bottom row ``mu``.

    ``Delta(pi)/det{exp(-pi_i mu_j)} * c^z`` with ``c_k = exp(-pi_k)``, i.e.
    ``sgn(c_N) * c^z / (h_pi(mu) Delta(mu))``; the dimension-constant sign
    makes the value nonnegative with either chamber-ordering convention.
    Requires strictly decreasing ``mu``.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    if mu.size > 1 and np.any(np.diff(mu) >= 0):
        raise ValidationError("mu must have strictly decreasing (distinct) components")
    z.require_valid(tol=1e-12)
    if z.depth != mu.size:
        raise ValidationError("pattern depth does not match mu")
    if np.max(np.abs(z.bottom - mu)) > 1e-9 * max(1.0, float(np.abs(mu).max())):
        raise ValidationError("pattern bottom row does not match mu")
    sums = z.level_sums()
    log_cz = -(pi[0] * sums[0] + float(np.sum(pi[1:] * np.diff(sums))))
    sh, lh = kernels.h_pi_logsign(pi, mu)
    s_mu, l_mu = kernels.log_vandermonde(mu)
    sign_c = (-1.0) ** (mu.size * (mu.size - 1) // 2)
    value = sign_c * sh * s_mu * math.exp(log_cz - lh - l_mu)
    if value < 0:
        raise NumericError("density sign failed to cancel")
    return float(value)
