"""Last-passage percolation over a weight array, with an exhaustive-path oracle.

Weights live on an N x n grid; the passage value to (i, j) is the maximum
total weight over up-right lattice paths from (1, 1).  Grid indices in the
public API are 1-based to match the usual lattice-coordinate convention.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .errors import ParameterError, SizeError, ValidationError
from .sampling import ParameterSet, RngStream, sample_exponential, sample_geometric

# exhaustive enumeration of C(N+n-2, N-1) paths stays near 1e5 below this
_ORACLE_MAX_SIZE = 22


def _check_weights(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim < 2:
        raise ValidationError("weight array must be at least 2-D")
    if np.any(w < 0):
        raise ValidationError("weights must be nonnegative")
    return w


def lpp_grid(w) -> np.ndarray:
    """Passage values to every cell; batched over leading axes of ``w``.

    First row and column are prefix sums, interior follows
    ``Y(i,j) = max(Y(i-1,j), Y(i,j-1)) + w_ij``.
    """
    w = _check_weights(w)
    y = np.empty_like(w)
    y[..., 0, :] = np.cumsum(w[..., 0, :], axis=-1)
    y[..., :, 0] = np.cumsum(w[..., :, 0], axis=-1)
    for i in range(1, w.shape[-2]):
        for j in range(1, w.shape[-1]):
            y[..., i, j] = np.maximum(y[..., i - 1, j], y[..., i, j - 1]) + w[..., i, j]
    return y


def lpp_value(w, i: int, j: int) -> float:
    """Maximum up-right path weight from (1, 1) to (i, j), 1-based indices."""
    w = _check_weights(w)
    rows, cols = w.shape[-2], w.shape[-1]
    if not (1 <= i <= rows and 1 <= j <= cols):
        raise ParameterError(f"indices ({i}, {j}) outside the {rows} x {cols} grid")
    return float(lpp_grid(w[..., :i, :j])[..., i - 1, j - 1])


def lpp_oracle(w) -> float:
    """Passage value to the far corner by explicit enumeration of all paths.

    Each path is identified by the positions of its down-moves among the
    N+n-2 unit steps.  Only for small instances.
    """
    w = _check_weights(w)
    if w.ndim != 2:
        raise ValidationError("oracle expects a single 2-D instance")
    rows, cols = w.shape
    if rows + cols > _ORACLE_MAX_SIZE:
        raise SizeError(f"instance {rows} x {cols} too large for path enumeration")
    steps = rows + cols - 2
    best = -np.inf
    for downs in combinations(range(steps), rows - 1):
        i = j = 0
        total = w[0, 0]
        down_set = set(downs)
        for s in range(steps):
            if s in down_set:
                i += 1
            else:
                j += 1
            total += w[i, j]
        best = max(best, total)
    return float(best)


def sample_weights(params: ParameterSet, n: int, reps: int, stream: RngStream) -> np.ndarray:
    """Exponential weight arrays W_ij with rate pi_i + pihat_j, shape (reps, dim, n).

    Replicate r draws from ``stream.child(r)``.
    """
    rates = params.rate_matrix(n)
    w = np.empty((reps, params.dim, n))
    for r in range(reps):
        w[r] = sample_exponential(stream.child(r), rates)
    return w


def simulate_lpp(params: ParameterSet, n: int, stream: RngStream) -> np.ndarray:
    """One weight array; returns the running values Y(N, 1), ..., Y(N, n)."""
    w = sample_weights(params, n, 1, stream)[0]
    return lpp_grid(w)[-1, :]


def simulate_lpp_batch(params: ParameterSet, grid, reps: int, stream: RngStream) -> np.ndarray:
    """Y(N, t) for t in grid over independent replicates, shape (reps, len(grid))."""
    grid = [int(t) for t in grid]
    if any(t < 1 for t in grid):
        raise ParameterError("grid times must be >= 1")
    w = sample_weights(params, max(grid), reps, stream)
    y = lpp_grid(w)[:, -1, :]
    return y[:, [t - 1 for t in grid]]


def geometric_parameters(params: ParameterSet, n: int, scale: float):
    """Discretization parameters a_i = 1 - pi_i/L, b_j = 1 - pihat_j/L."""
    params.require_horizon(n)
    a = 1.0 - params.pi / scale
    b = 1.0 - params.pihat[:n] / scale
    p = np.outer(a, b)
    if np.any(p <= 0) or np.any(p >= 1):
        raise ParameterError(
            "scale too small: discretized parameters must lie in (0, 1)"
        )
    return a, b, p


def simulate_geometric_lpp(params: ParameterSet, n: int, scale: float, stream: RngStream) -> np.ndarray:
    """Running passage values of the geometric pre-limit model, divided by ``scale``."""
    return simulate_geometric_lpp_batch(params, range(1, n + 1), scale, 1, stream)[0]


def simulate_geometric_lpp_batch(
    params: ParameterSet, grid, scale: float, reps: int, stream: RngStream
) -> np.ndarray:
    """Scaled geometric passage values at grid times, shape (reps, len(grid))."""
    grid = [int(t) for t in grid]
    if any(t < 1 for t in grid):
        raise ParameterError("grid times must be >= 1")
    n = max(grid)
    _, _, p = geometric_parameters(params, n, scale)
    w = np.empty((reps, params.dim, n))
    for r in range(reps):
        w[r] = sample_geometric(stream.child(r), p)
    y = lpp_grid(w)[:, -1, :]
    return y[:, [t - 1 for t in grid]] / scale
