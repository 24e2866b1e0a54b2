"""The rank-one-increment Hermitian matrix process, its spectra, and density ratios.

The process starts at the zero matrix and adds one complex Gaussian outer
product per step; column ``m`` entries have rate ``pi_i + pihat_m``.  This
module also provides isospectral sampling (uniform and exponentially tilted)
and the matrix-level density ratios between the parametrized and standard
measures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ParameterError, ValidationError
from .sampling import ParameterSet, RngStream, sample_complex_gaussian, sample_haar_unitary


def require_hermitian(m, tol: float = 1e-12) -> np.ndarray:
    """Validate Hermitian symmetry (tolerance scales with the entry magnitude)."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("matrix must be square")
    scale = max(1.0, float(np.abs(m).max()) if m.size else 0.0)
    if np.abs(m - m.conj().T).max() > tol * scale:
        raise ValidationError("matrix is not Hermitian within tolerance")
    return m


def hermitian_spectrum(m) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, ordered decreasingly."""
    m = require_hermitian(m)
    return np.linalg.eigvalsh(m)[::-1]


@dataclass
class MatrixPath:
    """States M(0), ..., M(n) of the matrix process plus the generating parameters."""

    states: list = field(default_factory=list)
    params: ParameterSet | None = None

    @property
    def horizon(self) -> int:
        return len(self.states) - 1

    def increment(self, m: int) -> np.ndarray:
        return self.states[m] - self.states[m - 1]

    def diag_increments(self) -> np.ndarray:
        """Real diagonal increments, shape (horizon, dim)."""
        diags = np.array([np.diagonal(s).real for s in self.states])
        return np.diff(diags, axis=0)

    def spectra(self) -> np.ndarray:
        """Spectra of every state, shape (horizon + 1, dim)."""
        return np.array([hermitian_spectrum(s) for s in self.states])


def simulate_wishart_path(params: ParameterSet, n: int, stream: RngStream) -> MatrixPath:
    """Simulate M(0)=0, M(m) = M(m-1) + v v* with v_i of rate pi_i + pihat_m."""
    params.require_horizon(n)
    dim = params.dim
    states = [np.zeros((dim, dim), dtype=complex)]
    for m in range(1, n + 1):
        v = sample_complex_gaussian(stream, params.rates(m))
        states.append(states[-1] + np.outer(v, v.conj()))
    return MatrixPath(states=states, params=params)


def simulate_wishart_spectra(
    params: ParameterSet,
    grid,
    reps: int,
    stream: RngStream,
    observable: str = "largest",
) -> np.ndarray:
    """Spectral observables of ``reps`` independent paths at the given grid times.

    Replicate ``r`` draws from ``stream.child(r)``, so results do not depend
    on batching or worker layout.  Returns shape ``(reps, len(grid))`` for
    ``observable="largest"`` or ``(reps, len(grid), dim)`` for ``"full"``.
    """
    grid = [int(t) for t in grid]
    if any(t < 1 for t in grid):
        raise ParameterError("grid times must be >= 1")
    n = max(grid)
    rates = params.rate_matrix(n)
    dim = params.dim
    cols = np.empty((reps, dim, n), dtype=complex)
    for r in range(reps):
        cols[r] = sample_complex_gaussian(stream.child(r), rates)
    if observable == "largest":
        out = np.empty((reps, len(grid)))
    elif observable == "full":
        out = np.empty((reps, len(grid), dim))
    else:
        raise ParameterError(f"unknown observable {observable!r}")
    for g, t in enumerate(grid):
        a = cols[:, :, :t]
        m = a @ a.conj().swapaxes(1, 2)
        ev = np.linalg.eigvalsh(m)
        if observable == "largest":
            out[:, g] = ev[:, -1]
        else:
            out[:, g, :] = ev[:, ::-1]
    return out


def _log_rn_from_diag(diag_increments: np.ndarray, params: ParameterSet) -> np.ndarray:
    """log density ratio from diagonal increments, batched over leading axes.

    ``diag_increments`` has shape (..., n, dim).
    """
    d = np.asarray(diag_increments, dtype=float)
    n = d.shape[-2]
    if np.any(d < -1e-9):
        raise ValidationError("negative diagonal increments beyond tolerance")
    d = np.clip(d, 0.0, None)
    rates = params.rate_matrix(n).T  # (n, dim)
    return np.log(rates).sum() - ((rates - 1.0) * d).sum(axis=(-2, -1))


def rn_derivative_increments(path: MatrixPath, params: ParameterSet, log: bool = False):
    """Density ratio of the path's increments between the target and standard measures.

    The product over steps m of ``prod_i (pi_i + pihat_m) *
    exp(-(pi_i + pihat_m - 1) dM_ii(m))``; a pure formula over the diagonal
    increments, whatever measure the path was generated under.
    """
    logval = float(_log_rn_from_diag(path.diag_increments(), params))
    return logval if log else np.exp(logval)


def sample_isospectral(mu, stream: RngStream, size=None):
    """Uniform (conjugation-invariant) random matrix with spectrum ``mu``."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if np.any(np.diff(mu) > 0):
        raise ValidationError("mu must be ordered decreasingly")
    u = sample_haar_unitary(stream, mu.size, size=size)
    return (u * mu) @ u.conj().swapaxes(-2, -1)


def sample_isospectral_tilted(mu, pi, stream: RngStream, size=None):
    """Isospectral sample reweighted by exp(-tr(diag(pi) M)).

    Exact rejection sampling from the uniform isospectral law; the envelope
    constant is the rearrangement bound min_sigma sum_i pi_i mu_sigma(i).
    This is the conditional law of the process state given its spectrum under
    the reweighted measure, which the uniform law is not once pi != 1.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    if np.any(np.diff(mu) > 0):
        raise ValidationError("mu must be ordered decreasingly")
    if pi.size != mu.size or np.any(pi <= 0):
        raise ParameterError("pi must be positive and match mu in length")
    want = 1 if size is None else int(size)
    log_wmax = -float(np.sort(pi) @ np.sort(mu)[::-1])
    gen = stream.generator
    out = np.empty((want, mu.size, mu.size), dtype=complex)
    got = 0
    while got < want:
        block = max(want - got, 64)
        u = sample_haar_unitary(stream, mu.size, size=block)
        logw = -np.einsum("i,kij,j->k", pi, np.abs(u) ** 2, mu)
        keep = gen.uniform(size=block) < np.exp(logw - log_wmax)
        u = u[keep][: want - got]
        out[got : got + u.shape[0]] = (u * mu) @ u.conj().swapaxes(-2, -1)
        got += u.shape[0]
    return out[0] if size is None else out


def rn_derivative_initial(m0, mu, pi) -> float:
    """Initial-state density ratio relative to the uniform isospectral law.

    ``(c_N / h_pi(mu)) exp(-sum(mu)) exp(-tr[(diag(pi) - I) M(0)])``.
    """
    m0 = require_hermitian(m0)
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    spec = hermitian_spectrum(m0)
    if np.max(np.abs(spec - mu)) > 1e-7 * max(1.0, float(np.abs(mu).max())):
        raise ValidationError("spectrum of M(0) does not match mu")
    c = kernels.hciz_constant(mu.size)
    sh, lh = h_pi_logsign_checked(pi, mu, np.sign(c))
    tr_term = float(((pi - 1.0) * np.diagonal(m0).real).sum())
    return np.sign(c) * sh * np.exp(np.log(abs(c)) - lh - mu.sum() - tr_term)


def h_pi_logsign_checked(pi, mu, expected_sign):
    """h_pi log-sign where the caller knows the sign it must cancel against."""
    sh, lh = kernels.h_pi_logsign(pi, mu)
    if sh == 0.0:
        raise ValidationError("h_pi vanished; mu may have repeated entries beyond the confluent range")
    if sh * expected_sign < 0:
        raise ValidationError("h_pi sign does not cancel against the dimension constant")
    return sh, lh


def one_step_spectra(z, pi, pihat_1: float, reps: int, stream: RngStream) -> np.ndarray:
    """Spectra after one reweighted step of the matrix chain started at spectrum z.

    The initial matrix follows the tilted isospectral law (the conditional
    state law given spectrum z under the reweighted measure); the increment
    column has rates ``pi_i + pihat_1``.  Returns shape (reps, dim).
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    m0 = sample_isospectral_tilted(z, pi, stream, size=reps)
    v = sample_complex_gaussian(stream, pi + pihat_1, size=(reps, z.size))
    m1 = m0 + v[:, :, None] * v[:, None, :].conj()
    return np.linalg.eigvalsh(m1)[:, ::-1]
