"""Closed-form spectral transition densities and their normalization checks.

Implements the Vandermonde determinant, the determinant ratio

    h_pi(z) = det{exp(-pi_i z_j)} / (Delta(pi) Delta(z)),

the dimension constant of the unitary-integral identity, the one-step
transition densities on the ordered-eigenvalue chamber, and the path-level
density ratio between the reweighted and standard spectral chains.

Sign convention: ``h_pi`` is *not* sign-normalized.  For decreasing arguments
its sign is (-1)^{N(N-1)/2}; every public quantity built from it uses only
ratios or pairs it with the matching constant, and the sign cancellation is
asserted rather than assumed.

Evaluations run in log space with separately tracked signs; near-coincident
arguments switch from the raw determinant to a divided-difference form that
stays finite at exact ties.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.linalg import expm

from .errors import (
    DegenerateStateError,
    NumericError,
    ParameterError,
    SizeError,
    ValidationError,
)
from .sampling import ParameterSet, RngStream, sample_haar_unitary

# below this minimum pairwise gap (in pi or z) the raw determinant loses all
# precision and the divided-difference path takes over
_CONFLUENT_GAP = 1e-4


def vandermonde(z) -> float:
    """prod_{i<j} (z_i - z_j); positive when z is strictly decreasing."""
    z = np.asarray(z, dtype=float)
    out = 1.0
    for i in range(z.size):
        out *= np.prod(z[i] - z[i + 1:])
    return float(out)


def log_vandermonde(z):
    """(sign, log|Delta(z)|); sign is 0 when z has a repeated entry."""
    z = np.asarray(z, dtype=float)
    sign, logabs = 1.0, 0.0
    for i in range(z.size):
        for j in range(i + 1, z.size):
            d = z[i] - z[j]
            if d == 0.0:
                return 0.0, -np.inf
            sign *= math.copysign(1.0, d)
            logabs += math.log(abs(d))
    return sign, logabs


def _min_gap(x) -> float:
    if x.size < 2:
        return np.inf
    return float(np.min(np.abs(np.diff(np.sort(x)))))


def _bidiagonal(nodes):
    J = np.diag(nodes)
    J += np.diag(np.ones(nodes.size - 1), 1)
    return J


def _h_logsign_confluent(pi, z):
    # Divided differences of exp(-p x) in both slots: the matrix
    # DD_{ij} = f[pi_1..pi_i; z_1..z_j] satisfies h = det(DD) and stays
    # finite at ties.  DD is assembled through the series
    # sum_k (-1)^k/k! (Jp^T)^k E (Jz)^k with bidiagonal node matrices,
    # which is expm of the Kronecker operator.
    n = pi.size
    c, d = z.mean(), pi.mean()
    Jp = _bidiagonal(pi - d)
    Jz = _bidiagonal(z - c)
    op = np.kron(Jz.T, Jp.T)
    e11 = np.zeros((n, n))
    e11[0, 0] = 1.0
    dd = (expm(-op) @ e11.reshape(-1, order="F")).reshape((n, n), order="F")
    sign, logabs = np.linalg.slogdet(dd)
    return float(sign), float(logabs - c * pi.sum())


def h_pi_logsign(pi, z):
    """``(sign, log|h_pi(z)|)`` for positive ``pi`` and real ``z``.

    Total on its domain: repeated entries in either argument are handled by
    the confluent (divided-difference) limit.
    """
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if pi.size != z.size:
        raise ValidationError("pi and z must have the same length")
    if np.any(pi <= 0) or not np.all(np.isfinite(pi)):
        raise ParameterError("pi must be strictly positive")
    if not np.all(np.isfinite(z)):
        raise ValidationError("z must be finite")
    if pi.size == 1:
        return 1.0, float(-pi[0] * z[0])
    if min(_min_gap(pi), _min_gap(z)) < _CONFLUENT_GAP:
        return _h_logsign_confluent(pi, z)
    expo = -np.outer(pi, z)
    row_max = expo.max(axis=1)
    # far in the tail the row-scaled matrix underflows to numerical
    # singularity; sign 0 then correctly reports a vanished value
    with np.errstate(divide="ignore"):
        sdet, ldet = np.linalg.slogdet(np.exp(expo - row_max[:, None]))
    spi, lpi = log_vandermonde(pi)
    sz, lz = log_vandermonde(z)
    return float(sdet * spi * sz), float(ldet + row_max.sum() - lpi - lz)


def h_pi(pi, z) -> float:
    """The determinant ratio det{exp(-pi_i z_j)} / (Delta(pi) Delta(z))."""
    sign, logabs = h_pi_logsign(pi, z)
    return sign * math.exp(logabs)


def hciz_constant(dim: int) -> float:
    """The constant c_N with ``int exp(-tr(diag(pi) U diag(mu) U*)) dU = h_pi(mu)/c_N``.

    Derived from the standard normalization of the unitary-group integral:
    c_N = (-1)^{N(N-1)/2} / prod_{k<N} k!.  The sign matches the sign of
    ``h_pi`` at decreasing arguments, making the ratio positive.  Certified
    against :func:`hciz_monte_carlo` in the test suite before anything
    depends on it.
    """
    if dim < 1:
        raise ParameterError("dim must be a positive integer")
    fact = 1.0
    for k in range(1, dim):
        fact *= math.factorial(k)
    return (-1.0) ** (dim * (dim - 1) // 2) / fact


def hciz_monte_carlo(pi, mu, reps: int, stream: RngStream, chunk: int = 100_000):
    """Monte Carlo estimate of ``int exp(-tr(diag(pi) U diag(mu) U*)) dU``.

    Returns ``(estimate, standard_error)``.  The integrand only involves
    ``sum_{ij} pi_i mu_j |U_ij|^2``, so samples reduce to squared moduli of
    Haar matrices.
    """
    pi = np.asarray(pi, dtype=float)
    mu = np.asarray(mu, dtype=float)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        u = sample_haar_unitary(stream, pi.size, size=m)
        quad = np.einsum("i,kij,j->k", pi, np.abs(u) ** 2, mu)
        vals = np.exp(-quad)
        total += vals.sum()
        total_sq += (vals**2).sum()
        done += m
    mean = total / reps
    var = max(total_sq / reps - mean**2, 0.0)
    return float(mean), float(math.sqrt(var / reps))


def is_interlaced(z, zp, tol: float = 0.0) -> bool:
    """Whether z' interlaces with z: z'_1 >= z_1 >= z'_2 >= ... >= z'_N >= z_N."""
    z = np.asarray(z, dtype=float)
    zp = np.asarray(zp, dtype=float)
    return bool(np.all(zp + tol >= z) and np.all(z[:-1] + tol >= zp[1:]))


def _require_interior(z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.size > 1 and np.any(np.diff(z) >= 0):
        raise ValidationError(
            "state must lie in the interior of the ordered chamber (strictly decreasing)"
        )
    return z


def q_density(z, zp, log: bool = False):
    """Standard one-step spectral transition density from z to z'.

    ``(Delta(z')/Delta(z)) exp(-sum_k (z'_k - z_k))`` on the interlacing cell,
    zero elsewhere.  ``z`` must be strictly decreasing.
    """
    z = _require_interior(z)
    zp = np.atleast_1d(np.asarray(zp, dtype=float))
    if zp.size != z.size:
        raise ValidationError("z and z' must have the same length")
    if not is_interlaced(z, zp):
        return -np.inf if log else 0.0
    szp, lzp = log_vandermonde(zp)
    if szp == 0.0:
        return -np.inf if log else 0.0
    sz, lz = log_vandermonde(z)
    logval = lzp - lz - (zp.sum() - z.sum())
    return logval if log else math.exp(logval)


def q_pihat_density(z, zp, pi, pihat_n: float, log: bool = False):
    """Reweighted one-step transition density with parameters (pi, pihat_n).

    ``prod_i (pi_i + pihat_n) * (h_pi(z')/h_pi(z)) * exp(-(pihat_n - 1) s) *
    q(z, z')`` where ``s = sum(z' - z)``.  Assembled in log space; the sign of
    the h-ratio must cancel and is checked.
    """
    z = _require_interior(z)
    zp = np.atleast_1d(np.asarray(zp, dtype=float))
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    if pihat_n < 0:
        raise ParameterError("pihat_n must be nonnegative")
    logq = q_density(z, zp, log=True)
    if logq == -np.inf:
        return -np.inf if log else 0.0
    sh_z, lh_z = h_pi_logsign(pi, z)
    if sh_z == 0.0 or lh_z == -np.inf:
        raise DegenerateStateError("h_pi vanishes at the source state")
    sh_zp, lh_zp = h_pi_logsign(pi, zp)
    if sh_zp == 0.0:
        return -np.inf if log else 0.0
    if sh_zp * sh_z < 0:
        raise NumericError("h-ratio sign failed to cancel; state may be ill-conditioned")
    s = zp.sum() - z.sum()
    logval = (
        np.log(pi + pihat_n).sum() + (lh_zp - lh_z) - (pihat_n - 1.0) * s + logq
    )
    return float(logval) if log else math.exp(logval)


def kernel_normalization(z, pi, pihat_n: float, method: str = "cauchy_binet") -> float:
    """Total mass of the reweighted kernel from state z; equals 1 for a true kernel.

    ``method="quadrature"`` integrates the density over the interlacing cell
    directly (adaptive, unbounded top coordinate).  ``method="cauchy_binet"``
    reduces the chamber integral to a determinant of one-dimensional
    integrals and evaluates those by adaptive quadrature.
    """
    z = _require_interior(z)
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    n = z.size
    if method == "quadrature":
        if n > 3:
            raise SizeError("direct quadrature supported for dimension <= 3")
        ranges = [(z[0], np.inf)] + [(z[i], z[i - 1]) for i in range(1, n)]
        opts = {"epsabs": 1e-11, "epsrel": 1e-11, "limit": 200}

        def integrand(*zp):
            return q_pihat_density(z, np.array(zp), pi, pihat_n)

        val, abserr = integrate.nquad(integrand, ranges, opts=opts)
        if not np.isfinite(val) or abserr > 1e-6:
            raise NumericError(
                f"chamber quadrature did not converge: value={val}, error={abserr}"
            )
        return float(val)
    if method == "cauchy_binet":
        rates = pi + pihat_n
        cell = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                val, err = integrate.quad(
                    lambda x, r=rates[i]: math.exp(-r * x),
                    z[j],
                    np.inf,
                    epsabs=1e-13,
                    epsrel=1e-13,
                )
                if not np.isfinite(val) or err > 1e-9:
                    raise NumericError(f"column integral ({i},{j}) failed: err={err}")
                cell[i, j] = val
        sdet, ldet = np.linalg.slogdet(cell)
        sh, lh = h_pi_logsign(pi, z)
        if sh == 0.0:
            raise DegenerateStateError("h_pi vanishes at the source state")
        spi, lpi = log_vandermonde(pi)
        sz, lz = log_vandermonde(z)
        logval = np.log(rates).sum() + pihat_n * z.sum() + ldet - lh - lpi - lz
        return float(sdet * sh * spi * sz * math.exp(logval))
    raise ParameterError(f"unknown method {method!r}")


def rn_spectra(path, params: ParameterSet, log: bool = False):
    """Density ratio of the reweighted spectral chain along a path of spectra.

    ``path`` is a sequence mu^(0), ..., mu^(n) of decreasing vectors with
    consecutive interlacing.  Returns

        C(n,N) * h_pi(mu^(n))/h_pi(mu^(0)) *
        exp(-sum_i sum_r pihat_r [mu_i^(r) - mu_i^(r-1)] + sum_i [mu_i^(n) - mu_i^(0)])

    with ``C(n,N) = prod_i prod_{r<=n} (pi_i + pihat_r)``.
    """
    mus = np.asarray(path, dtype=float)
    if mus.ndim != 2:
        raise ValidationError("path must be a sequence of equal-length spectra")
    n = mus.shape[0] - 1
    params.require_horizon(n)
    if mus.shape[1] != params.dim:
        raise ValidationError("spectra dimension does not match parameters")
    for r in range(1, n + 1):
        if not is_interlaced(mus[r - 1], mus[r], tol=1e-9):
            raise ValidationError(f"path steps {r-1} -> {r} do not interlace")
    pihat = params.pihat[:n]
    log_c = np.log(params.pi[None, :] + pihat[:, None]).sum()
    s0, l0 = h_pi_logsign(params.pi, mus[0])
    s1, l1 = h_pi_logsign(params.pi, mus[n])
    if s0 == 0.0:
        raise DegenerateStateError("h_pi vanishes at the initial spectrum")
    if s0 * s1 < 0:
        raise NumericError("h-ratio sign failed to cancel along the path")
    increments = np.diff(mus, axis=0).sum(axis=1)
    expo = -(pihat * increments).sum() + (mus[n].sum() - mus[0].sum())
    logval = log_c + (l1 - l0) + expo
    return float(logval) if log else math.exp(logval)
