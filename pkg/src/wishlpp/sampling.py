"""Deterministic, stream-splittable sampling of the model's primitive distributions.

Every sampler draws from an explicitly passed :class:`RngStream`.  A stream is
addressed by ``(root_seed, stream_path)``; the same address always reproduces
the same sample sequence, independent of thread count or draw interleaving in
other streams.  Streams with distinct paths are statistically independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ParameterError


class RngStream:
    """A random stream addressed by a root seed and a derivation path.

    The underlying generator is seeded from
    ``SeedSequence(root_seed, spawn_key=stream_path)``, numpy's documented
    tree-splitting construction, so ``child(i)`` of path ``p`` equals the
    stream at path ``p + (i,)``.  Instances carry generator state: repeated
    draws advance along the stream's fixed sequence.
    """

    __slots__ = ("root_seed", "stream_path", "_gen")

    def __init__(self, root_seed: int, stream_path=()):
        self.root_seed = int(root_seed)
        self.stream_path = tuple(int(p) for p in stream_path)
        if any(p < 0 for p in self.stream_path):
            raise ParameterError("stream_path indices must be nonnegative")
        seq = np.random.SeedSequence(self.root_seed, spawn_key=self.stream_path)
        self._gen = np.random.default_rng(seq)

    def child(self, *indices: int) -> "RngStream":
        """Derive the sub-stream at ``stream_path + indices`` (fresh state)."""
        return RngStream(self.root_seed, self.stream_path + indices)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def describe(self) -> str:
        return f"root_seed={self.root_seed} path={list(self.stream_path)}"

    def __repr__(self) -> str:
        return f"RngStream(root_seed={self.root_seed}, stream_path={self.stream_path})"


@dataclass(frozen=True, eq=False)
class ParameterSet:
    """Model parameters: a positive vector ``pi`` and a nonnegative sequence ``pihat``.

    ``pihat`` must be at least as long as any simulation horizon it is used
    with; :meth:`require_horizon` enforces this at the point of use.
    """

    pi: np.ndarray
    pihat: np.ndarray

    def __post_init__(self):
        pi = np.atleast_1d(np.asarray(self.pi, dtype=float))
        pihat = np.atleast_1d(np.asarray(self.pihat, dtype=float)) if np.size(self.pihat) else np.empty(0)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "pihat", pihat)
        if pi.ndim != 1 or pi.size == 0:
            raise ParameterError("pi must be a nonempty vector")
        if not np.all(np.isfinite(pi)) or np.any(pi <= 0):
            raise ParameterError("pi must be strictly positive and finite")
        if pihat.ndim > 1 or (pihat.size and (not np.all(np.isfinite(pihat)) or np.any(pihat < 0))):
            raise ParameterError("pihat must be a nonnegative finite sequence")

    @property
    def dim(self) -> int:
        return self.pi.size

    def require_horizon(self, n: int) -> None:
        if n > self.pihat.size:
            raise ConfigError(
                f"horizon {n} exceeds pihat length {self.pihat.size}"
            )

    def rates(self, m: int) -> np.ndarray:
        """Column-``m`` rates ``pi_i + pihat_m`` (``m`` is 1-based)."""
        self.require_horizon(m)
        return self.pi + self.pihat[m - 1]

    def rate_matrix(self, n: int) -> np.ndarray:
        """The ``(dim, n)`` array of rates ``pi_i + pihat_j`` for ``j = 1..n``."""
        self.require_horizon(n)
        return self.pi[:, None] + self.pihat[None, :n]

    @classmethod
    def standard(cls, dim: int, horizon: int) -> "ParameterSet":
        """The standard measure: ``pi`` identically one, ``pihat`` identically zero."""
        return cls(np.ones(dim), np.zeros(horizon))


def _check_rate(rate) -> np.ndarray:
    rate = np.asarray(rate, dtype=float)
    if not np.all(np.isfinite(rate)) or np.any(rate <= 0):
        raise ParameterError("rate must be strictly positive and finite")
    return rate


def sample_complex_gaussian(stream: RngStream, rate, size=None):
    """Complex zero-mean Gaussian with ``E|A|^2 = 1/rate``.

    Real and imaginary parts are independent N(0, 1/(2*rate)).  ``rate`` may
    be an array, in which case it broadcasts against ``size``.
    """
    rate = _check_rate(rate)
    shape = rate.shape if size is None else size
    gen = stream.generator
    scale = np.sqrt(0.5 / rate)
    z = gen.standard_normal(shape) + 1j * gen.standard_normal(shape)
    return z * scale


def sample_exponential(stream: RngStream, rate, size=None):
    """Exponential variate(s) with the given rate (mean ``1/rate``)."""
    rate = _check_rate(rate)
    shape = rate.shape if size is None else size
    return stream.generator.exponential(1.0, size=shape) / rate


def sample_geometric(stream: RngStream, p, size=None):
    """Geometric on {0, 1, 2, ...} with ``P(X = k) = (1 - p) p^k``.

    numpy's geometric counts trials on {1, 2, ...} with success probability
    ``1 - p``, so the support shift is explicit here.
    """
    p = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p)) or np.any(p <= 0) or np.any(p >= 1):
        raise ParameterError("geometric parameter p must lie in (0, 1)")
    shape = p.shape if size is None else size
    return stream.generator.geometric(1.0 - p, size=shape) - 1


def sample_haar_unitary(stream: RngStream, dim: int, size=None):
    """Haar-distributed unitary matrices of the given dimension.

    QR of a complex Ginibre matrix with the phase of R's diagonal folded into
    Q.  Without the phase correction the law would depend on the QR sign
    convention and not be Haar.
    """
    if dim < 1:
        raise ParameterError("dim must be a positive integer")
    gen = stream.generator
    shape = (dim, dim) if size is None else (size, dim, dim)
    a = gen.standard_normal(shape) + 1j * gen.standard_normal(shape)
    q, r = np.linalg.qr(a / np.sqrt(2.0))
    d = np.diagonal(r, axis1=-2, axis2=-1)
    phase = d / np.abs(d)
    return q * phase[..., None, :]
