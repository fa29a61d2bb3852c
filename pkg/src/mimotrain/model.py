"""System dimensions, power bookkeeping, QPSK mapping and pilot designs.

Two block-fading training layouts share these primitives:

* time-multiplexed training: ``n1`` pilot symbols followed by ``n2 = n - n1``
  data symbols per block;
* superimposed training: pilots added on top of data over the whole block of
  ``n`` symbols, after the data is distorted to be orthogonal to the pilots.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "SystemDims",
    "PowerConfig",
    "random_bits",
    "qpsk_modulate",
    "qpsk_demodulate",
    "tdmt_pilot",
    "ddst_pilot",
    "apply_distortion",
    "periodic_mean_matrix",
]


@dataclass(frozen=True)
class SystemDims:
    """Antenna counts and block layout.

    Attributes
    ----------
    k : transmit antennas
    m : receive antennas
    n : block length; the superimposed scheme requires ``k`` to divide ``n``
    n1 : pilot symbols per block for the time-multiplexed scheme
    """

    k: int
    m: int
    n: int
    n1: int

    def __post_init__(self):
        if not (self.m > self.k >= 1):
            raise ValueError(f"need m > k >= 1, got k={self.k}, m={self.m}")
        if self.n % self.k != 0:
            raise ValueError(f"k={self.k} must divide n={self.n}")
        if self.n1 < self.k:
            raise ValueError(f"need n1 >= k for pilot Gram invertibility, got n1={self.n1}")
        if self.n1 >= self.n:
            raise ValueError(f"need n1 < n so that n2 >= 1, got n1={self.n1}, n={self.n}")

    @property
    def n2(self) -> int:
        return self.n - self.n1

    @property
    def c1(self) -> float:
        """Load ratio k / n."""
        return self.k / self.n

    @property
    def c2(self) -> float:
        """Antenna ratio m / k (> 1 in the operating regime)."""
        return self.m / self.k

    @property
    def r(self) -> float:
        """Data-to-pilot length ratio n2 / n1."""
        return self.n2 / self.n1


@dataclass(frozen=True)
class PowerConfig:
    """Per-symbol powers for both schemes plus noise and total budget.

    ``sigma2_t`` is the mean energy per transmitted symbol; the allocators in
    :mod:`mimotrain.power` produce splits satisfying

    * ``n1 * sigma2_pt + n2 * sigma2_wt = n * sigma2_t`` (time-multiplexed),
    * ``sigma2_pd + (1 - c1) * sigma2_wd = sigma2_t`` (superimposed).
    """

    sigma2_pt: float
    sigma2_wt: float
    sigma2_pd: float
    sigma2_wd: float
    sigma2_v: float
    sigma2_t: float

    def __post_init__(self):
        for name in ("sigma2_pt", "sigma2_wt", "sigma2_pd", "sigma2_wd", "sigma2_v", "sigma2_t"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")

    def tdmt_budget_gap(self, dims: SystemDims) -> float:
        """Signed budget violation of the time-multiplexed split."""
        return self.n1_energy(dims) + dims.n2 * self.sigma2_wt - dims.n * self.sigma2_t

    def n1_energy(self, dims: SystemDims) -> float:
        return dims.n1 * self.sigma2_pt

    def ddst_budget_gap(self, dims: SystemDims) -> float:
        """Signed budget violation of the superimposed split."""
        return self.sigma2_pd + (1.0 - dims.c1) * self.sigma2_wd - self.sigma2_t


def random_bits(rng, count):
    """Uniform i.i.d. bits as a uint8 array."""
    return rng.integers(0, 2, size=count, dtype=np.uint8)


def qpsk_modulate(bits, k, n_cols, sigma2_w):
    """Gray-mapped QPSK symbols of per-symbol power ``sigma2_w``.

    ``bits`` has length ``2 * k * n_cols``; the bit pair for symbol ``(i, n)``
    sits at ``2 * (i * n_cols + n)``, first bit on the real axis.  Bit 0 maps
    to ``+sqrt(sigma2_w / 2)``, bit 1 to the negative sign.
    """
    bits = np.asarray(bits)
    if bits.size != 2 * k * n_cols:
        raise ValueError(f"expected {2 * k * n_cols} bits, got {bits.size}")
    amp = np.sqrt(sigma2_w / 2.0)
    signs = 1.0 - 2.0 * bits.astype(np.float64).reshape(k, n_cols, 2)
    return amp * (signs[..., 0] + 1j * signs[..., 1])


def qpsk_demodulate(symbols):
    """Per-axis sign decisions, the inverse of :func:`qpsk_modulate`.

    A coordinate that is exactly zero decodes to bit 0; the tie is a
    measure-zero event but must be deterministic for reproducibility.
    """
    symbols = np.asarray(symbols)
    bits = np.empty(symbols.shape + (2,), dtype=np.uint8)
    bits[..., 0] = symbols.real < 0
    bits[..., 1] = symbols.imag < 0
    return bits.reshape(-1)


@lru_cache(maxsize=64)
def _tdmt_pilot_cached(k, n1, sigma2_pt):
    grid = np.outer(np.arange(k), np.arange(n1))
    pilot = np.sqrt(sigma2_pt) * np.exp(-2j * np.pi * grid / n1)
    pilot.flags.writeable = False
    return pilot


def tdmt_pilot(k, n1, sigma2_pt):
    """Pilot block with orthogonal rows: ``P P^H = n1 * sigma2_pt * I_k``.

    Realised as the first ``k`` rows of an ``n1``-point DFT matrix scaled to
    per-symbol power ``sigma2_pt``; any unit-modulus matrix with this Gram
    works equally well.
    """
    if n1 < k:
        raise ValueError(f"need n1 >= k, got k={k}, n1={n1}")
    return _tdmt_pilot_cached(int(k), int(n1), float(sigma2_pt)).copy()


@lru_cache(maxsize=64)
def _ddst_pilot_cached(k, n, sigma2_pd):
    grid = np.outer(np.arange(k), np.arange(n))
    pilot = np.sqrt(sigma2_pd) * np.exp(2j * np.pi * grid / k)
    pilot.flags.writeable = False
    return pilot


def ddst_pilot(k, n, sigma2_pd):
    """Superimposed pilot ``P[k, n] = sqrt(sigma2_pd) * exp(2j*pi*k*n / k_tx)``.

    The rows are ``k``-periodic in time, hence invisible to the data
    distortion (``apply_distortion`` annihilates them), and satisfy
    ``P P^H = n * sigma2_pd * I_k``.
    """
    if n % k != 0:
        raise ValueError(f"k={k} must divide n={n}")
    return _ddst_pilot_cached(int(k), int(n), float(sigma2_pd)).copy()


def apply_distortion(x, k):
    """Right-multiply by ``I - J`` where ``J`` averages over residue classes.

    For each row of ``x`` (last axis of length ``n``), position ``t`` loses
    the mean of positions ``{t mod k, t mod k + k, ...}``.  This is the
    implicit O(k*n) form; :func:`periodic_mean_matrix` builds the explicit
    ``J`` for cross-checking.  Idempotent because ``J`` is a projector.
    """
    x = np.asarray(x)
    n = x.shape[-1]
    if n % k != 0:
        raise ValueError(f"k={k} must divide n={n}")
    blocks = x.reshape(x.shape[:-1] + (n // k, k))
    means = blocks.mean(axis=-2, keepdims=True)
    return (blocks - means).reshape(x.shape)


def periodic_mean_matrix(k, n):
    """Explicit ``J = (k/n) * ones(n/k) (x) I_k`` (reference path for tests)."""
    if n % k != 0:
        raise ValueError(f"k={k} must divide n={n}")
    q = n // k
    return (k / n) * np.kron(np.ones((q, q)), np.eye(k))
