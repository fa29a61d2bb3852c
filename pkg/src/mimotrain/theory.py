"""Closed-form error-rate machinery for both training schemes.

The central quantities are the scalar error-variance parameters ``delta_t``
(time-multiplexed) and ``delta_d`` (superimposed), which aggregate additive
noise, channel-estimation error and their interaction.  Conditioned on the
channel, the post-processing noise is asymptotically Gaussian for the
time-multiplexed scheme and a Gaussian mixture for the superimposed scheme;
averaging the per-axis error probability over the chi-square-distributed
post-detection SNR reduces every BER to the integral family

    J(m, a, b) = a^m / Gamma(m) * int_0^inf exp(-a x) x^{m-1} Q(sqrt(b x)) dx

which has an elementary closed form for integer ``m``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from .model import PowerConfig, SystemDims

__all__ = [
    "TheoryParams",
    "MixtureSpec",
    "q_function",
    "j_function",
    "j_function_quadrature",
    "delta_t",
    "delta_t_from_ratios",
    "delta_d",
    "delta_d_from_ratios",
    "theory_params",
    "ber_tdmt_theory",
    "ber_tdmt_theory_from_delta",
    "ber_ddst_theory",
    "ber_ddst_theory_from_delta",
    "ber_tdmt_highsnr",
    "ddst_floor",
    "ber_bound_gap",
    "mixture_spec",
    "class_mean_mixture",
    "gamma_pdf",
    "cf_theory_tdmt",
    "cf_theory_ddst",
]


def q_function(x):
    """Gaussian tail probability ``Q(x) = 0.5 * erfc(x / sqrt(2))``."""
    return 0.5 * special.erfc(np.asarray(x, dtype=np.float64) / np.sqrt(2.0))


def _binomial_tail_series(mu, m):
    """``sum_{k=0}^{m-1} C(2k, k) ((1 - mu^2) / 4)^k`` without big integers.

    Term ratio is ``2 (2k - 1) / k * x`` with ``x = (1 - mu^2) / 4 <= 1/4``,
    so the series is stable for any ``m``.
    """
    x = (1.0 - mu * mu) / 4.0
    terms = []
    t = 1.0
    for k in range(m):
        if k > 0:
            t *= 2.0 * (2 * k - 1) / k * x
        terms.append(t)
    return math.fsum(terms)


def j_function(m, a, b):
    """Closed form of the Gamma-weighted Gaussian tail integral.

    For integer ``m >= 1``, ``a > 0`` and ``b >= 0``:

    ``J(m, a, b) = 0.5 * [1 - mu * sum_{k=0}^{m-1} C(2k,k) ((1-mu^2)/4)^k]``

    with ``mu = sqrt(c / (1 + c))`` and ``c = b / (2a)``.  ``J(m, a, 0)`` is
    exactly one half, and ``J`` decreases in ``b``.
    """
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    if a <= 0:
        raise ValueError(f"a must be > 0, got {a}")
    if b < 0:
        raise ValueError(f"b must be >= 0, got {b}")
    if b == 0:
        return 0.5
    c = b / (2.0 * a)
    mu = math.sqrt(c / (1.0 + c))
    return 0.5 * (1.0 - mu * _binomial_tail_series(mu, int(m)))


def j_function_quadrature(m, a, b):
    """Adaptive-quadrature evaluation of the same integral (test oracle).

    Integrates ``a^m / Gamma(m) x^{m-1} exp(-a x) Q(sqrt(b x))`` directly;
    kept independent of :func:`j_function` on purpose.
    """
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    if a <= 0:
        raise ValueError(f"a must be > 0, got {a}")
    m = int(m)

    def integrand(x):
        log_density = m * math.log(a) + (m - 1) * math.log(x) - a * x - math.lgamma(m)
        return math.exp(log_density) * 0.5 * math.erfc(math.sqrt(b * x / 2.0))

    upper = (m / a) * 40.0 + 40.0 / a
    value, _ = integrate.quad(integrand, 0.0, upper, limit=400, epsabs=1e-12, epsrel=1e-12)
    return value


def delta_t_from_ratios(ctilde1, c2, sigma2_v, sigma2_pt, sigma2_wt):
    """Error-variance parameter of the time-multiplexed scheme from ratios.

    ``ctilde1`` is the pilot load ``k / n1`` (equivalently ``(1 + r) c1``).
    """
    if c2 <= 1:
        raise ValueError(f"need antenna ratio c2 > 1, got {c2}")
    if sigma2_v == 0:
        return 0.0
    if sigma2_pt <= 0 or sigma2_wt <= 0:
        raise ValueError("pilot and data powers must be > 0 for noisy operation")
    boost = (c2 + 1.0) / (c2 - 1.0)
    return (
        ctilde1 * sigma2_v / sigma2_pt
        + sigma2_v / sigma2_wt
        + ctilde1 * boost * sigma2_v**2 / (sigma2_wt * sigma2_pt)
    )


def delta_t(dims: SystemDims, power: PowerConfig):
    """``delta_t`` with finite-size plug-in ratios (``(1+r) c1 = k / n1``)."""
    return delta_t_from_ratios(
        dims.k / dims.n1, dims.c2, power.sigma2_v, power.sigma2_pt, power.sigma2_wt
    )


def delta_d_from_ratios(c1, c2, sigma2_v, sigma2_pd, sigma2_wd):
    """Error-variance parameter of the superimposed scheme from ratios."""
    if c2 <= 1:
        raise ValueError(f"need antenna ratio c2 > 1, got {c2}")
    if not 0 < c1 < 1:
        raise ValueError(f"need load ratio 0 < c1 < 1, got {c1}")
    if sigma2_v == 0:
        return 0.0
    if sigma2_pd <= 0 or sigma2_wd <= 0:
        raise ValueError("pilot and data powers must be > 0 for noisy operation")
    boost = (c2 + 1.0) / (c2 - 1.0)
    return (1.0 - c1) * (
        c1 * sigma2_v / sigma2_pd
        + sigma2_v / sigma2_wd
        + c1 * boost * sigma2_v**2 / (sigma2_pd * sigma2_wd)
    )


def delta_d(dims: SystemDims, power: PowerConfig):
    """``delta_d`` with the finite-size plug-in ``c1 = k / n``."""
    return delta_d_from_ratios(
        dims.c1, dims.c2, power.sigma2_v, power.sigma2_pd, power.sigma2_wd
    )


@dataclass(frozen=True)
class TheoryParams:
    """Bundle of the scalar parameters entering the closed-form BERs."""

    delta_t: float
    delta_d: float
    mu_t: float


def theory_params(dims: SystemDims, power: PowerConfig) -> TheoryParams:
    dt = delta_t(dims, power)
    dd = delta_d(dims, power)
    return TheoryParams(delta_t=dt, delta_d=dd, mu_t=math.sqrt(1.0 / (2.0 * dims.k * dt + 1.0)))


def ber_tdmt_theory_from_delta(delta, k, m):
    """Time-multiplexed BER for a given ``delta_t`` and antenna counts.

    ``0.5 * [1 - mu_t sum_{j=0}^{m-k} C(2j,j) ((1-mu_t^2)/4)^j]`` with
    ``mu_t = sqrt(1 / (2 k delta + 1))``; identical to
    ``j_function(m - k + 1, k * delta, 1)``.
    """
    if m < k:
        raise ValueError(f"need m >= k, got k={k}, m={m}")
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    if delta == 0:
        return 0.0
    mu_t = math.sqrt(1.0 / (2.0 * k * delta + 1.0))
    return 0.5 * (1.0 - mu_t * _binomial_tail_series(mu_t, m - k + 1))


def ber_tdmt_theory(dims: SystemDims, power: PowerConfig):
    return ber_tdmt_theory_from_delta(delta_t(dims, power), dims.k, dims.m)


def _mixture_weights(q):
    """Binomial weights ``C(q-1, s) / 2^(q-1)`` for ``s = 0..q-1`` as floats."""
    if q - 1 <= 1000:
        scale = 2 ** (q - 1)
        return [math.comb(q - 1, s) / scale for s in range(q)]
    log2 = math.log(2.0)
    return [
        math.exp(
            math.lgamma(q) - math.lgamma(s + 1) - math.lgamma(q - s) - (q - 1) * log2
        )
        for s in range(q)
    ]


def ber_ddst_theory_from_delta(delta, k, m, c1):
    """Superimposed-training BER for a given ``delta_d``.

    ``sum_s C(1/c1 - 1, s) / 2^(1/c1 - 1) * J(m - k + 1, k delta, 4 s^2 c1^2)``;
    the ``s = 0`` component contributes the floor ``2^(-1/c1)`` exactly.
    """
    if m < k:
        raise ValueError(f"need m >= k, got k={k}, m={m}")
    q = round(1.0 / c1)
    if abs(q * c1 - 1.0) > 1e-9 or q < 1:
        raise ValueError(f"1/c1 must be a positive integer, got c1={c1}")
    if q == 1:
        warnings.warn(
            "block length equals antenna count: the distortion removes all "
            "data, the formula degenerates to BER = 1/2",
            stacklevel=2,
        )
    if delta == 0:
        # Only the floor survives: every J with b > 0 tends to 0.
        return ddst_floor(c1)
    weights = _mixture_weights(q)
    a = k * delta
    order = m - k + 1
    return math.fsum(
        w * j_function(order, a, 4.0 * s * s * c1 * c1) for s, w in enumerate(weights)
    )


def ber_ddst_theory(dims: SystemDims, power: PowerConfig):
    return ber_ddst_theory_from_delta(delta_d(dims, power), dims.k, dims.m, dims.c1)


def ber_tdmt_highsnr(dims: SystemDims, power: PowerConfig):
    """Leading monomial of the time-multiplexed BER for small ``k * delta_t``.

    ``(k delta_t)^(m-k+1) / 2^(m-k+1) * C(2(m-k)+1, m-k+1)``; exposes the
    diversity order ``m - k + 1``.
    """
    delta = delta_t(dims, power)
    order = dims.m - dims.k + 1
    return (dims.k * delta) ** order / 2**order * math.comb(2 * (dims.m - dims.k) + 1, order)


def ddst_floor(c1):
    """SNR-independent lower bound ``2^(-1/c1)`` caused by the data distortion."""
    q = round(1.0 / c1)
    if abs(q * c1 - 1.0) > 1e-9 or q < 1:
        raise ValueError(f"1/c1 must be a positive integer, got c1={c1}")
    return 2.0 ** (-q)


def ber_bound_gap(dims: SystemDims, power: PowerConfig):
    """Lower bound ``J(m-k+1, k delta_d, 1)`` next to the actual mixture BER.

    Returns ``(lower_bound, ber_d)``; the mixture sum can never undercut the
    bound, so a violation beyond rounding signals an implementation bug.
    """
    dd = delta_d(dims, power)
    lower = j_function(dims.m - dims.k + 1, dims.k * dd, 1.0)
    ber_d = ber_ddst_theory_from_delta(dd, dims.k, dims.m, dims.c1)
    if ber_d < lower - 1e-12:
        raise RuntimeError(
            f"mixture BER {ber_d} fell below its convexity bound {lower}"
        )
    return lower, ber_d


@dataclass(frozen=True, eq=False)
class MixtureSpec:
    """Discrete offset mixture of the superimposed scheme's residual noise.

    ``offsets[s] = c1 * sqrt(sigma2_wd / 2) * levels[s]`` holds with integer
    ``levels``; ``prob_fractions`` are the exact binomial weights backing the
    float ``probs``.  The multiset of offsets is symmetric about zero and has
    zero mean.
    """

    offsets: np.ndarray
    probs: np.ndarray
    levels: tuple
    prob_fractions: tuple

    def __post_init__(self):
        total = sum(self.prob_fractions)
        if total != 1:
            raise ValueError(f"probabilities must sum to 1, got {total}")
        if any(p <= 0 for p in self.prob_fractions):
            raise ValueError("all probabilities must be > 0")
        if sorted(self.levels) != sorted(-lvl for lvl in self.levels):
            raise ValueError("offset multiset must be symmetric about zero")
        mean = sum(p * lvl for p, lvl in zip(self.prob_fractions, self.levels))
        if mean != 0:
            raise ValueError(f"mixture mean must be zero, got {mean}")

    @property
    def count(self):
        return len(self.levels)


def _build_mixture(summands, c1, sigma2_wd):
    levels = tuple(summands - 2 * s for s in range(summands + 1))
    fractions = tuple(Fraction(math.comb(summands, s), 2**summands) for s in range(summands + 1))
    amp = c1 * math.sqrt(sigma2_wd / 2.0)
    offsets = amp * np.array(levels, dtype=np.float64)
    probs = np.array([float(f) for f in fractions])
    return MixtureSpec(offsets=offsets, probs=probs, levels=levels, prob_fractions=fractions)


def mixture_spec(c1, sigma2_wd):
    """Per-axis offset mixture conditioned on the probed symbol.

    The residue-class average over the ``1/c1 - 1`` co-class symbols takes
    ``1/c1`` values ``c1 * sqrt(sigma2_wd/2) * (1/c1 - 2s - 1)`` with weights
    ``C(1/c1 - 1, s) / 2^(1/c1 - 1)``.
    """
    q = round(1.0 / c1)
    if abs(q * c1 - 1.0) > 1e-9 or q < 1:
        raise ValueError(f"1/c1 must be a positive integer, got c1={c1}")
    if q == 1:
        warnings.warn(
            "1/c1 = 1 leaves a single zero offset: the distortion removes "
            "all data and the mixture is degenerate",
            stacklevel=2,
        )
    return _build_mixture(q - 1, c1, sigma2_wd)


def class_mean_mixture(c1, sigma2_wd):
    """Unconditional per-axis mixture of the full residue-class average.

    Includes the probed symbol itself, hence ``1/c1 + 1`` components with
    weights ``C(1/c1, s) / 2^(1/c1)``.
    """
    q = round(1.0 / c1)
    if abs(q * c1 - 1.0) > 1e-9 or q < 1:
        raise ValueError(f"1/c1 must be a positive integer, got c1={c1}")
    return _build_mixture(q, c1, sigma2_wd)


def gamma_pdf(x, m_rx, k_tx, delta):
    """Density of the post-detection SNR: Gamma(shape ``m-k+1``, rate ``k*delta``).

    This is the weighted chi-square law with ``2(m - k + 1)`` degrees of
    freedom; negative arguments return 0.
    """
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    if m_rx < k_tx:
        raise ValueError(f"need m >= k, got k={k_tx}, m={m_rx}")
    shape = m_rx - k_tx + 1
    rate = k_tx * delta
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(
        shape * np.log(rate)
        + (shape - 1) * np.log(x[pos])
        - rate * x[pos]
        - special.gammaln(shape)
    )
    if shape == 1:
        out[x == 0] = rate
    return out if out.ndim else float(out)


def cf_theory_tdmt(z, variance):
    """Characteristic function ``exp(-variance |z|^2 / 4)`` of the limit law.

    ``variance`` is the full complex-noise variance, i.e.
    ``sigma2_wt * delta_t * [(H^H H)^{-1}]_{ii}`` conditioned on the channel.
    """
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    z = np.asarray(z, dtype=np.complex128)
    out = np.exp(-variance * np.abs(z) ** 2 / 4.0)
    return out if out.ndim else complex(out)


def cf_theory_ddst(z, mixture: MixtureSpec, variance):
    """Gaussian-mixture characteristic function of the superimposed residual.

    The real and imaginary offset axes carry independent copies of
    ``mixture``, so the discrete part factorises into the product of two
    one-dimensional mixture CFs.
    """
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    z = np.asarray(z, dtype=np.complex128)
    zr = np.multiply.outer(z.real, mixture.offsets)
    zi = np.multiply.outer(z.imag, mixture.offsets)
    factor_re = np.exp(1j * zr) @ mixture.probs
    factor_im = np.exp(1j * zi) @ mixture.probs
    out = factor_re * factor_im * np.exp(-variance * np.abs(z) ** 2 / 4.0)
    return out if out.ndim else complex(out)
