"""Time-multiplexed training chain: pilot phase, LS estimation, ZF detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SingularMatrixError, pinv, regularized_pinv, sample_complex_gaussian
from .model import PowerConfig, SystemDims, qpsk_demodulate, qpsk_modulate, random_bits, tdmt_pilot

__all__ = [
    "TdmtFrameResult",
    "ls_estimate_tdmt",
    "mse_theory_tdmt",
    "zf_detect_tdmt",
    "run_frame_tdmt",
]


@dataclass(frozen=True, eq=False)
class TdmtFrameResult:
    """One simulated block: channel estimate, soft symbols, exact residual."""

    h_hat: np.ndarray
    w_hat: np.ndarray
    delta_w: np.ndarray
    bit_errors: int
    total_bits: int
    degenerate: bool


def ls_estimate_tdmt(y1, p_t):
    """Least-squares channel estimate ``Y1 P^H (P P^H)^{-1}``."""
    gram = p_t @ p_t.conj().T
    try:
        return np.linalg.solve(gram.T, (y1 @ p_t.conj().T).T).T
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("pilot Gram is singular") from exc


def mse_theory_tdmt(dims: SystemDims, power: PowerConfig):
    """Estimation MSE ``k m sigma2_v / (n1 sigma2_pt)`` for orthogonal pilots."""
    if power.sigma2_pt <= 0:
        raise ValueError("pilot power must be > 0")
    return dims.k * dims.m * power.sigma2_v / (dims.n1 * power.sigma2_pt)


def zf_detect_tdmt(h_hat, y2):
    """Zero-forcing detection ``pinv(h_hat) @ y2`` with the exact pseudo-inverse."""
    return pinv(h_hat) @ y2


def run_frame_tdmt(dims: SystemDims, power: PowerConfig, rng) -> TdmtFrameResult:
    """Simulate one block: draw channel, noise and data, then detect.

    The channel is redrawn per frame (block fading).  A numerically
    rank-deficient estimate is flagged but still produces bit decisions via
    the regularized pseudo-inverse, so it stays in the error count.
    """
    p_t = tdmt_pilot(dims.k, dims.n1, power.sigma2_pt)
    h = sample_complex_gaussian(dims.m, dims.k, 1.0 / dims.k, rng)
    bits = random_bits(rng, 2 * dims.k * dims.n2)
    w = qpsk_modulate(bits, dims.k, dims.n2, power.sigma2_wt)
    v1 = sample_complex_gaussian(dims.m, dims.n1, power.sigma2_v, rng)
    v2 = sample_complex_gaussian(dims.m, dims.n2, power.sigma2_v, rng)

    y1 = h @ p_t + v1
    y2 = h @ w + v2
    h_hat = ls_estimate_tdmt(y1, p_t)
    inverse, degenerate = regularized_pinv(h_hat)
    w_hat = inverse @ y2
    bit_errors = int(np.count_nonzero(qpsk_demodulate(w_hat) != bits))
    return TdmtFrameResult(
        h_hat=h_hat,
        w_hat=w_hat,
        delta_w=w_hat - w,
        bit_errors=bit_errors,
        total_bits=bits.size,
        degenerate=degenerate,
    )
