"""Superimposed training chain: distorted data plus pilots in every symbol.

The transmitted block is ``X = W (I - J) + P`` where ``J`` averages each
residue class mod ``k``.  Because the pilot rows are ``k``-periodic,
``(I - J)`` annihilates them at the receiver, which cancels the training
contribution before channel inversion; the price is that the data loses its
class mean, a distortion no receiver step can undo.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SingularMatrixError, pinv, regularized_pinv, sample_complex_gaussian
from .model import (
    PowerConfig,
    SystemDims,
    apply_distortion,
    ddst_pilot,
    qpsk_demodulate,
    qpsk_modulate,
    random_bits,
)

__all__ = [
    "DdstFrameResult",
    "transmit_ddst",
    "ls_estimate_ddst",
    "mse_theory_ddst",
    "zf_detect_ddst",
    "run_frame_ddst",
]


@dataclass(frozen=True, eq=False)
class DdstFrameResult:
    """One simulated block of the superimposed scheme."""

    h_hat: np.ndarray
    w_hat: np.ndarray
    delta_w: np.ndarray
    bit_errors: int
    total_bits: int
    degenerate: bool


def transmit_ddst(w_d, p_d, k):
    """Distorted data plus pilot: ``w_d (I - J) + p_d``."""
    w_d = np.asarray(w_d)
    p_d = np.asarray(p_d)
    if w_d.shape != p_d.shape:
        raise ValueError(f"shape mismatch: data {w_d.shape} vs pilot {p_d.shape}")
    return apply_distortion(w_d, k) + p_d


def ls_estimate_ddst(y, p_d):
    """LS estimate ``Y P^H (P P^H)^{-1}``; data-independent by orthogonality."""
    gram = p_d @ p_d.conj().T
    try:
        return np.linalg.solve(gram.T, (y @ p_d.conj().T).T).T
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("pilot Gram is singular") from exc


def mse_theory_ddst(dims: SystemDims, power: PowerConfig):
    """Estimation MSE ``k m sigma2_v / (n sigma2_pd)``."""
    if power.sigma2_pd <= 0:
        raise ValueError("pilot power must be > 0")
    return dims.k * dims.m * power.sigma2_v / (dims.n * power.sigma2_pd)


def zf_detect_ddst(h_hat, y, k):
    """Training cancellation then zero forcing: ``pinv(h_hat) @ y (I - J)``."""
    return pinv(h_hat) @ apply_distortion(y, k)


def run_frame_ddst(dims: SystemDims, power: PowerConfig, rng) -> DdstFrameResult:
    """Simulate one superimposed block end to end.

    All ``2 k n`` data bits count toward the error rate: the whole block
    carries (distorted) data.  Rank-deficient estimates are handled as in the
    time-multiplexed chain.
    """
    p_d = ddst_pilot(dims.k, dims.n, power.sigma2_pd)
    h = sample_complex_gaussian(dims.m, dims.k, 1.0 / dims.k, rng)
    bits = random_bits(rng, 2 * dims.k * dims.n)
    w = qpsk_modulate(bits, dims.k, dims.n, power.sigma2_wd)
    v = sample_complex_gaussian(dims.m, dims.n, power.sigma2_v, rng)

    y = h @ transmit_ddst(w, p_d, dims.k) + v
    h_hat = ls_estimate_ddst(y, p_d)
    inverse, degenerate = regularized_pinv(h_hat)
    w_hat = inverse @ apply_distortion(y, dims.k)
    bit_errors = int(np.count_nonzero(qpsk_demodulate(w_hat) != bits))
    return DdstFrameResult(
        h_hat=h_hat,
        w_hat=w_hat,
        delta_w=w_hat - w,
        bit_errors=bit_errors,
        total_bits=bits.size,
        degenerate=degenerate,
    )
