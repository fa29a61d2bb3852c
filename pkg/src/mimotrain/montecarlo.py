"""Deterministic Monte Carlo BER estimation and asymptotic-claim validators.

Every estimate is a pure function of its plan: frame ``i`` draws all of its
randomness from the counter-based stream ``(master_seed, i)``, and frame
results are merged as exact integer counts, so the worker count and schedule
cannot change the output.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ddst import run_frame_ddst
from .linalg import stream_rng
from .model import PowerConfig, SystemDims
from .tdmt import run_frame_tdmt

__all__ = [
    "TrialPlan",
    "BerEstimate",
    "bits_per_frame",
    "wilson_interval",
    "estimate_ber",
    "empirical_noise_samples",
    "default_z_grid",
    "empirical_cf",
    "cf_distance",
    "rmt_validators",
    "rmt_decay",
]

_Z95 = 1.959963984540054
_CHUNK = 20_000


@dataclass(frozen=True)
class TrialPlan:
    """Everything that determines a BER estimate, including the seed."""

    scheme: str
    dims: SystemDims
    power: PowerConfig
    n_frames: int
    master_seed: int

    def __post_init__(self):
        if self.scheme not in ("tdmt", "ddst"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.n_frames < 1:
            raise ValueError(f"need n_frames >= 1, got {self.n_frames}")


@dataclass(frozen=True)
class BerEstimate:
    """Exact error counts with a Wilson-score 95% interval."""

    bit_errors: int
    total_bits: int
    ber: float
    ci_low: float
    ci_high: float
    seed: int
    degenerate_frames: int


def bits_per_frame(scheme, dims: SystemDims) -> int:
    """Data bits carried by one block (the full block is data when superimposed)."""
    return 2 * dims.k * (dims.n2 if scheme == "tdmt" else dims.n)


def wilson_interval(errors, total, z=_Z95):
    """Wilson score interval; stays sane at very low error counts."""
    if total <= 0:
        raise ValueError("total must be > 0")
    p = errors / total
    denom = 1.0 + z * z / total
    center = (p + z * z / (2 * total)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total))
    return max(center - half, 0.0), min(center + half, 1.0)


def _frames_task(plan: TrialPlan, lo: int, hi: int):
    runner = run_frame_tdmt if plan.scheme == "tdmt" else run_frame_ddst
    errors = 0
    bits = 0
    degenerate = 0
    for i in range(lo, hi):
        result = runner(plan.dims, plan.power, stream_rng(plan.master_seed, i))
        errors += result.bit_errors
        bits += result.total_bits
        degenerate += result.degenerate
    return errors, bits, degenerate


def _task_star(args):
    return _frames_task(*args)


def estimate_ber(plan: TrialPlan, workers=1) -> BerEstimate:
    """Run ``plan.n_frames`` independent frames and aggregate exact counts.

    ``workers > 1`` fans chunks of frames out to a process pool; the result
    is bit-identical for any worker count because frame ``i`` owns stream
    ``(master_seed, i)`` and aggregation is integer addition.
    """
    n = plan.n_frames
    if workers <= 1:
        errors, bits, degenerate = _frames_task(plan, 0, n)
    else:
        chunk = max(1, math.ceil(n / (4 * workers)))
        tasks = [(plan, lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
        errors = bits = degenerate = 0
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for e, b, d in pool.map(_task_star, tasks):
                errors += e
                bits += b
                degenerate += d
    ci_low, ci_high = wilson_interval(errors, bits)
    return BerEstimate(
        bit_errors=errors,
        total_bits=bits,
        ber=errors / bits,
        ci_low=ci_low,
        ci_high=ci_high,
        seed=plan.master_seed,
        degenerate_frames=degenerate,
    )


def _qpsk_batch(rng, batch, k, sigma2_w):
    amp = math.sqrt(sigma2_w / 2.0)
    signs = 1.0 - 2.0 * rng.integers(0, 2, size=(batch, k, 2)).astype(np.float64)
    return amp * (signs[..., 0] + 1j * signs[..., 1])


def _gaussian_batch(rng, shape, variance):
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def empirical_noise_samples(
    scheme,
    dims: SystemDims,
    power: PowerConfig,
    fixed_h,
    n_draws,
    seed,
    probe=(0, 0),
    condition_symbol=None,
):
    """Post-processing noise ``(w_hat - w)[probe]`` for a fixed channel.

    The channel stays fixed while noise and data are redrawn ``n_draws``
    times through the exact receiver chain.  ``condition_symbol`` pins the
    transmitted symbol at the probed index, matching the conditional form of
    the limit laws.

    Orthogonal pilot rows make the LS estimation error exactly i.i.d.
    complex Gaussian (and, for the superimposed scheme, independent of the
    residual noise after training cancellation), so the error matrix is
    drawn directly instead of materialising the pilot-phase noise block.
    """
    h = np.asarray(fixed_h, dtype=np.complex128)
    if h.shape != (dims.m, dims.k):
        raise ValueError(f"fixed_h must be {dims.m}x{dims.k}, got {h.shape}")
    if np.linalg.matrix_rank(h) < dims.k:
        raise ValueError("fixed_h must have full column rank")
    i_probe, t_probe = probe
    rng = stream_rng(seed, 0)

    if scheme == "tdmt":
        err_var = power.sigma2_v / (dims.n1 * power.sigma2_pt)
        sigma2_w = power.sigma2_wt
        if not 0 <= t_probe < dims.n2:
            raise ValueError(f"probe time must be in [0, {dims.n2})")
    elif scheme == "ddst":
        err_var = power.sigma2_v / (dims.n * power.sigma2_pd)
        sigma2_w = power.sigma2_wd
        if not 0 <= t_probe < dims.n:
            raise ValueError(f"probe time must be in [0, {dims.n})")
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    if not 0 <= i_probe < dims.k:
        raise ValueError(f"probe antenna must be in [0, {dims.k})")

    out = np.empty(n_draws, dtype=np.complex128)
    done = 0
    q = dims.n // dims.k
    pos_in_class = t_probe // dims.k
    while done < n_draws:
        b = min(_CHUNK, n_draws - done)
        dh = _gaussian_batch(rng, (b, dims.m, dims.k), err_var)
        if scheme == "tdmt":
            w = _qpsk_batch(rng, b, dims.k, sigma2_w)
            if condition_symbol is not None:
                w[:, i_probe] = condition_symbol
            v = _gaussian_batch(rng, (b, dims.m), power.sigma2_v)
            sent = w[:, i_probe].copy()
            y = np.einsum("mk,bk->bm", h, w) + v
        else:
            w_class = _qpsk_batch(rng, b, dims.k * q, sigma2_w).reshape(b, dims.k, q)
            if condition_symbol is not None:
                w_class[:, i_probe, pos_in_class] = condition_symbol
            # training cancellation leaves V (e - J e) with variance (1 - c1) sigma2_v
            v = _gaussian_batch(rng, (b, dims.m), (1.0 - dims.c1) * power.sigma2_v)
            sent = w_class[:, :, pos_in_class].copy()
            centered = sent - w_class.mean(axis=2)
            y = np.einsum("mk,bk->bm", h, centered) + v
            sent = sent[:, i_probe]
        h_hat = h[None, :, :] + dh
        gram = np.einsum("bmi,bmj->bij", h_hat.conj(), h_hat)
        rhs = np.einsum("bmi,bm->bi", h_hat.conj(), y)
        w_hat = np.linalg.solve(gram, rhs)
        out[done : done + b] = w_hat[:, i_probe] - sent
        done += b
    return out


def default_z_grid(radius=4.0, points=9):
    """Cartesian grid of complex arguments with |Re|, |Im| <= radius."""
    axis = np.linspace(-radius, radius, points)
    re, im = np.meshgrid(axis, axis)
    return (re + 1j * im).ravel()


def empirical_cf(samples, z_grid):
    """Empirical characteristic function ``mean exp(j Re(z* x))`` on a grid."""
    samples = np.asarray(samples)
    z = np.asarray(z_grid)
    acc = np.zeros(z.shape, dtype=np.complex128)
    for lo in range(0, samples.size, _CHUNK):
        sub = samples[lo : lo + _CHUNK]
        phase = np.multiply.outer(z.real, sub.real) + np.multiply.outer(z.imag, sub.imag)
        acc += np.exp(1j * phase).sum(axis=-1)
    return acc / samples.size


def cf_distance(samples, cf_theory, z_grid):
    """Sup-norm distance between the empirical CF and a theoretical CF."""
    z = np.asarray(z_grid)
    if z.size == 0 or np.asarray(samples).size == 0:
        raise ValueError("need nonempty samples and grid")
    theory = cf_theory(z) if callable(cf_theory) else np.asarray(cf_theory)
    return float(np.max(np.abs(empirical_cf(samples, z) - theory)))


def _mean_square(values):
    return float(np.mean(np.square(values)))


def rmt_validators(k, m, n_reps=200, seed=0, tolerance=0.05):
    """Numerical checks of the random-matrix limits behind the BER formulas.

    For ``H`` with i.i.d. ``CN(0, 1/k)`` entries and ``B = (H^H H)^{-1}``,
    mean-squared residuals of four concentration statements are estimated:

    * ``quadratic_form``:    ``x^H A x / n - tr(A) / n`` for fixed diagonal
      ``A`` with entries in [0, 1] and ``n = k * m``;
    * ``inverse_sq_diagonal``: ``(B^2)_{ii} - c2/(c2-1) * B_{ii}^2``;
    * ``inverse_trace``:     ``tr(B)/k - 1/(c2-1)``;
    * ``inverse_diagonal``:  ``B_{ii} - 1/(c2-1)``.

    Each residual vanishes as the dimensions grow at fixed ``m/k``; the
    mean-squared form is what decays at a measurable 1/k-type rate (the
    signed means of the last two are exactly zero for Gaussian channels).
    """
    if not m > k >= 2:
        raise ValueError(f"need m > k >= 2, got k={k}, m={m}")
    rng = stream_rng(seed, 0)
    c2 = m / k
    limit = 1.0 / (c2 - 1.0)
    ratio = c2 / (c2 - 1.0)
    n_quad = k * m
    weights = rng.uniform(0.0, 1.0, size=n_quad)
    target = weights.mean()

    quad, inv_sq, trace, diag = [], [], [], []
    for _ in range(n_reps):
        x = _gaussian_batch(rng, (n_quad,), 1.0)
        quad.append(float(np.real(np.vdot(x, weights * x))) / n_quad - target)
        hmat = _gaussian_batch(rng, (m, k), 1.0 / k)
        b = np.linalg.inv(hmat.conj().T @ hmat)
        bdiag = b.diagonal().real
        b2diag = np.square(np.abs(b)).sum(axis=1)
        inv_sq.extend(b2diag - ratio * bdiag**2)
        trace.append(bdiag.sum() / k - limit)
        diag.extend(bdiag - limit)

    checks = {}
    for name, residuals in (
        ("quadratic_form", quad),
        ("inverse_sq_diagonal", inv_sq),
        ("inverse_trace", trace),
        ("inverse_diagonal", diag),
    ):
        arr = np.asarray(residuals, dtype=np.float64)
        value = _mean_square(arr)
        checks[name] = {
            "value": value,
            "mean_abs": float(np.mean(np.abs(arr))),
            "tolerance": tolerance,
            "passed": bool(value < tolerance),
        }
    return checks


def rmt_decay(k, m, n_reps=200, seed=0, tolerance=0.05, ratio_bound=0.8):
    """Residuals at ``(k, m)`` and ``(2k, 2m)`` plus their decay ratios."""
    base = rmt_validators(k, m, n_reps, seed, tolerance)
    doubled = rmt_validators(2 * k, 2 * m, n_reps, seed + 1, tolerance)
    ratios = {}
    passed = True
    for name in base:
        ratio = doubled[name]["value"] / base[name]["value"]
        ok = ratio < ratio_bound
        ratios[name] = {"ratio": ratio, "bound": ratio_bound, "passed": ok}
        passed = passed and ok and base[name]["passed"] and doubled[name]["passed"]
    return {"base": base, "doubled": doubled, "ratios": ratios, "passed": passed}
