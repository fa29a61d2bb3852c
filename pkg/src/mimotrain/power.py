"""Closed-form pilot/data power splits minimizing the error-variance parameter.

Both BER formulas are monotone increasing in their ``delta`` parameter, so
minimizing ``delta`` under the total-energy constraint minimizes the BER.
The constrained one-dimensional problems have closed-form solutions; a
golden-section oracle is kept alongside for validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import PowerConfig, SystemDims
from .theory import delta_d_from_ratios, delta_t_from_ratios

__all__ = [
    "AllocationResult",
    "optimal_power_tdmt",
    "optimal_power_tdmt_from_ratios",
    "optimal_power_ddst",
    "optimal_power_ddst_from_ratios",
    "power_ratio_limits",
    "grid_search_delta",
    "make_power_config",
]


@dataclass(frozen=True)
class AllocationResult:
    """A budget-feasible split and the ``delta`` value it achieves."""

    sigma2_w: float
    sigma2_p: float
    delta_value: float
    scheme: str


def _validate_regime(c2, sigma2_t, sigma2_v):
    if c2 <= 1:
        raise ValueError(f"need antenna ratio c2 > 1, got {c2}")
    if sigma2_t <= 0:
        raise ValueError(f"need sigma2_t > 0, got {sigma2_t}")
    if sigma2_v < 0:
        raise ValueError(f"need sigma2_v >= 0, got {sigma2_v}")


def optimal_power_tdmt_from_ratios(ctilde1, r, c2, sigma2_t, sigma2_v):
    """Optimal ``(sigma2_wt, sigma2_pt)`` for pilot load ``ctilde1 = k/n1``.

    With ``E = (1 + r) sigma2_t`` and ``g = sigma2_v (c2+1)/(c2-1)``:

    ``sigma2_wt = E sqrt(r (E + ctilde1 g)) / (r (A + B))``,
    ``sigma2_pt = E sqrt(ctilde1 (E + r g)) / (A + B)``,

    where ``A`` and ``B`` are the two square roots.  The split satisfies
    ``sigma2_pt + r sigma2_wt = E`` exactly; at ``sigma2_v = 0`` it reduces
    continuously to the high-SNR limit ratio.
    """
    _validate_regime(c2, sigma2_t, sigma2_v)
    if ctilde1 <= 0 or r <= 0:
        raise ValueError(f"need ctilde1 > 0 and r > 0, got {ctilde1}, {r}")
    energy = (1.0 + r) * sigma2_t
    g = sigma2_v * (c2 + 1.0) / (c2 - 1.0)
    a = math.sqrt(r * (energy + ctilde1 * g))
    b = math.sqrt(ctilde1 * (energy + r * g))
    sigma2_wt = energy * a / (r * (a + b))
    sigma2_pt = energy * b / (a + b)
    return sigma2_wt, sigma2_pt


def optimal_power_tdmt(dims: SystemDims, sigma2_t, sigma2_v) -> AllocationResult:
    """Closed-form optimum under ``n1 p + n2 w = n sigma2_t``."""
    ctilde1 = dims.k / dims.n1
    sigma2_wt, sigma2_pt = optimal_power_tdmt_from_ratios(
        ctilde1, dims.r, dims.c2, sigma2_t, sigma2_v
    )
    value = delta_t_from_ratios(ctilde1, dims.c2, sigma2_v, sigma2_pt, sigma2_wt)
    return AllocationResult(sigma2_wt, sigma2_pt, value, "tdmt")


def optimal_power_ddst_from_ratios(c1, c2, sigma2_t, sigma2_v):
    """Optimal ``(sigma2_wd, sigma2_pd)`` under ``p + (1 - c1) w = sigma2_t``.

    Same structure as the time-multiplexed split with the data-length weight
    ``r`` replaced by ``1 - c1``:

    ``A = sqrt((1-c1)(sigma2_t + c1 g))``,
    ``B = sqrt(c1 (sigma2_t + (1-c1) g))``,
    ``sigma2_wd = sigma2_t A / ((1-c1)(A+B))``, ``sigma2_pd = sigma2_t B / (A+B)``.
    """
    _validate_regime(c2, sigma2_t, sigma2_v)
    if not 0 < c1 < 1:
        raise ValueError(f"need 0 < c1 < 1, got {c1}")
    g = sigma2_v * (c2 + 1.0) / (c2 - 1.0)
    a = math.sqrt((1.0 - c1) * (sigma2_t + c1 * g))
    b = math.sqrt(c1 * (sigma2_t + (1.0 - c1) * g))
    sigma2_wd = sigma2_t * a / ((1.0 - c1) * (a + b))
    sigma2_pd = sigma2_t * b / (a + b)
    return sigma2_wd, sigma2_pd


def optimal_power_ddst(dims: SystemDims, sigma2_t, sigma2_v) -> AllocationResult:
    sigma2_wd, sigma2_pd = optimal_power_ddst_from_ratios(
        dims.c1, dims.c2, sigma2_t, sigma2_v
    )
    value = delta_d_from_ratios(dims.c1, dims.c2, sigma2_v, sigma2_pd, sigma2_wd)
    return AllocationResult(sigma2_wd, sigma2_pd, value, "ddst")


def power_ratio_limits(scheme, dims: SystemDims):
    """Limit-case data-to-pilot power ratios ``(high_snr, large_system)``.

    High SNR trades pilot length against pilot power so that the total
    training energy stays constant; in the nearly square-system limit both
    schemes put equal total energy on pilots and data.  The superimposed
    values additionally assume ``n >> k``.
    """
    if scheme == "tdmt":
        return dims.n1 / math.sqrt(dims.n2 * dims.k), dims.n1 / dims.n2
    if scheme == "ddst":
        return math.sqrt(dims.n / dims.k), 1.0
    raise ValueError(f"unknown scheme {scheme!r}")


def _golden_section(f, lo, hi, tol):
    """Minimize a unimodal ``f`` on ``[lo, hi]`` to within ``tol``."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = f(x2)
    x = 0.5 * (lo + hi)
    return x, f(x)


def grid_search_delta(scheme, dims: SystemDims, sigma2_t, sigma2_v, resolution=1e-5) -> AllocationResult:
    """Numerical argmin of ``delta`` along the budget line (test oracle only).

    Golden-section search over the data power at relative resolution
    ``resolution``; independent of the closed forms above.
    """
    _validate_regime(dims.c2, sigma2_t, sigma2_v)
    if sigma2_v == 0:
        raise ValueError("the oracle needs sigma2_v > 0; delta is identically 0 otherwise")
    if scheme == "tdmt":
        ctilde1 = dims.k / dims.n1
        energy = (1.0 + dims.r) * sigma2_t

        def objective(w):
            p = energy - dims.r * w
            return delta_t_from_ratios(ctilde1, dims.c2, sigma2_v, p, w)

        w_max = energy / dims.r
    elif scheme == "ddst":
        c1 = dims.c1

        def objective(w):
            p = sigma2_t - (1.0 - c1) * w
            return delta_d_from_ratios(c1, dims.c2, sigma2_v, p, w)

        w_max = sigma2_t / (1.0 - dims.c1)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    eps = 1e-12 * w_max
    w_opt, value = _golden_section(objective, eps, w_max - eps, resolution * w_max)
    if scheme == "tdmt":
        p_opt = (1.0 + dims.r) * sigma2_t - dims.r * w_opt
    else:
        p_opt = sigma2_t - (1.0 - dims.c1) * w_opt
    return AllocationResult(w_opt, p_opt, value, scheme)


def make_power_config(dims: SystemDims, sigma2_t, sigma2_v) -> PowerConfig:
    """Bundle the optimal splits of both schemes into one :class:`PowerConfig`."""
    tdmt = optimal_power_tdmt(dims, sigma2_t, sigma2_v)
    ddst = optimal_power_ddst(dims, sigma2_t, sigma2_v)
    return PowerConfig(
        sigma2_pt=tdmt.sigma2_p,
        sigma2_wt=tdmt.sigma2_w,
        sigma2_pd=ddst.sigma2_p,
        sigma2_wd=ddst.sigma2_w,
        sigma2_v=sigma2_v,
        sigma2_t=sigma2_t,
    )
