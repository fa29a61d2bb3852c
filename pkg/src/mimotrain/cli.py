"""Command-line front end reproducing the link-level experiments.

Subcommands
-----------
theory      closed-form BER curves over an SNR grid
simulate    Monte Carlo BER next to the closed forms
sweep-c1    BER versus the load ratio c1 = k/n at fixed SNR
required-r  smallest pilot length meeting a target BER, per SNR
alloc       closed-form power splits and their limit ratios
validate    numerical validation of the asymptotic building blocks

All outputs are deterministic given the effective config (including the
seed): CSV files are byte-identical across re-runs and worker counts.  The
total transmit budget is normalised to ``sigma2_t = 1`` so that
``SNR = 1 / sigma2_v``.  Every Monte Carlo point uses the master seed plus a
fixed point-index offset, so points are independent but reproducible.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .linalg import pinv, sample_complex_gaussian, stream_rng, taylor_pinv
from .model import PowerConfig, SystemDims
from .montecarlo import (
    TrialPlan,
    bits_per_frame,
    cf_distance,
    default_z_grid,
    empirical_noise_samples,
    estimate_ber,
    rmt_decay,
)
from .power import (
    grid_search_delta,
    make_power_config,
    optimal_power_ddst,
    optimal_power_tdmt,
    power_ratio_limits,
)
from .theory import (
    ber_ddst_theory_from_delta,
    ber_tdmt_highsnr,
    ber_tdmt_theory_from_delta,
    cf_theory_ddst,
    cf_theory_tdmt,
    class_mean_mixture,
    ddst_floor,
    delta_d,
    delta_t,
    j_function,
    j_function_quadrature,
    mixture_spec,
)

SEED_ENV = "MIMOTRAIN_SEED"
_POINT_SEED_STRIDE = 1_000_003

DEFAULTS = {
    "k": 2,
    "m": 4,
    "n": 32,
    "n1": 2,
    "snr_db_start": 0.0,
    "snr_db_stop": 20.0,
    "snr_db_step": 2.0,
    "snr_db": 15.0,
    "scheme": "both",
    "bits": 1_000_000,
    "seed": None,
    "power": "optimal",
    "sigma2_w": None,
    "sigma2_p": None,
    "target_ber": 1e-2,
    "out": "-",
    "format": "csv",
    "workers": 1,
    "c1_list": "0.01,0.02,0.03125,0.0625,0.125,0.25,0.5",
    "verify": False,
    "reps": 200,
    "draws": 200_000,
}

COLUMNS = {
    "theory": ["snr_db", "scheme", "delta", "ber_theory", "ber_highsnr", "ber_floor"],
    "simulate": [
        "snr_db",
        "scheme",
        "ber_empirical",
        "ci_low",
        "ci_high",
        "ber_theory",
        "total_bits",
        "seed",
    ],
    "sweep-c1": ["c1", "n", "ber_tdmt_theory", "ber_ddst_theory", "ber_tdmt_emp", "ber_ddst_emp"],
    "required-r": ["snr_db", "scheme", "feasible", "n1_min", "r"],
    "alloc": [
        "scheme",
        "snr_db",
        "sigma2_w",
        "sigma2_p",
        "delta",
        "ratio",
        "highsnr_ratio",
        "large_system_ratio",
    ],
}


class ConfigError(ValueError):
    pass


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def _write_csv(stream, columns, rows):
    stream.write(",".join(columns) + "\n")
    for row in rows:
        stream.write(",".join(_fmt(row[c]) for c in columns) + "\n")


def _emit(command, config, rows, extra=None):
    payload_rows = rows
    out = config["out"]
    if config["format"] == "json":
        payload = {"command": command, "config": config, "rows": payload_rows}
        if extra:
            payload.update(extra)
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        import io

        buf = io.StringIO()
        _write_csv(buf, COLUMNS[command], rows)
        text = buf.getvalue()
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _snr_grid(config):
    start, stop, step = config["snr_db_start"], config["snr_db_stop"], config["snr_db_step"]
    if step <= 0:
        raise ConfigError("need snr-db-step > 0")
    grid = []
    snr = start
    while snr <= stop + 1e-9:
        grid.append(round(snr, 12))
        snr += step
    if not grid:
        raise ConfigError("empty SNR grid")
    return grid


def _schemes(config):
    if config["scheme"] == "both":
        return ["tdmt", "ddst"]
    return [config["scheme"]]


def _dims(config):
    try:
        return SystemDims(k=config["k"], m=config["m"], n=config["n"], n1=config["n1"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _noise_power(snr_db):
    return 10.0 ** (-snr_db / 10.0)


def _resolve_power(config, dims, sigma2_v):
    """Optimal per-scheme splits, or the user's explicit split (validated)."""
    if config["power"] == "optimal":
        return make_power_config(dims, 1.0, sigma2_v)
    if config["scheme"] == "both":
        raise ConfigError("explicit power mode needs --scheme tdmt or --scheme ddst")
    w, p = config["sigma2_w"], config["sigma2_p"]
    if w is None or p is None:
        raise ConfigError("explicit power mode needs --sigma2-w and --sigma2-p")
    if config["scheme"] == "tdmt":
        gap = dims.n1 * p + dims.n2 * w - dims.n * 1.0
        if abs(gap) > 1e-6 * dims.n:
            raise ConfigError(f"explicit powers violate the budget by {gap:.3e}")
        base = make_power_config(dims, 1.0, sigma2_v)
        return PowerConfig(
            sigma2_pt=p,
            sigma2_wt=w,
            sigma2_pd=base.sigma2_pd,
            sigma2_wd=base.sigma2_wd,
            sigma2_v=sigma2_v,
            sigma2_t=1.0,
        )
    gap = p + (1.0 - dims.c1) * w - 1.0
    if abs(gap) > 1e-6:
        raise ConfigError(f"explicit powers violate the budget by {gap:.3e}")
    base = make_power_config(dims, 1.0, sigma2_v)
    return PowerConfig(
        sigma2_pt=base.sigma2_pt,
        sigma2_wt=base.sigma2_wt,
        sigma2_pd=p,
        sigma2_wd=w,
        sigma2_v=sigma2_v,
        sigma2_t=1.0,
    )


def cmd_theory(config):
    dims = _dims(config)
    rows = []
    for snr_db in _snr_grid(config):
        sigma2_v = _noise_power(snr_db)
        power = _resolve_power(config, dims, sigma2_v)
        for scheme in _schemes(config):
            if scheme == "tdmt":
                delta = delta_t(dims, power)
                rows.append(
                    {
                        "snr_db": snr_db,
                        "scheme": scheme,
                        "delta": delta,
                        "ber_theory": ber_tdmt_theory_from_delta(delta, dims.k, dims.m),
                        "ber_highsnr": ber_tdmt_highsnr(dims, power),
                        "ber_floor": 0.0,
                    }
                )
            else:
                delta = delta_d(dims, power)
                floor = ddst_floor(dims.c1)
                rows.append(
                    {
                        "snr_db": snr_db,
                        "scheme": scheme,
                        "delta": delta,
                        "ber_theory": ber_ddst_theory_from_delta(delta, dims.k, dims.m, dims.c1),
                        "ber_highsnr": floor,
                        "ber_floor": floor,
                    }
                )
    _emit("theory", config, rows)
    return 0


def _simulate_point(scheme, dims, power, bits, seed, workers):
    n_frames = max(1, math.ceil(bits / bits_per_frame(scheme, dims)))
    plan = TrialPlan(scheme, dims, power, n_frames, seed)
    return estimate_ber(plan, workers=workers)


def cmd_simulate(config):
    dims = _dims(config)
    seed = config["seed"]
    rows = []
    point = 0
    for snr_db in _snr_grid(config):
        sigma2_v = _noise_power(snr_db)
        power = _resolve_power(config, dims, sigma2_v)
        for scheme in _schemes(config):
            point_seed = seed + _POINT_SEED_STRIDE * point
            point += 1
            est = _simulate_point(scheme, dims, power, config["bits"], point_seed, config["workers"])
            if scheme == "tdmt":
                theory = ber_tdmt_theory_from_delta(delta_t(dims, power), dims.k, dims.m)
            else:
                theory = ber_ddst_theory_from_delta(delta_d(dims, power), dims.k, dims.m, dims.c1)
            rows.append(
                {
                    "snr_db": snr_db,
                    "scheme": scheme,
                    "ber_empirical": est.ber,
                    "ci_low": est.ci_low,
                    "ci_high": est.ci_high,
                    "ber_theory": theory,
                    "total_bits": est.total_bits,
                    "seed": point_seed,
                }
            )
    _emit("simulate", config, rows)
    return 0


def cmd_sweep_c1(config):
    base = _dims(config)
    k = base.k
    seed = config["seed"]
    rows = []
    point = 0
    for text in config["c1_list"].split(","):
        c1 = float(text)
        n_exact = k / c1
        n = round(n_exact)
        if abs(n - n_exact) > 1e-9 or n % k != 0 or n <= config["n1"]:
            print(f"warning: skipping c1={c1}: n=k/c1 is not an admissible block length", file=sys.stderr)
            continue
        dims = SystemDims(k=k, m=base.m, n=n, n1=config["n1"])
        sigma2_v = _noise_power(config["snr_db"])
        power = _resolve_power(config, dims, sigma2_v)
        row = {
            "c1": c1,
            "n": n,
            "ber_tdmt_theory": ber_tdmt_theory_from_delta(delta_t(dims, power), k, dims.m),
            "ber_ddst_theory": ber_ddst_theory_from_delta(delta_d(dims, power), k, dims.m, dims.c1),
        }
        for scheme, col in (("tdmt", "ber_tdmt_emp"), ("ddst", "ber_ddst_emp")):
            est = _simulate_point(
                scheme, dims, power, config["bits"], seed + _POINT_SEED_STRIDE * point, config["workers"]
            )
            point += 1
            row[col] = est.ber
        rows.append(row)
    _emit("sweep-c1", config, rows)
    return 0


def cmd_required_r(config):
    base = _dims(config)
    target = config["target_ber"]
    rows = []
    for snr_db in _snr_grid(config):
        sigma2_v = _noise_power(snr_db)
        n1_min = None
        for n1 in range(base.k, base.n):
            dims = SystemDims(k=base.k, m=base.m, n=base.n, n1=n1)
            alloc = optimal_power_tdmt(dims, 1.0, sigma2_v)
            ber = ber_tdmt_theory_from_delta(alloc.delta_value, dims.k, dims.m)
            if ber <= target:
                n1_min = n1
                break
        rows.append(
            {
                "snr_db": snr_db,
                "scheme": "tdmt",
                "feasible": n1_min is not None,
                "n1_min": n1_min,
                "r": None if n1_min is None else (base.n - n1_min) / n1_min,
            }
        )
        alloc_d = optimal_power_ddst(base, 1.0, sigma2_v)
        ber_d = ber_ddst_theory_from_delta(alloc_d.delta_value, base.k, base.m, base.c1)
        rows.append(
            {
                "snr_db": snr_db,
                "scheme": "ddst",
                "feasible": ber_d <= target,
                "n1_min": None,
                "r": None,
            }
        )
    _emit("required-r", config, rows)
    return 0


def cmd_alloc(config):
    dims = _dims(config)
    rows = []
    for scheme in _schemes(config):
        limits = power_ratio_limits(scheme, dims)
        for snr_db in _snr_grid(config):
            sigma2_v = _noise_power(snr_db)
            alloc = (optimal_power_tdmt if scheme == "tdmt" else optimal_power_ddst)(
                dims, 1.0, sigma2_v
            )
            if config["verify"]:
                oracle = grid_search_delta(scheme, dims, 1.0, sigma2_v, 1e-6)
                for closed, numeric in ((alloc.sigma2_w, oracle.sigma2_w), (alloc.sigma2_p, oracle.sigma2_p)):
                    if abs(closed - numeric) > 1e-3 * abs(closed):
                        raise ConfigError(
                            f"closed-form split disagrees with the grid oracle at "
                            f"{scheme}, {snr_db} dB: {closed} vs {numeric}"
                        )
            rows.append(
                {
                    "scheme": scheme,
                    "snr_db": snr_db,
                    "sigma2_w": alloc.sigma2_w,
                    "sigma2_p": alloc.sigma2_p,
                    "delta": alloc.delta_value,
                    "ratio": alloc.sigma2_w / alloc.sigma2_p,
                    "highsnr_ratio": limits[0],
                    "large_system_ratio": limits[1],
                }
            )
    _emit("alloc", config, rows)
    return 0


def _check(name, value, tolerance, passed, **extra):
    entry = {"name": name, "value": value, "tolerance": tolerance, "passed": bool(passed)}
    entry.update(extra)
    return entry


def _taylor_slope(seed):
    rng = stream_rng(seed, 101)
    h = sample_complex_gaussian(8, 4, 1.0, rng)
    direction = sample_complex_gaussian(8, 4, 1.0, rng)
    direction /= np.linalg.norm(direction)
    epsilons = [1e-2, 1e-3, 1e-4, 1e-5]
    errors = []
    for eps in epsilons:
        exact = pinv(h + eps * direction)
        approx = taylor_pinv(h, eps * direction)
        errors.append(np.linalg.norm(exact - approx))
    slope, _ = np.polyfit(np.log(epsilons), np.log(errors), 1)
    return float(slope)


def _j_quadrature_gap():
    gap = 0.0
    for m in range(1, 7):
        for a in (0.1, 1.0, 10.0):
            for b in (0.0, 0.5, 1.0, 4.0):
                gap = max(gap, abs(j_function(m, a, b) - j_function_quadrature(m, a, b)))
    return gap


def _mixture_vs_enumeration():
    """Largest L1 gap between the mixture weights and brute-force enumeration."""
    worst = Fraction(0)
    for q in (2, 3, 4, 8, 16):
        spec = mixture_spec(1.0 / q, 1.0)
        counts = {}
        for signs in itertools.product((-1, 1), repeat=q - 1):
            level = sum(signs)
            counts[level] = counts.get(level, 0) + 1
        total = 2 ** (q - 1)
        enum = {level: Fraction(c, total) for level, c in counts.items()}
        got = {}
        for level, frac in zip(spec.levels, spec.prob_fractions):
            got[level] = got.get(level, Fraction(0)) + frac
        keys = set(enum) | set(got)
        worst = max(worst, sum(abs(enum.get(x, Fraction(0)) - got.get(x, Fraction(0))) for x in keys))
    return float(worst)


def _cf_checks(seed, draws):
    checks = []
    # Gaussian limit of the time-multiplexed residual at moderately large dims.
    dims = SystemDims(k=8, m=16, n=256, n1=64)
    sigma2_v = _noise_power(15.0)
    power = make_power_config(dims, 1.0, sigma2_v)
    h = sample_complex_gaussian(dims.m, dims.k, 1.0 / dims.k, stream_rng(seed, 7))
    b_ii = float(np.linalg.inv(h.conj().T @ h).real[0, 0])
    variance = power.sigma2_wt * delta_t(dims, power) * b_ii
    samples = empirical_noise_samples("tdmt", dims, power, h, draws, seed + 1)
    grid = default_z_grid(radius=4.0, points=9)
    dist = cf_distance(samples, lambda z: cf_theory_tdmt(z, variance), grid)
    checks.append(_check("cf_tdmt_gaussian", dist, 0.02, dist < 0.02))

    # Mixture vs plain Gaussian for the superimposed residual at small dims.
    dims_d = SystemDims(k=4, m=8, n=16, n1=4)
    power_d = make_power_config(dims_d, 1.0, _noise_power(15.0))
    h_d = sample_complex_gaussian(dims_d.m, dims_d.k, 1.0 / dims_d.k, stream_rng(seed, 8))
    b_ii = float(np.linalg.inv(h_d.conj().T @ h_d).real[0, 0])
    variance_d = power_d.sigma2_wd * delta_d(dims_d, power_d) * b_ii
    mix = class_mean_mixture(dims_d.c1, power_d.sigma2_wd)
    samples_d = empirical_noise_samples("ddst", dims_d, power_d, h_d, draws, seed + 2)
    dist_mix = cf_distance(samples_d, lambda z: cf_theory_ddst(z, mix, variance_d), grid)
    total_var = variance_d + 2.0 * float(np.dot(mix.probs, mix.offsets**2))
    dist_gauss = cf_distance(samples_d, lambda z: cf_theory_tdmt(z, total_var), grid)
    ratio = dist_gauss / dist_mix
    checks.append(_check("cf_ddst_mixture", dist_mix, 0.05, dist_mix < 0.05))
    checks.append(
        _check("cf_ddst_model_selection", ratio, 3.0, ratio >= 3.0, comparison="ratio >= tolerance")
    )
    return checks


def cmd_validate(config):
    seed = config["seed"]
    checks = []
    decay = rmt_decay(config["k"] if config["k"] != DEFAULTS["k"] else 64,
                      config["m"] if config["m"] != DEFAULTS["m"] else 128,
                      n_reps=config["reps"], seed=seed)
    for name, entry in decay["base"].items():
        checks.append(_check(f"rmt_{name}", entry["value"], entry["tolerance"], entry["passed"]))
    for name, entry in decay["ratios"].items():
        checks.append(
            _check(f"rmt_{name}_decay", entry["ratio"], entry["bound"], entry["passed"],
                   comparison="ratio < tolerance")
        )
    slope = _taylor_slope(seed)
    checks.append(_check("taylor_pinv_slope", slope, [1.9, 2.1], 1.9 <= slope <= 2.1))
    gap = _j_quadrature_gap()
    checks.append(_check("j_function_quadrature", gap, 1e-8, gap <= 1e-8))
    mix_gap = _mixture_vs_enumeration()
    checks.append(_check("mixture_enumeration", mix_gap, 0.0, mix_gap == 0.0))
    checks.extend(_cf_checks(seed, config["draws"]))

    passed = all(c["passed"] for c in checks)
    payload = {"command": "validate", "config": config, "checks": checks, "passed": passed}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if config["out"] == "-":
        sys.stdout.write(text)
    else:
        with open(config["out"], "w", newline="") as fh:
            fh.write(text)
    return 0 if passed else 1


def _add_common(parser):
    parser.add_argument("--config", help="JSON file with default values for any flag")
    parser.add_argument("--k", type=int, help="transmit antennas")
    parser.add_argument("--m", type=int, help="receive antennas")
    parser.add_argument("--n", type=int, help="block length")
    parser.add_argument("--n1", type=int, help="pilot length (time-multiplexed)")
    parser.add_argument("--snr-db-start", type=float, dest="snr_db_start")
    parser.add_argument("--snr-db-stop", type=float, dest="snr_db_stop")
    parser.add_argument("--snr-db-step", type=float, dest="snr_db_step")
    parser.add_argument("--scheme", choices=["tdmt", "ddst", "both"])
    parser.add_argument("--bits", type=int, help="data bits per Monte Carlo point")
    parser.add_argument("--seed", type=int, help=f"master seed (default: ${SEED_ENV} or 0)")
    parser.add_argument("--power", choices=["optimal", "explicit"])
    parser.add_argument("--sigma2-w", type=float, dest="sigma2_w", help="explicit data power")
    parser.add_argument("--sigma2-p", type=float, dest="sigma2_p", help="explicit pilot power")
    parser.add_argument("--target-ber", type=float, dest="target_ber")
    parser.add_argument("--out", help="output path, '-' for stdout")
    parser.add_argument("--format", choices=["csv", "json"])
    parser.add_argument("--workers", type=int, help="parallel workers for Monte Carlo")
    parser.add_argument("--print-config", action="store_true", dest="print_config",
                        help="print the effective config as JSON and exit")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mimotrain",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"The environment variable {SEED_ENV} supplies the default seed "
               "when --seed is absent.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("theory", cmd_theory),
        ("simulate", cmd_simulate),
        ("sweep-c1", cmd_sweep_c1),
        ("required-r", cmd_required_r),
        ("alloc", cmd_alloc),
        ("validate", cmd_validate),
    ):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "sweep-c1":
            p.add_argument("--snr-db", type=float, dest="snr_db", help="fixed SNR for the sweep")
            p.add_argument("--c1-list", dest="c1_list", help="comma-separated load ratios")
        if name == "alloc":
            p.add_argument("--verify", action="store_true",
                           help="cross-check the closed forms against the grid oracle")
        if name == "validate":
            p.add_argument("--reps", type=int, help="repetitions for the random-matrix checks")
            p.add_argument("--draws", type=int, help="draws for the CF checks")
        p.set_defaults(func=fn)
    return parser


def effective_config(args):
    config = dict(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config.update(loaded)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            config[key] = value
    if config["seed"] is None:
        env = os.environ.get(SEED_ENV)
        config["seed"] = int(env) if env else 0
    if config["workers"] < 1:
        raise ConfigError("need workers >= 1")
    if config["bits"] < 1:
        raise ConfigError("need bits >= 1")
    return config


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = effective_config(args)
        if args.print_config:
            sys.stdout.write(json.dumps(config, indent=2, sort_keys=True) + "\n")
            return 0
        return args.func(config)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
