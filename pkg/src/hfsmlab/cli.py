"""Command-line orchestration: configuration, seeding, caching, artifacts.

Every run resolves its full parameter set (defaults, then config file, then
flags), writes it next to the outputs as config.txt, and stamps artifacts
with the short hash of that resolved configuration.  Reruns with identical
configuration and seed produce byte-identical artifacts at any thread count.
"""

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import analysis, coeffs, kernel, lepage, meyer, report, synth
from .errors import DomainError, NumericError, ParameterError, ResourceError

_EXIT_PARAMETER = 2
_EXIT_NUMERIC = 3
_EXIT_RESOURCE = 4

_SYNTH_KEYS = ("alpha", "hurst", "rho_tilde", "dt", "j_low", "j_high",
               "k_cut", "truncation", "eps")

_DEFAULTS = {
    "simulate": {
        "alpha": 1.5, "hurst": 0.5, "rho_tilde": 1.0, "dt": 2.0 ** -14,
        "j_low": -8, "j_high": 12, "k_cut": 16, "truncation": 10000,
        "eps": 0.5, "n_paths": 4, "csv_paths": 4, "keep_components": 0,
    },
    "coeffs": {
        "alpha": 1.5, "eps": 0.5, "j_max": 10, "rho": 2.0,
        "truncation": 10000, "n_draws": 16,
    },
    "modulus": {
        "alpha": 1.5, "hurst": 0.5, "rho_tilde": 1.0, "dt": 2.0 ** -13,
        "j_low": -8, "j_high": 12, "k_cut": 16, "truncation": 10000,
        "eps": 0.5, "n_paths": 64, "n_lo": 5, "n_hi": 12, "fbm_control": 0,
    },
    "lowerbound": {
        "alpha": 1.5, "hurst": 0.5, "rho_tilde": 16.0, "dt": 2.0 ** -9,
        "j_low": -8, "j_high": 7, "k_cut": 16, "truncation": 10000,
        "eps": 0.5, "n_paths": 128, "j_lo": 2, "j_hi": 8,
    },
    "kernel-table": {
        "alpha": 1.5, "hurst": 0.5, "grid_half_width": 64.0,
        "grid_step": 1.0 / 64.0,
    },
    "validate": {},
}

_INT_KEYS = {"j_low", "j_high", "k_cut", "truncation", "n_paths", "j_max",
             "n_draws", "n_lo", "n_hi", "j_lo", "j_hi", "csv_paths",
             "keep_components", "fbm_control"}


def _parse_value(key, raw):
    return int(raw) if key in _INT_KEYS else float(raw)


def read_config_file(path):
    values = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParameterError(f"malformed config line: {line!r}")
            key, raw = (part.strip() for part in line.split("=", 1))
            values[key] = raw
    return values


def resolve_config(command, file_values, flag_values, seed):
    """defaults < config file < explicit flags; returns (config, hash)."""
    resolved = dict(_DEFAULTS[command])
    for key, raw in file_values.items():
        if key == "seed":
            continue
        if key not in resolved:
            raise ParameterError(f"unknown config key {key!r} for {command}")
        resolved[key] = _parse_value(key, raw)
    for key, val in flag_values.items():
        if val is not None:
            resolved[key] = val
    resolved["seed"] = int(seed)
    canon = "".join(f"{k}={resolved[k]!r}\n" for k in sorted(resolved))
    cfg_hash = hashlib.sha256(canon.encode()).hexdigest()[:12]
    return resolved, cfg_hash


def write_config(resolved, cfg_hash, out_dir):
    path = os.path.join(out_dir, "config.txt")
    with open(path, "w", newline="\n") as fh:
        for key in sorted(resolved):
            fh.write(f"{key} = {resolved[key]!r}\n")
        fh.write(f"config_hash = {cfg_hash}\n")
    return path


def _synth_config(resolved):
    kwargs = {k: resolved[k] for k in _SYNTH_KEYS}
    kwargs["j_low"] = int(kwargs["j_low"])
    kwargs["j_high"] = int(kwargs["j_high"])
    kwargs["k_cut"] = int(kwargs["k_cut"])
    kwargs["truncation"] = int(kwargs["truncation"])
    return synth.SynthConfig(**kwargs)


def cmd_simulate(resolved, cfg_hash, out_dir, cache_dir, threads):
    cfg = _synth_config(resolved)
    table = kernel.cached_table(cfg.alpha, cfg.hurst, cache_dir=cache_dir)
    ens = synth.ensemble(cfg, int(resolved["n_paths"]), resolved["seed"],
                         kernel_table=table, threads=threads,
                         keep_components=bool(resolved["keep_components"]))
    synth.save_ensemble(ens, os.path.join(out_dir, "ensemble.bin"))
    n_csv = min(int(resolved["csv_paths"]), ens.n_paths)
    for i in range(n_csv):
        draw = lepage.draw_lepage(cfg.alpha, cfg.eps, cfg.truncation,
                                  resolved["seed"], draw_id=i)
        x, parts = synth.synth_path(draw, cfg, table)
        synth.write_path_csv(ens.t, x, parts,
                             os.path.join(out_dir, f"path_{i:05d}.csv"))
    return 0


def cmd_coeffs(resolved, cfg_hash, out_dir, cache_dir, threads):
    alpha = resolved["alpha"]
    eps = resolved["eps"]
    j_max = int(resolved["j_max"])
    rho = resolved["rho"]
    m = int(resolved["truncation"])
    n_draws = int(resolved["n_draws"])
    if n_draws < 1:
        raise ParameterError("n_draws must be >= 1")
    if j_max < 0 or rho <= 0:
        raise ParameterError("empty coefficient window")
    rows = []
    first_field = None
    for i in range(n_draws):
        draw = lepage.draw_lepage(alpha, eps, m, resolved["seed"], draw_id=i)
        fld = coeffs.coeff_field(draw, j_max, rho, M=m - 1)
        rows.append(fld.max_abs_by_level())
        if first_field is None:
            first_field = fld
    coeffs.write_coeff_csv(first_field, os.path.join(out_dir, "coeffs.csv"))
    slopes = coeffs.growth_slopes(rows)
    results = [report.make_result(
        law="coefficient-growth-polylog", target=1.0 / alpha,
        estimate=slopes["slope_loglog"], stderr=slopes["slope_se"],
        interval=(0.0, 1.0 / alpha + 0.5), seed=resolved["seed"],
        n_paths=n_draws, config_hash=cfg_hash)]
    report.write_report_json(
        os.path.join(out_dir, "growth.json"), results,
        extra={"dyadic_component": slopes["dyadic_component"],
               "pooled_max_by_level": list(map(float, slopes["pooled_max"]))})
    return 0


def cmd_modulus(resolved, cfg_hash, out_dir, cache_dir, threads):
    cfg = _synth_config(resolved)
    table = kernel.cached_table(cfg.alpha, cfg.hurst, cache_dir=cache_dir)
    ens = synth.ensemble(cfg, int(resolved["n_paths"]), resolved["seed"],
                         kernel_table=table, threads=threads)
    prof = analysis.modulus_profile(ens, cfg.hurst, cfg.alpha,
                                    n_range=(int(resolved["n_lo"]),
                                             int(resolved["n_hi"])))
    lo, hi = prof.verdicts["bracket"]
    results = [
        report.make_result(law="modulus-log-exponent", target=1.0 / cfg.alpha,
                           estimate=prof.gamma_hat, stderr=prof.gamma_se,
                           interval=(prof.gamma_hat - (hi - lo) / 2,
                                     prof.gamma_hat + (hi - lo) / 2),
                           seed=resolved["seed"], n_paths=prof.n_paths,
                           config_hash=cfg_hash),
        report.make_result(law="increment-scaling-exponent", target=cfg.hurst,
                           estimate=prof.hurst_hat, stderr=0.0,
                           interval=(prof.hurst_hat - 0.1, prof.hurst_hat + 0.1),
                           seed=resolved["seed"], n_paths=prof.n_paths,
                           config_hash=cfg_hash),
    ]
    extra = {
        "gamma_hat": prof.gamma_hat, "gamma_se": prof.gamma_se,
        "alpha_hat": prof.alpha_hat,
        "gamma_bracket": [lo, hi],
        "gamma_in_bracket": prof.verdicts["gamma_in_bracket"],
        "gamma_below_old_law": prof.verdicts["gamma_below_old_law"],
    }
    if int(resolved["fbm_control"]):
        paths = []
        for i in range(64):
            rng = np.random.default_rng(np.random.SeedSequence(
                entropy=int(resolved["seed"]), spawn_key=(9001, i)))
            t_f, x_f = analysis.fbm_davies_harte(2 ** 15, cfg.hurst, rng, span=2.0)
            paths.append(x_f)
        ctrl = analysis.modulus_profile((t_f, np.array(paths)), cfg.hurst, 2.0,
                                        n_range=(5, 12))
        extra["fbm_control_gamma"] = ctrl.gamma_hat
    report.write_report_json(os.path.join(out_dir, "modulus.json"), results,
                             extra=extra)
    report.write_lag_csv(os.path.join(out_dir, "lag_suprema.csv"),
                         prof.lags, prof.sup_increments)
    return 0


def cmd_lowerbound(resolved, cfg_hash, out_dir, cache_dir, threads):
    cfg = _synth_config(resolved)
    table = kernel.cached_table(cfg.alpha, cfg.hurst, cache_dir=cache_dir)
    ens = synth.ensemble(cfg, int(resolved["n_paths"]), resolved["seed"],
                         kernel_table=table, threads=threads)
    j_lo, j_hi = int(resolved["j_lo"]), int(resolved["j_hi"])
    slope, intercept, det = analysis.wj_scale_regression(ens, (j_lo, j_hi))
    target = -cfg.hurst * np.log(2.0)
    results = [report.make_result(
        law="smoothed-increment-scale-slope", target=target, estimate=slope,
        stderr=det["slope_se"], interval=(slope - 0.1 * abs(target),
                                          slope + 0.1 * abs(target)),
        seed=resolved["seed"], n_paths=ens.n_paths, config_hash=cfg_hash)]
    report.write_report_json(
        os.path.join(out_dir, "lowerbound.json"), results,
        extra={"scales_by_level": list(map(float, det["scales"])),
               "levels": list(map(int, det["levels"])),
               "intercept": float(intercept)})
    return 0


def cmd_kernel_table(resolved, cfg_hash, out_dir, cache_dir, threads):
    table = kernel.cached_table(resolved["alpha"], resolved["hurst"],
                                grid_half_width=resolved["grid_half_width"],
                                grid_step=resolved["grid_step"],
                                cache_dir=cache_dir or out_dir)
    summary = {
        "decay_constant": table.decay_constant,
        "far_field_bias": kernel.far_field_bias(table),
        "n_points": int(table.psi_values.size),
        "config_hash": cfg_hash,
    }
    with open(os.path.join(out_dir, "kernel_table.json"), "w", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def cmd_validate(resolved, cfg_hash, out_dir, cache_dir, threads):
    """Quick analytic-oracle suite; prints one line per named check."""
    failures = []

    def check(name, ok):
        print(("ok   " if ok else "FAIL ") + name)
        if not ok:
            failures.append(name)

    closed = [lepage.a_alpha_closed_form(a) for a in (0.3, 0.7, 1.3, 1.7)]
    quads = [lepage.a_alpha(a) for a in (0.3, 0.7, 1.3, 1.7)]
    check("a-alpha-closed-form", all(
        abs(q - c) <= 1e-8 * c for q, c in zip(quads, closed)))

    check("zeta-cdf-values", abs(lepage.zeta_cdf(0.0, 0.5) - 0.5) < 1e-15
          and abs(lepage.zeta_cdf(1.0, 0.5) - 0.75) < 1e-15)

    from scipy import stats
    rng = lepage.stream_rng(resolved["seed"], 0, lepage.STREAM_ZETA)
    signs, logs = lepage.sample_zeta_parts(rng, 0.5, 20000)
    u = lepage.zeta_cdf_from_log(signs, logs, 0.5)
    check("zeta-sampler-ks", stats.kstest(u, "uniform").pvalue > 1e-3)

    draw = lepage.draw_lepage(1.5, 0.5, 2000, resolved["seed"], 0)
    ok = True
    rnd = np.random.default_rng(resolved["seed"])
    for _ in range(20):
        j = int(rnd.integers(0, 10))
        k = int(rnd.integers(-50, 51))
        m = int(rnd.integers(10, 1999))
        direct = coeffs.coeff_direct(j, k, draw, m)
        abel, _ = coeffs.coeff_abel(j, k, draw, m)
        if abs(abel - direct) > 1e-12 * max(abs(direct), 1e-30):
            ok = False
    check("abel-direct-identity", ok)

    xi = np.exp(rnd.uniform(np.log(1e-3), np.log(1e3), 200)) \
        * rnd.choice([-1.0, 1.0], 200)
    total = sum(np.abs(meyer.psi_hat(2.0 ** j * xi)) ** 2 for j in range(-45, 45))
    check("partition-of-unity", bool(np.max(np.abs(total - 1.0)) < 1e-12))

    check("level-probability-bound", all(
        lepage.p_j(j, 0.5) <= 6.0 * (1 + j) ** -1.5 for j in range(31)))

    grng = lepage.stream_rng(resolved["seed"], 1, lepage.STREAM_GAUSS)
    g = grng.normal(0.0, lepage.gaussian_sigma(1.5), 200000)
    check("gaussian-moment-normalization",
          abs(np.mean(np.abs(g) ** 1.5) - 1.0) < 0.02)

    if failures:
        raise NumericError("validation failed: " + ", ".join(failures))
    print("all checks passed")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "coeffs": cmd_coeffs,
    "modulus": cmd_modulus,
    "lowerbound": cmd_lowerbound,
    "kernel-table": cmd_kernel_table,
    "validate": cmd_validate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="hfsmlab")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, defaults in _DEFAULTS.items():
        p = sub.add_parser(name)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", default=None)
        p.add_argument("--out", default="out")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--cache-dir", dest="cache_dir", default=None)
        for key in defaults:
            typ = int if key in _INT_KEYS else float
            p.add_argument(f"--{key.replace('_', '-')}", dest=key,
                           type=typ, default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        file_values = read_config_file(args.config) if args.config else {}
        if "seed" in file_values and args.seed == 0:
            args.seed = int(file_values["seed"])
        flag_values = {k: getattr(args, k) for k in _DEFAULTS[args.command]}
        resolved, cfg_hash = resolve_config(args.command, file_values,
                                            flag_values, args.seed)
        cache_dir = os.environ.get("HFSMLAB_CACHE") or args.cache_dir
        os.makedirs(args.out, exist_ok=True)
        write_config(resolved, cfg_hash, args.out)
        return _COMMANDS[args.command](resolved, cfg_hash, args.out,
                                       cache_dir, max(1, args.threads))
    except (ParameterError, DomainError) as exc:
        _emit_error("parameter", exc)
        return _EXIT_PARAMETER
    except NumericError as exc:
        _emit_error("numeric", exc)
        return _EXIT_NUMERIC
    except ResourceError as exc:
        _emit_error("resource", exc)
        return _EXIT_RESOURCE


def _emit_error(kind, exc):
    json.dump({"error": {"kind": kind, "message": str(exc)}}, sys.stderr)
    sys.stderr.write("\n")


if __name__ == "__main__":
    sys.exit(main())
