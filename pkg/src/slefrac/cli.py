"""Command-line front end: one subcommand per experiment.

Exit codes: 0 success, 2 usage error, 3 numerical error, 4 resource
budget exceeded.  Configuration precedence: command-line flags override a
TOML config file section, which overrides built-in defaults; the
effective configuration is echoed into the run manifest.  The default
worker-thread count comes from the SLEFRAC_THREADS environment variable.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import diffusion, estimators, fractal, io, loewner
from .errors import (DataError, NumericalError, ParameterError,
                     ResolutionError, ResourceBudgetError, StateError)

THREADS_ENV = "SLEFRAC_THREADS"

DEFAULTS = {
    "trace": dict(kappa=8.0 / 3.0, horizon=1.0, steps=4096, seed=1,
                  svg=True, zero_driving=False),
    "survival": dict(kappa=4.0, alpha0=math.pi, smax=6.0, sstep=0.5,
                     npaths=100_000, ds=1e-4, seed=1, fit_min=1.0),
    "eigen": dict(kappa=4.0, grid=2048),
    "hitting": dict(kappa=2.0, z0="0,1", eps="0.2,0.1,0.05,0.025",
                    npaths=10_000, horizon=None, steps=None, seed=1,
                    check_horizon=False),
    "twopoint": dict(kappa=8.0 / 3.0, z="0,1", zp="1,1", eps="0.2,0.1,0.05",
                     sep=None, npaths=10_000, horizon=8.0, steps=4096, seed=1),
    "boxdim": dict(kappa=8.0 / 3.0, horizon=1.0, steps=100_000, seed=1,
                   eps=None, control=False),
    "partition": dict(k1=1, k2=1, a=0.05, c=2.0, alpha=1.0, beta=1.0,
                      gamma=1.0, kmax=None, budget=10_000_000),
    "report": dict(dir="."),
}


def _load_toml(path):
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as f:
        return tomllib.load(f)


def _effective_config(cmd, args):
    cfg = dict(DEFAULTS[cmd])
    if getattr(args, "config", None):
        section = _load_toml(args.config).get(cmd, {})
        unknown = set(section) - set(cfg)
        if unknown:
            raise ParameterError(f"unknown config keys for [{cmd}]: {sorted(unknown)}")
        cfg.update(section)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _parse_complex(text) -> complex:
    try:
        re_s, im_s = str(text).split(",")
        return complex(float(re_s), float(im_s))
    except Exception:
        raise ParameterError(f"expected a point as 're,im', got {text!r}") from None


def _parse_floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except Exception:
        raise ParameterError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise ParameterError("empty list of numbers")
    return vals


def _fit_payload(experiment, kappa, params, seed, points, fit, reference, band):
    passed = (fit is not None and band is not None
              and band[0] <= fit.slope <= band[1])
    payload = {
        "experiment": experiment,
        "kappa": kappa,
        "params": params,
        "seed": seed,
        "points": points,
        "reference_exponent": reference,
        "pass_band": list(band) if band is not None else None,
        "passed": bool(passed),
    }
    if fit is not None:
        payload["fit"] = {"slope": fit.slope, "stderr": fit.slope_stderr,
                          "r2": fit.r_squared}
    return payload


def _finish(out_dir, experiment, cfg, seed, outputs, started):
    manifest = io.ExperimentManifest(
        experiment=experiment, params=cfg, master_seed=seed,
        started=started, finished=io.utc_now(), outputs=sorted(outputs))
    path = os.path.join(out_dir, f"{experiment}_manifest.json")
    manifest.save(path)
    return outputs + [os.path.basename(path)]


# ------------------------------------------------------------- commands

def cmd_trace(cfg, out_dir):
    started = io.utc_now()
    steps = int(cfg["steps"])
    if cfg["zero_driving"]:
        dt = cfg["horizon"] / steps
        driving = loewner.DrivingPath(kappa=cfg["kappa"], dt=dt,
                                      values=np.zeros(steps + 1))
    else:
        driving = loewner.sample_driving(cfg["kappa"], cfg["horizon"], steps,
                                         cfg["seed"])
    trace = loewner.compute_trace(driving)
    outputs = ["trace.csv"]
    io.write_csv(os.path.join(out_dir, "trace.csv"), ["t", "re", "im"],
                 [trace.times, trace.points.real, trace.points.imag])
    if cfg["svg"]:
        io.write_trace_svg(os.path.join(out_dir, "trace.svg"), trace.points)
        outputs.append("trace.svg")
    return _finish(out_dir, "trace", cfg, cfg["seed"], outputs, started)


def cmd_survival(cfg, out_dir):
    started = io.utc_now()
    s_grid = np.arange(cfg["sstep"], cfg["smax"] + 1e-9, cfg["sstep"])
    est = diffusion.survival_curve(cfg["kappa"], cfg["alpha0"], s_grid,
                                   int(cfg["npaths"]), cfg["ds"], cfg["seed"])
    fit = diffusion.survival_exponent(est, s_min=cfg["fit_min"])
    lam = -fit.slope
    ref = 1.0 - cfg["kappa"] / 8.0
    io.write_csv(os.path.join(out_dir, "survival.csv"), ["s", "prob", "stderr"],
                 [est.s_grid, est.probs, est.stderrs])
    points = [{"x": float(s), "y": float(p), "stderr": float(se)}
              for s, p, se in zip(est.s_grid, est.probs, est.stderrs)]
    band = (0.9 * ref, 1.1 * ref)
    payload = _fit_payload("survival", cfg["kappa"], cfg, cfg["seed"], points,
                           fit, ref, band)
    payload["lambda_hat"] = lam
    payload["passed"] = bool(band[0] <= lam <= band[1])
    io.write_json(os.path.join(out_dir, "survival_fit.json"), payload)
    return _finish(out_dir, "survival", cfg, cfg["seed"],
                   ["survival.csv", "survival_fit.json"], started)


def cmd_eigen(cfg, out_dir):
    started = io.utc_now()
    grid = int(cfg["grid"])
    spec = diffusion.leading_eigenvalue(cfg["kappa"], grid)
    resid = diffusion.eigenfunction_residual(cfg["kappa"], grid)
    ref = 1.0 - cfg["kappa"] / 8.0
    payload = {
        "experiment": "eigen",
        "kappa": cfg["kappa"],
        "grid_size": grid,
        "lambda_hat": spec.lambda_hat,
        "residual": resid,
        "params": cfg,
        "reference_exponent": ref,
        "fit": {"slope": spec.lambda_hat, "stderr": 0.0, "r2": 1.0},
        "passed": bool(ref != 0.0 and abs(spec.lambda_hat - ref) <= 0.02 * abs(ref)),
    }
    io.write_json(os.path.join(out_dir, "eigen_fit.json"), payload)
    return _finish(out_dir, "eigen", cfg, 0, ["eigen_fit.json"], started)


def _hitting_defaults(cfg, z0):
    horizon = cfg["horizon"]
    if horizon is None:
        horizon = 16.0 * abs(z0) ** 2
    steps = cfg["steps"]
    if steps is None:
        steps = int(round(1e4 * horizon))
    return float(horizon), int(steps)


def cmd_hitting(cfg, out_dir):
    started = io.utc_now()
    z0 = _parse_complex(cfg["z0"])
    eps = _parse_floats(cfg["eps"])
    horizon, steps = _hitting_defaults(cfg, z0)
    est = estimators.hitting_probability_mc(z0, eps, cfg["kappa"],
                                            int(cfg["npaths"]), horizon, steps,
                                            cfg["seed"])
    fit = estimators.fit_power_law(est.eps_list, est.probs)
    ref = 1.0 - cfg["kappa"] / 8.0
    io.write_csv(os.path.join(out_dir, "hitting.csv"), ["eps", "prob", "stderr"],
                 [est.eps_list, est.probs, est.stderrs])
    points = [{"x": float(e), "y": float(p), "stderr": float(se)}
              for e, p, se in zip(est.eps_list, est.probs, est.stderrs)]
    payload = _fit_payload("hitting", cfg["kappa"], dict(cfg, horizon=horizon,
                                                         steps=steps),
                           cfg["seed"], points, fit, ref,
                           (ref - 0.15, ref + 0.15))
    if cfg["check_horizon"]:
        est2 = estimators.hitting_probability_mc(z0, eps, cfg["kappa"],
                                                 int(cfg["npaths"]),
                                                 2.0 * horizon, 2 * steps,
                                                 cfg["seed"])
        payload["horizon_doubling_drift"] = float(
            np.abs(est2.probs - est.probs).max())
    io.write_json(os.path.join(out_dir, "hitting_fit.json"), payload)
    return _finish(out_dir, "hitting", cfg, cfg["seed"],
                   ["hitting.csv", "hitting_fit.json"], started)


def cmd_twopoint(cfg, out_dir):
    started = io.utc_now()
    z = _parse_complex(cfg["z"])
    zp = _parse_complex(cfg["zp"])
    s = 1.0 - cfg["kappa"] / 8.0
    horizon, steps = float(cfg["horizon"]), int(cfg["steps"])
    if cfg["sep"] is not None:
        seps = _parse_floats(cfg["sep"])
        eps = min(_parse_floats(cfg["eps"]))
        xs, ps = [], []
        for sep in seps:
            p, se = estimators.two_point_mc(z, z + sep, eps, cfg["kappa"],
                                            int(cfg["npaths"]), horizon, steps,
                                            cfg["seed"])
            xs.append(sep)
            ps.append((p, se))
        ref = -s
        band = (1.5 * ref, 0.6 * ref)
        mode = "separation"
    else:
        eps_list = _parse_floats(cfg["eps"])
        xs, ps = [], []
        for e in sorted(eps_list, reverse=True):
            p, se = estimators.two_point_mc(z, zp, e, cfg["kappa"],
                                            int(cfg["npaths"]), horizon, steps,
                                            cfg["seed"])
            xs.append(e)
            ps.append((p, se))
        ref = 2.0 * s
        band = (0.825 * ref, 1.2 * ref)
        mode = "eps"
    fit = estimators.fit_power_law(xs, [p for p, _ in ps])
    io.write_csv(os.path.join(out_dir, "twopoint.csv"),
                 ["x", "prob", "stderr"],
                 [np.array(xs), np.array([p for p, _ in ps]),
                  np.array([se for _, se in ps])])
    points = [{"x": float(x), "y": float(p), "stderr": float(se)}
              for x, (p, se) in zip(xs, ps)]
    payload = _fit_payload("twopoint", cfg["kappa"], dict(cfg, mode=mode),
                           cfg["seed"], points, fit, ref, band)
    io.write_json(os.path.join(out_dir, "twopoint_fit.json"), payload)
    return _finish(out_dir, "twopoint", cfg, cfg["seed"],
                   ["twopoint.csv", "twopoint_fit.json"], started)


def cmd_boxdim(cfg, out_dir):
    started = io.utc_now()
    steps = int(cfg["steps"])
    if cfg["control"]:
        dt = cfg["horizon"] / steps
        driving = loewner.DrivingPath(kappa=cfg["kappa"], dt=dt,
                                      values=np.zeros(steps + 1))
        ref = 1.0
        band = (0.95, 1.05)
    else:
        driving = loewner.sample_driving(cfg["kappa"], cfg["horizon"], steps,
                                         cfg["seed"])
        ref = min(2.0, 1.0 + cfg["kappa"] / 8.0)
        band = (0.90 * ref, 1.0875 * ref)
    trace = loewner.compute_trace(driving)
    eps = (np.asarray(_parse_floats(cfg["eps"])) if cfg["eps"] is not None
           else fractal.eps_range_policy(trace))
    fit = fractal.dimension_fit(trace, eps)
    table = fractal.box_count_table(trace.points, eps)
    io.write_csv(os.path.join(out_dir, "boxcounts.csv"), ["eps", "count"],
                 [table.eps_list, table.counts])
    points = [{"x": float(e), "y": int(c)}
              for e, c in zip(table.eps_list, table.counts)]
    payload = _fit_payload("boxdim", cfg["kappa"],
                           dict(cfg, eps=[float(e) for e in eps]),
                           cfg["seed"], points, fit, ref, band)
    payload.update({
        "n_steps": steps,
        "eps_range": [float(eps.min()), float(eps.max())],
        "D_hat": fit.slope,
        "stderr": fit.slope_stderr,
        "half_range_spread": fractal.half_range_spread(trace, eps),
    })
    io.write_json(os.path.join(out_dir, "boxdim_fit.json"), payload)
    return _finish(out_dir, "boxdim", cfg, cfg["seed"],
                   ["boxcounts.csv", "boxdim_fit.json"], started)


def cmd_partition(cfg, out_dir):
    started = io.utc_now()
    a, c = cfg["a"], cfg["c"]
    al, be, ga = cfg["alpha"], cfg["beta"], cfg["gamma"]
    budget = int(cfg["budget"])

    def ratio(k1, k2):
        total = estimators.partition_sum(k1, k2, a, c, al, be, ga,
                                         term_budget=budget)
        return total / a ** (al * k1 / 2.0 + be * k2)

    if cfg["kmax"] is not None:
        kmax = int(cfg["kmax"])
        rows = [(k1, k2,
                 estimators.partition_sum(k1, k2, a, c, al, be, ga,
                                          term_budget=budget),
                 ratio(k1, k2))
                for k1 in range(1, kmax + 1) for k2 in range(1, kmax + 1)]
        io.write_csv(os.path.join(out_dir, "partition.csv"),
                     ["k1", "k2", "sum", "ratio"],
                     [np.array([r[i] for r in rows]) for i in range(4)])
        ratios = np.array([r[3] for r in rows])
        r11 = ratio(1, 1)
        payload = {
            "experiment": "partition",
            "kappa": float("nan"),
            "params": cfg,
            "seed": 0,
            "kmax": kmax,
            "max_ratio": float(ratios.max()),
            "min_ratio": float(ratios.min()),
            "ratio_at_1_1": float(r11),
            "passed": bool(np.isfinite(ratios).all()
                           and ratios.max() <= 10.0 * r11),
        }
        io.write_json(os.path.join(out_dir, "partition_fit.json"), payload)
        outputs = ["partition.csv", "partition_fit.json"]
    else:
        k1, k2 = int(cfg["k1"]), int(cfg["k2"])
        total = estimators.partition_sum(k1, k2, a, c, al, be, ga,
                                         term_budget=budget)
        payload = {
            "experiment": "partition",
            "params": cfg,
            "seed": 0,
            "k1": k1, "k2": k2,
            "sum": float(total),
            "ratio": float(ratio(k1, k2)),
            "n_terms": estimators.count_composition_pairs(k1, k2),
        }
        io.write_json(os.path.join(out_dir, "partition_fit.json"), payload)
        outputs = ["partition_fit.json"]
    return _finish(out_dir, "partition", cfg, 0, outputs, started)


def cmd_report(cfg, out_dir):
    started = io.utc_now()
    text = io.build_report(cfg["dir"])
    path = os.path.join(out_dir, "report.md")
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    sys.stdout.write(text)
    return _finish(out_dir, "report", cfg, 0, ["report.md"], started)


COMMANDS = {
    "trace": cmd_trace,
    "survival": cmd_survival,
    "eigen": cmd_eigen,
    "hitting": cmd_hitting,
    "twopoint": cmd_twopoint,
    "boxdim": cmd_boxdim,
    "partition": cmd_partition,
    "report": cmd_report,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="slefrac",
        description="Chordal SLE simulation and fractal-exponent experiments")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default: ${THREADS_ENV} or all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--config", default=None, help="TOML config file")
        return p

    p = add("trace", help="simulate one trace, export CSV/SVG")
    p.add_argument("--kappa", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--svg", action=argparse.BooleanOptionalAction)
    p.add_argument("--zero-driving", dest="zero_driving",
                   action=argparse.BooleanOptionalAction)

    p = add("survival", help="angular-diffusion survival curve and decay fit")
    p.add_argument("--kappa", type=float)
    p.add_argument("--alpha0", type=float)
    p.add_argument("--smax", type=float)
    p.add_argument("--sstep", type=float)
    p.add_argument("--npaths", type=int)
    p.add_argument("--ds", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--fit-min", dest="fit_min", type=float)

    p = add("eigen", help="generator eigenvalue and eigenfunction residual")
    p.add_argument("--kappa", type=float)
    p.add_argument("--grid", type=int)

    p = add("hitting", help="one-point disk-hitting exponent")
    p.add_argument("--kappa", type=float)
    p.add_argument("--z0")
    p.add_argument("--eps")
    p.add_argument("--npaths", type=int)
    p.add_argument("--horizon", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--check-horizon", dest="check_horizon",
                   action=argparse.BooleanOptionalAction)

    p = add("twopoint", help="two-point hitting exponents")
    p.add_argument("--kappa", type=float)
    p.add_argument("--z")
    p.add_argument("--zp")
    p.add_argument("--eps")
    p.add_argument("--sep")
    p.add_argument("--npaths", type=int)
    p.add_argument("--horizon", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)

    p = add("boxdim", help="box-counting dimension of a trace")
    p.add_argument("--kappa", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--eps")
    p.add_argument("--control", action=argparse.BooleanOptionalAction,
                   help="zero-driving segment control")

    p = add("partition", help="composition partition-sum bound")
    p.add_argument("--k1", type=int)
    p.add_argument("--k2", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--kmax", type=int)
    p.add_argument("--budget", type=int)

    p = add("report", help="aggregate fit JSONs into a Markdown table")
    p.add_argument("--dir")

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    threads = args.threads
    if threads is None and os.environ.get(THREADS_ENV):
        try:
            threads = int(os.environ[THREADS_ENV])
        except ValueError:
            print(f"ignoring malformed {THREADS_ENV}", file=sys.stderr)
    if threads is not None:
        import numba
        numba.set_num_threads(max(1, threads))
    try:
        cfg = _effective_config(args.command, args)
        out_dir = args.out
        os.makedirs(out_dir, exist_ok=True)
        outputs = COMMANDS[args.command](cfg, out_dir)
    except (ParameterError, DataError, StateError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ResolutionError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except ResourceBudgetError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 4
    for name in outputs:
        print(os.path.join(out_dir, name))
    return 0


if __name__ == "__main__":
    sys.exit(main())
