"""Command-line entry point.

Subcommands map one-to-one onto the scripted experiments; every run writes
its outputs plus a manifest.json under the run directory.  Exit codes:
0 success, 1 tolerance failure, 2 usage or configuration error.  All
numeric output is deterministic given --seed, and --workers never changes
numbers, only wall time.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from ._version import __version__
from .activation import Activation, Density1D, Density2D, verify_sigmoidal_conditions
from .errors import KsnnoError
from .experiments import (
    build_manifest,
    covariance_check,
    embedded_fixture,
    l2_error_pointwise,
    mse_sweep,
    reproduce_table1,
    write_csv,
    write_json,
    write_svg_polylines,
)
from .kantorovich import WEIGHT_RULES, kernel_by_name
from .operators import KSnnoConfig
from .stochastic import generate_wiener_path, load_fixture, neuron_second_moment_check

SUBCOMMANDS = (
    "table1",
    "mse-sweep",
    "covariance",
    "neuron-check",
    "kantorovich-error",
    "paths",
    "verify-activation",
)

_TOLERANCE_NAMES = {
    "mse-sweep": {"isometry", "slope"},
    "table1": set(),
    "covariance": set(),
    "neuron-check": set(),
    "kantorovich-error": set(),
    "paths": set(),
    "verify-activation": {"conditions"},
}


def _parse_t_grid(text: str) -> tuple[float, ...]:
    text = text.strip()
    if ":" in text:
        a, b, k = text.split(":")
        return tuple(float(x) for x in np.linspace(float(a), float(b), int(k)))
    return tuple(float(x) for x in text.split(","))


def _parse_n_list(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",")]


def load_config_file(path: str) -> dict[str, str]:
    """Plain `key = value` configuration; '#' starts a comment."""
    values: dict[str, str] = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise KsnnoError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
                key, value = line.split("=", 1)
                values[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise KsnnoError(f"cannot read config file {path}: {exc}") from exc
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ksnno",
        description="Stochastic Kantorovich operator experiments and checks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--activation", default=None, help="activation name (default logistic)")
        p.add_argument("--kernel", default=None,
                       help="kernel spec: example-t2s, constant:V or poly:p,q,c;...")
        p.add_argument("--n", default=None,
                       help="operator order, or comma list for sweeps")
        p.add_argument("--m", type=int, default=None, help="path grid steps")
        p.add_argument("--paths", type=int, default=None, help="Monte-Carlo path count")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--fixture", default=None, help="increment fixture CSV (t,dW)")
        p.add_argument("--out", default=None, help="run directory for outputs")
        p.add_argument("--workers", type=int, default=None,
                       help="parallel workers; never changes numeric results")
        p.add_argument("--t-grid", dest="t_grid", default=None,
                       help="evaluation points: 'a:b:count' or comma list")
        p.add_argument("--tolerance", action="append", default=None, metavar="NAME=VALUE",
                       help="tolerance override, repeatable")
        p.add_argument("--weight-rule", dest="weight_rule", default=None,
                       choices=WEIGHT_RULES, help="operator weight rule")
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--svg", action="store_true", default=None, help="also write SVG plots")
    return parser


_DEFAULTS = {
    "activation": "logistic",
    "kernel": "example-t2s",
    "m": None,
    "paths": 1000,
    "seed": 0,
    "workers": 1,
    "weight_rule": "tensor",
    "svg": False,
}

_DEFAULT_N = {
    "mse-sweep": "5,10,20,40,80",
    "kantorovich-error": "5,10,20,40,80",
}

_DEFAULT_T_GRID = {
    "mse-sweep": "0.25,0.5,0.75",
    "kantorovich-error": "0:1:101",
    "covariance": "0.25,0.5,0.75,1.0",
    "neuron-check": "0.25,0.5,0.75",
}


def _resolve(args: argparse.Namespace) -> dict:
    """Merge flag values over config-file values over built-in defaults."""
    file_values = load_config_file(args.config) if args.config else {}

    def pick(name: str, fallback):
        flag = getattr(args, name, None)
        if flag is not None:
            return flag
        if name in file_values:
            return file_values[name]
        return fallback

    sub = args.subcommand
    opts = {
        "subcommand": sub,
        "activation": str(pick("activation", _DEFAULTS["activation"])),
        "kernel": str(pick("kernel", _DEFAULTS["kernel"])),
        "n": pick("n", _DEFAULT_N.get(sub, "20")),
        "m": pick("m", _DEFAULTS["m"]),
        "paths": int(pick("paths", _DEFAULTS["paths"])),
        "seed": int(pick("seed", _DEFAULTS["seed"])),
        "fixture": pick("fixture", None),
        "out": str(pick("out", os.path.join("runs", sub))),
        "workers": int(pick("workers", _DEFAULTS["workers"])),
        "t_grid": _parse_t_grid(str(pick("t_grid", _DEFAULT_T_GRID.get(sub, "0:1:21")))),
        "weight_rule": str(pick("weight_rule", _DEFAULTS["weight_rule"])),
        "svg": bool(pick("svg", _DEFAULTS["svg"])),
    }
    opts["m"] = int(opts["m"]) if opts["m"] not in (None, "") else None

    tolerances: dict[str, float] = {}
    tol_args = args.tolerance or []
    if "tolerance" in file_values:
        tol_args = file_values["tolerance"].split(";") + list(tol_args)
    for item in tol_args:
        if "=" not in item:
            raise KsnnoError(f"--tolerance expects NAME=VALUE, got {item!r}")
        name, value = item.split("=", 1)
        name = name.strip()
        if name not in _TOLERANCE_NAMES[sub]:
            known = ", ".join(sorted(_TOLERANCE_NAMES[sub])) or "none"
            raise KsnnoError(f"unknown tolerance {name!r} for {sub} (known: {known})")
        tolerances[name] = float(value)
    opts["tolerances"] = tolerances
    return opts


def _density(opts: dict) -> Density2D:
    return Density2D(Density1D(Activation(kind=opts["activation"])))


def _config(opts: dict, n: int) -> KSnnoConfig:
    m = opts["m"] if opts["m"] is not None else max(2000, 50 * n)
    return KSnnoConfig(
        n=n, m=m, paths=opts["paths"], master_seed=opts["seed"],
        t_grid=opts["t_grid"], weight_rule=opts["weight_rule"],
        workers=opts["workers"],
    )


def _single_n(opts: dict) -> int:
    ns = _parse_n_list(opts["n"])
    if len(ns) != 1:
        raise KsnnoError(f"{opts['subcommand']} expects a single --n, got {opts['n']!r}")
    return ns[0]


def _finish(opts: dict, filenames: list[str], extras: dict, passed: bool) -> int:
    manifest = build_manifest(
        opts["subcommand"],
        {k: v for k, v in opts.items() if k != "subcommand"},
        opts["seed"], opts["out"], filenames, extras,
    )
    write_json(os.path.join(opts["out"], "manifest.json"), manifest.to_dict())
    status = "ok" if passed else "TOLERANCE FAILURE"
    print(f"{opts['subcommand']}: {status}; outputs in {opts['out']}")
    return 0 if passed else 1


def _cmd_table1(opts: dict) -> int:
    fixture = load_fixture(opts["fixture"]) if opts["fixture"] else embedded_fixture()
    report = reproduce_table1(fixture, n=_single_n(opts), weight_rule=opts["weight_rule"])
    os.makedirs(opts["out"], exist_ok=True)
    write_csv(os.path.join(opts["out"], "table1.csv"),
              ["t", "dW", "W", "X", "Xn", "abs_err", "sq_err"], report.rows)
    write_json(os.path.join(opts["out"], "table1_report.json"), report.to_dict())
    files = ["table1.csv", "table1_report.json"]
    if opts["svg"]:
        ts = [r[0] for r in report.rows]
        write_svg_polylines(
            os.path.join(opts["out"], "table1.svg"),
            [("X", ts, [r[3] for r in report.rows]),
             ("Xn", ts, [r[4] for r in report.rows])],
        )
        files.append("table1.svg")
    return _finish(opts, files, {"amplitude": report.amplitude}, report.passed)


def _cmd_mse_sweep(opts: dict) -> int:
    ns = _parse_n_list(opts["n"])
    kernel = kernel_by_name(opts["kernel"])
    d2 = _density(opts)
    cfg = _config(opts, max(min(ns), 2))
    report = mse_sweep(kernel, d2, ns, cfg)
    iso_tol = opts["tolerances"].get("isometry", 0.15)
    slope_tol = opts["tolerances"].get("slope", -0.8)

    oracle = [e.oracle_d for e in report.entries]
    decreasing = all(b < a for a, b in zip(oracle, oracle[1:]))
    slope_ok = report.oracle_fit is not None and report.oracle_fit.slope <= slope_tol
    gaps_ok = all(
        e.isometry_gap is None or e.mse_se is None
        or e.oracle_d <= 10 * e.mse_se
        or e.isometry_gap <= iso_tol
        for e in report.entries
    )
    passed = decreasing and slope_ok and gaps_ok

    os.makedirs(opts["out"], exist_ok=True)
    write_csv(os.path.join(opts["out"], "mse_sweep.csv"),
              report.csv_header(), report.csv_rows())
    payload = report.to_dict()
    payload.update({"decreasing": decreasing, "slope_ok": slope_ok,
                    "gaps_ok": gaps_ok, "passed": passed})
    write_json(os.path.join(opts["out"], "mse_sweep.json"), payload)
    files = ["mse_sweep.csv", "mse_sweep.json"]
    if opts["svg"]:
        series = [("oracle_d", [e.n for e in report.entries], oracle)]
        if all(e.mse_mc for e in report.entries):
            series.append(("mse_mc", [e.n for e in report.entries],
                           [e.mse_mc for e in report.entries]))
        write_svg_polylines(os.path.join(opts["out"], "mse_sweep.svg"), series, log_y=True)
        files.append("mse_sweep.svg")
    extras = {
        "oracle_slope": None if report.oracle_fit is None else report.oracle_fit.slope,
        "oracle_slope_hires": (
            None if report.oracle_fit_hires is None else report.oracle_fit_hires.slope
        ),
        "mc_slope": None if report.fit is None else report.fit.slope,
    }
    return _finish(opts, files, extras, passed)


def _cmd_covariance(opts: dict) -> int:
    kernel = kernel_by_name(opts["kernel"])
    m = opts["m"] if opts["m"] is not None else 2000
    report = covariance_check(kernel, opts["paths"], opts["seed"],
                              t_grid=opts["t_grid"], m=m)
    os.makedirs(opts["out"], exist_ok=True)
    write_csv(
        os.path.join(opts["out"], "covariance.csv"),
        ["label", "empirical", "standard_error", "analytic", "within_3se"],
        [[e.label, e.empirical, e.standard_error, e.analytic, e.within_3se]
         for e in report.entries],
    )
    write_json(os.path.join(opts["out"], "covariance_report.json"), report.to_dict())
    return _finish(opts, ["covariance.csv", "covariance_report.json"], {}, report.passed)


def _cmd_neuron_check(opts: dict) -> int:
    n = _single_n(opts)
    d2 = _density(opts)
    m = opts["m"] if opts["m"] is not None else 2000
    reports = []
    for t in opts["t_grid"]:
        center = min(max(round(n * t), 0), n - 1)
        for j in sorted({center, max(center - 2, 0)}):
            reports.append(neuron_second_moment_check(
                d2, n, j, float(t), paths=opts["paths"], seed=opts["seed"],
                m=m, rule=opts["weight_rule"],
            ))
    passed = all(r.within_bound for r in reports)
    os.makedirs(opts["out"], exist_ok=True)
    write_json(os.path.join(opts["out"], "neuron_check.json"),
               {"passed": passed, "checks": [r.to_dict() for r in reports]})
    return _finish(opts, ["neuron_check.json"], {}, passed)


def _cmd_kantorovich_error(opts: dict) -> int:
    ns = _parse_n_list(opts["n"])
    kernel = kernel_by_name(opts["kernel"])
    d2 = _density(opts)
    t_grid = opts["t_grid"]
    rows = []
    for n in sorted(ns):
        d_at = [l2_error_pointwise(kernel, d2, n, t, rule=opts["weight_rule"]) for t in t_grid]
        rows.append([n, float(np.mean(d_at))] + d_at)
    os.makedirs(opts["out"], exist_ok=True)
    header = ["n", "D_mean"] + [f"D_t{t:g}" for t in t_grid]
    write_csv(os.path.join(opts["out"], "kantorovich_error.csv"), header, rows)
    return _finish(opts, ["kantorovich_error.csv"], {}, True)


def _cmd_paths(opts: dict) -> int:
    m = opts["m"] if opts["m"] is not None else 2000
    rows = []
    for idx in range(opts["paths"]):
        p = generate_wiener_path(opts["seed"], idx, m)
        rows.append([idx, p.times[0], 0.0, p.values[0]])
        for k in range(m):
            rows.append([idx, p.times[k + 1], p.increments[k], p.values[k + 1]])
    os.makedirs(opts["out"], exist_ok=True)
    write_csv(os.path.join(opts["out"], "paths.csv"), ["path", "t", "dW", "W"], rows)
    return _finish(opts, ["paths.csv"], {"m": m}, True)


def _cmd_verify_activation(opts: dict) -> int:
    tol = opts["tolerances"].get("conditions", 1e-9)
    report = verify_sigmoidal_conditions(Activation(kind=opts["activation"]), tol=tol)
    os.makedirs(opts["out"], exist_ok=True)
    write_json(os.path.join(opts["out"], "activation_report.json"), report.to_dict())
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return _finish(opts, ["activation_report.json"], {}, report.passed)


_HANDLERS = {
    "table1": _cmd_table1,
    "mse-sweep": _cmd_mse_sweep,
    "covariance": _cmd_covariance,
    "neuron-check": _cmd_neuron_check,
    "kantorovich-error": _cmd_kantorovich_error,
    "paths": _cmd_paths,
    "verify-activation": _cmd_verify_activation,
}


def run(argv) -> int:
    """Execute one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else int(exc.code)
    try:
        opts = _resolve(args)
        return _HANDLERS[opts["subcommand"]](opts)
    except KsnnoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
