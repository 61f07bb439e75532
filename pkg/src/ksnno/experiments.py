"""Scripted reproductions: the worked-example table, covariance checks and
mean-square-error sweeps with rate fitting.

The reference table for the worked example (logistic activation, kernel
t^2 s on [0, 1], order n = 20, 21 grid rows) is embedded as a constant so
comparisons never depend on external files.  All emitted CSV files are
byte-reproducible from the manifest's configuration snapshot.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from ._version import __version__ as _code_version
from .activation import Activation, Density1D, Density2D
from .errors import DomainError
from .kantorovich import RULE_TENSOR, Kernel2D, example_kernel, l2_error_pointwise
from .operators import KSnnoConfig, MseEntry, MseReport, SlopeFit, ksnno_eval, mse_estimate
from .quadrature import QuadratureSpec
from .stochastic import (
    EVAL_MIDPOINT,
    IncrementFixture,
    eval_nodes,
    generate_wiener_path,
    path_time_integral,
)

# Reference worked-example data: t, dW, W, X, approximation, abs err, sq err.
TABLE1_ROWS: tuple[tuple[float, ...], ...] = (
    (0.000,  0.0000,  0.0000, 0.0000, 0.0044, 0.0044, 0.000019),
    (0.050,  0.0714,  0.0714, 0.0010, 0.0066, 0.0056, 0.000032),
    (0.100, -0.0902, -0.0188, 0.0041, 0.0105, 0.0063, 0.000040),
    (0.150,  0.0586,  0.0399, 0.0093, 0.0161, 0.0069, 0.000047),
    (0.200, -0.0317,  0.0082, 0.0165, 0.0238, 0.0073, 0.000054),
    (0.250, -0.2241, -0.2159, 0.0257, 0.0335, 0.0078, 0.000061),
    (0.300,  0.0306, -0.1853, 0.0370, 0.0452, 0.0082, 0.000067),
    (0.350, -0.1392, -0.3244, 0.0504, 0.0589, 0.0085, 0.000073),
    (0.400, -0.0348, -0.3593, 0.0658, 0.0746, 0.0088, 0.000078),
    (0.450, -0.3190, -0.6783, 0.0833, 0.0923, 0.0090, 0.000081),
    (0.500,  0.1985, -0.4798, 0.1029, 0.1120, 0.0091, 0.000082),
    (0.550, -0.1134, -0.5932, 0.1245, 0.1335, 0.0090, 0.000082),
    (0.600,  0.1818, -0.4114, 0.1481, 0.1570, 0.0089, 0.000079),
    (0.650,  0.2563, -0.1551, 0.1739, 0.1823, 0.0084, 0.000071),
    (0.700,  0.3746,  0.2195, 0.2016, 0.2092, 0.0076, 0.000057),
    (0.750, -0.3119, -0.0924, 0.2315, 0.2372, 0.0058, 0.000033),
    (0.800,  0.0381, -0.0543, 0.2634, 0.2655, 0.0021, 0.000005),
    (0.850, -0.0914, -0.1457, 0.2973, 0.2923, 0.0050, 0.000025),
    (0.900, -0.0063, -0.1520, 0.3333, 0.3152, 0.0181, 0.000328),
    (0.950, -0.0124, -0.1645, 0.3714, 0.3321, 0.0392, 0.001538),
    (1.000,  0.3964,  0.2320, 0.4115, 0.3428, 0.0687, 0.004716),
)

#: Amplitude of the reference X column: X(t) = 0.4115 t^2.
TABLE1_AMPLITUDE = 0.4115

TABLE1_COLUMNS = ("t", "dW", "W", "X", "Xn", "abs_err", "sq_err")


def embedded_fixture() -> IncrementFixture:
    """The embedded increment fixture behind the reference table."""
    arr = np.asarray(TABLE1_ROWS)
    return IncrementFixture(times=arr[:, 0], dw=arr[:, 1], provenance="embedded-table1")


@dataclass(frozen=True)
class Table1Report:
    """Recomputed worked-example table against the embedded reference."""

    rows: tuple[tuple[float, ...], ...]
    x_consistency_dev: float     # reference X column vs amplitude * t^2
    x_dev: float                 # recomputed X vs reference X
    xn_dev: float                # recomputed approximation vs reference
    sq_dev: float                # recomputed squared errors vs reference
    interior_sq_max: float       # recomputed squared error for t <= 0.85
    boundary_sq: float           # recomputed squared error at t = 1
    boundary_sq_ref: float       # reference squared error at t = 1
    boundary_is_max: bool
    amplitude: float             # recomputed W(1) - integral of W dt

    @property
    def passed(self) -> bool:
        return (
            self.x_consistency_dev <= 5e-5
            and self.x_dev <= 2.5e-3
            and self.xn_dev <= 2e-2
            and self.boundary_is_max
            and self.interior_sq_max <= 1e-4
            and abs(self.boundary_sq - self.boundary_sq_ref) <= 5e-3
        )

    def to_dict(self) -> dict:
        return {
            "x_consistency_dev": self.x_consistency_dev,
            "x_dev": self.x_dev,
            "xn_dev": self.xn_dev,
            "sq_dev": self.sq_dev,
            "interior_sq_max": self.interior_sq_max,
            "boundary_sq": self.boundary_sq,
            "boundary_sq_ref": self.boundary_sq_ref,
            "boundary_is_max": self.boundary_is_max,
            "amplitude": self.amplitude,
            "passed": self.passed,
        }


def reproduce_table1(
    fixture: IncrementFixture | None = None,
    n: int = 20,
    weight_rule: str = RULE_TENSOR,
    truncation_window: int = 40,
) -> Table1Report:
    """Recompute the worked-example table from fixture increments.

    The time integral of the path uses the trapezoid rule and stochastic
    integrals on the coarse fixture grid evaluate integrands at midpoints;
    the two conventions agree exactly for this process, and calibration
    against the reference data selected them among the candidate rules.
    """
    fixture = fixture or embedded_fixture()
    if fixture.rows != 21:
        raise DomainError(f"expected a 21-row fixture on the 0.05 grid, got {fixture.rows} rows")
    path = fixture.to_path()
    t_grid = tuple(float(t) for t in fixture.times)

    kernel = example_kernel()
    density = Density1D(Activation(truncation_window=truncation_window))
    d2 = Density2D(density)
    cfg = KSnnoConfig(
        n=n, m=default_fixture_m(n), t_grid=t_grid,
        weight_rule=weight_rule, eval_rule=EVAL_MIDPOINT,
        truncation_window=truncation_window,
    )

    amplitude = float(path.values[-1] - path_time_integral(path, "trapezoid"))
    nodes = eval_nodes(path, EVAL_MIDPOINT)
    ref = np.asarray(TABLE1_ROWS)
    rows = []
    for i, t in enumerate(t_grid):
        x = float(kernel.fn(np.asarray(t), nodes) @ path.increments)
        xn = ksnno_eval(kernel, d2, cfg, t, path)
        rows.append((t, float(fixture.dw[i]), float(path.values[i]),
                     x, xn, abs(x - xn), (x - xn) ** 2))
    arr = np.asarray(rows)

    sq = arr[:, 6]
    interior = sq[arr[:, 0] <= 0.85]
    return Table1Report(
        rows=tuple(tuple(r) for r in rows),
        x_consistency_dev=float(np.max(np.abs(ref[:, 3] - TABLE1_AMPLITUDE * ref[:, 0] ** 2))),
        x_dev=float(np.max(np.abs(arr[:, 3] - ref[:, 3]))),
        xn_dev=float(np.max(np.abs(arr[:, 4] - ref[:, 4]))),
        sq_dev=float(np.max(np.abs(arr[:, 6] - ref[:, 6]))),
        interior_sq_max=float(np.max(interior)),
        boundary_sq=float(sq[-1]),
        boundary_sq_ref=float(ref[-1, 6]),
        boundary_is_max=bool(np.argmax(sq) == len(sq) - 1),
        amplitude=amplitude,
    )


def default_fixture_m(n: int) -> int:
    # fixture paths carry their own grid; the config only needs a valid m
    return 50 * n


# ---------------------------------------------------------------------------
# covariance reproduction


@dataclass(frozen=True)
class CovarianceEntry:
    label: str
    empirical: float
    standard_error: float
    analytic: float

    @property
    def within_3se(self) -> bool:
        return abs(self.empirical - self.analytic) <= 3.0 * self.standard_error + 1e-12

    def to_dict(self) -> dict:
        return {
            "label": self.label, "empirical": self.empirical,
            "standard_error": self.standard_error, "analytic": self.analytic,
            "within_3se": self.within_3se,
        }


@dataclass(frozen=True)
class CovarianceReport:
    entries: tuple[CovarianceEntry, ...]
    paths: int
    m: int
    seed: int

    @property
    def passed(self) -> bool:
        return all(e.within_3se for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "paths": self.paths, "m": self.m, "seed": self.seed,
            "passed": self.passed, "entries": [e.to_dict() for e in self.entries],
        }


def covariance_check(
    k: Kernel2D,
    paths: int,
    seed: int,
    t_grid=(0.25, 0.5, 0.75, 1.0),
    cross_pairs=((0.5, 1.0),),
    m: int = 2000,
) -> CovarianceReport:
    """Empirical variances and cross moments of the process vs analytic values.

    For the example kernel the analytic values are Var X_t = t^4 / 3 and
    E[X_t X_s] = (t s)^2 / 3; for other kernels the analytic side comes from
    the covariance factorization integral.
    """
    if paths < 1000:
        raise DomainError(f"need at least 1000 paths, got {paths}")
    c, d_end = k.domain
    template = generate_wiener_path(seed, 0, m, (c, d_end))
    nodes = eval_nodes(template, "left")

    points = sorted({float(t) for t in t_grid} | {float(x) for pair in cross_pairs for x in pair})
    gmat = np.stack([np.asarray(k.fn(np.asarray(t), nodes), dtype=float) for t in points])
    samples = np.empty((paths, len(points)))
    for i in range(paths):
        inc = generate_wiener_path(seed, i, m, (c, d_end)).increments
        samples[i] = gmat @ inc

    from .kantorovich import covariance_factorization_check

    idx = {t: i for i, t in enumerate(points)}
    entries = []
    for t in t_grid:
        x2 = samples[:, idx[float(t)]] ** 2
        entries.append(CovarianceEntry(
            label=f"var[{t:g}]",
            empirical=float(np.mean(x2)),
            standard_error=float(np.std(x2, ddof=1) / math.sqrt(paths)),
            analytic=covariance_factorization_check(k, float(t), float(t)),
        ))
    for (a, b) in cross_pairs:
        prod = samples[:, idx[float(a)]] * samples[:, idx[float(b)]]
        entries.append(CovarianceEntry(
            label=f"cross[{a:g},{b:g}]",
            empirical=float(np.mean(prod)),
            standard_error=float(np.std(prod, ddof=1) / math.sqrt(paths)),
            analytic=covariance_factorization_check(k, float(a), float(b)),
        ))
    return CovarianceReport(entries=tuple(entries), paths=paths, m=m, seed=seed)


# ---------------------------------------------------------------------------
# rate fitting and sweeps


def fit_loglog_slope(points) -> SlopeFit:
    """Least-squares fit of log(value) against log(n)."""
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise DomainError(f"need at least 3 points for a slope fit, got {len(pts)}")
    if any(v <= 0 for _, v in pts):
        raise DomainError("slope fit requires positive values")
    x = np.log([n for n, _ in pts])
    y = np.log([v for _, v in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return SlopeFit(slope=float(slope), intercept=float(intercept), r_squared=r2)


def mse_sweep(
    k: Kernel2D,
    d2: Density2D,
    ns,
    cfg: KSnnoConfig,
    include_mc: bool = True,
    max_rel_se: float = 0.25,
) -> MseReport:
    """Monte-Carlo MSE and oracle L2 error per order, with fitted decay slopes.

    Orders whose Monte-Carlo standard error exceeds max_rel_se of the MSE
    are excluded from the Monte-Carlo slope fit (they would fit noise); the
    oracle columns are also fitted at doubled quadrature resolution so the
    reported rate carries its own calibration check.
    """
    ns = [int(n) for n in ns]
    if not ns:
        raise DomainError("ns must be non-empty")
    if sorted(ns) != ns:
        raise DomainError("ns must be ascending")
    hires = QuadratureSpec(panels=2 * cfg.line_quadrature.panels, order=cfg.line_quadrature.order)
    entries = []
    hires_means = []
    for n in ns:
        c = cfg.with_order(n)
        oracle_by_t = tuple(
            l2_error_pointwise(k, d2, n, t, c.quadrature, c.weight_rule, c.line_quadrature)
            for t in c.t_grid
        )
        hires_means.append(float(np.mean([
            l2_error_pointwise(k, d2, n, t, c.quadrature, c.weight_rule, hires)
            for t in c.t_grid
        ])))
        if include_mc:
            ests = [mse_estimate(k, d2, c, t) for t in c.t_grid]
            mse_by_t = tuple(e.mse for e in ests)
            mse_mean = float(np.mean(mse_by_t))
            # grid-mean SE: independent t-points would give a smaller value;
            # the conservative mean keeps the noise filter honest
            se_mean = float(np.mean([e.standard_error for e in ests]))
        else:
            mse_by_t, mse_mean, se_mean = (), None, None
        oracle_mean = float(np.mean(oracle_by_t))
        gap = None
        if mse_mean is not None and oracle_mean > 1e-14:
            gap = abs(mse_mean - oracle_mean) / oracle_mean
        entries.append(MseEntry(
            n=n, mse_mc=mse_mean, mse_se=se_mean, oracle_d=oracle_mean,
            isometry_gap=gap, mse_by_t=mse_by_t, oracle_by_t=oracle_by_t,
        ))

    fit = None
    if include_mc:
        usable = [
            (e.n, e.mse_mc) for e in entries
            if e.mse_mc and e.mse_se is not None and e.mse_se <= max_rel_se * e.mse_mc
        ]
        if len(usable) >= 3:
            fit = fit_loglog_slope(usable)
    oracle_fit = fit_loglog_slope([(e.n, e.oracle_d) for e in entries]) if len(ns) >= 3 else None
    oracle_fit_hires = (
        fit_loglog_slope(list(zip(ns, hires_means))) if len(ns) >= 3 else None
    )
    return MseReport(
        entries=tuple(entries), t_grid=cfg.t_grid, weight_rule=cfg.weight_rule,
        fit=fit, oracle_fit=oracle_fit, oracle_fit_hires=oracle_fit_hires,
    )


# ---------------------------------------------------------------------------
# run directory plumbing


def format_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path: str, header, rows) -> None:
    """Atomic CSV write: LF endings, '.' decimal separator, header mandatory."""
    tmp = path + ".tmp"
    with open(tmp, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")
    os.replace(tmp, path)


def write_json(path: str, payload: dict) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def write_svg_polylines(path: str, series, width: int = 640, height: int = 480,
                        log_y: bool = False) -> None:
    """Data-faithful polyline plot: one polyline per (label, xs, ys) series."""
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    if log_y:
        ys_all = [math.log10(y) for y in ys_all if y > 0]
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0
    pad = 40

    def sx(x):
        return pad + (x - x_lo) / x_span * (width - 2 * pad)

    def sy(y):
        if log_y:
            y = math.log10(y)
        return height - pad - (y - y_lo) / y_span * (height - 2 * pad)

    colors = ("black", "crimson", "steelblue", "darkgreen", "orange")
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="gray"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="gray"/>',
    ]
    for i, (label, xs, ys) in enumerate(series):
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        color = colors[i % len(colors)]
        lines.append(f'<polyline fill="none" stroke="{color}" points="{pts}"><title>{label}</title></polyline>')
    lines.append("</svg>")
    tmp = path + ".tmp"
    with open(tmp, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Snapshot that makes a run reproducible: config, seed, output digests."""

    subcommand: str
    config: dict
    master_seed: int
    created_utc: str
    code_version: str
    outputs: dict
    extras: dict

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "config": self.config,
            "master_seed": self.master_seed,
            "created_utc": self.created_utc,
            "code_version": self.code_version,
            "outputs": self.outputs,
            "extras": self.extras,
        }


def build_manifest(subcommand: str, config: dict, master_seed: int,
                   run_dir: str, filenames, extras: dict | None = None) -> RunManifest:
    outputs = {name: file_digest(os.path.join(run_dir, name)) for name in sorted(filenames)}
    return RunManifest(
        subcommand=subcommand,
        config=config,
        master_seed=master_seed,
        created_utc=_dt.datetime.now(tz=_dt.timezone.utc).isoformat(),
        code_version=_code_version,
        outputs=outputs,
        extras=extras or {},
    )
