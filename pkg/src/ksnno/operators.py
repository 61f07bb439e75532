"""The stochastic Kantorovich operator and its Monte-Carlo error machinery.

The operator applied to a kernel-driven process is a finite sum of cell
averages multiplied by stochastic neurons; exchanging that finite sum with
the discrete Ito sum shows it equals the Ito integral of the deterministic
Kantorovich approximation.  Both routes are implemented and must agree to
rounding on every path, which turns the stochastic mean-square error into
the deterministic L2 error and gives the Monte-Carlo estimator an exact
quadrature oracle.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .activation import Density2D, lattice_range
from .errors import ConfigError, DomainError
from .kantorovich import (
    RULE_DIAGONAL,
    RULE_TENSOR,
    WEIGHT_RULES,
    Kernel2D,
    _coefficient_matrix,
    _coefficient_vector,
    _kantorovich_values,
    diagonal_weights,
    l2_error_pointwise,
    marginal_weights,
)
from .quadrature import CELL_QUADRATURE, LINE_QUADRATURE, QuadratureSpec
from .stochastic import EVAL_LEFT, EVAL_RULES, WienerPath, eval_nodes, generate_wiener_path

_CHUNK = 512  # fixed Monte-Carlo chunk size; independent of worker count


def default_path_steps(n: int) -> int:
    """Default path resolution: always dominates the operator resolution."""
    return max(2000, 50 * n)


@dataclass(frozen=True)
class KSnnoConfig:
    """Operator order, path resolution, Monte-Carlo budget and seed policy."""

    n: int = 20
    m: int | None = None
    paths: int = 1000
    master_seed: int = 0
    t_grid: tuple[float, ...] = (0.25, 0.5, 0.75)
    quadrature: QuadratureSpec = CELL_QUADRATURE
    line_quadrature: QuadratureSpec = LINE_QUADRATURE
    truncation_window: int = 40
    weight_rule: str = RULE_TENSOR
    eval_rule: str = EVAL_LEFT
    workers: int = 1

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"operator order n must be >= 2, got {self.n}")
        if self.m is None:
            object.__setattr__(self, "m", default_path_steps(self.n))
        if self.m < 50 * self.n:
            raise ConfigError(f"path resolution m={self.m} must be >= 50 n = {50 * self.n}")
        if self.paths < 1:
            raise ConfigError(f"path count must be >= 1, got {self.paths}")
        if self.master_seed < 0:
            raise ConfigError(f"master seed must be non-negative, got {self.master_seed}")
        if not self.t_grid:
            raise ConfigError("t_grid must be non-empty")
        if self.weight_rule not in WEIGHT_RULES:
            raise ConfigError(f"unknown weight rule {self.weight_rule!r}")
        if self.eval_rule not in EVAL_RULES:
            raise ConfigError(f"unknown eval rule {self.eval_rule!r}")
        if self.truncation_window < 2:
            raise ConfigError(f"truncation window must be >= 2, got {self.truncation_window}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))

    def with_order(self, n: int) -> "KSnnoConfig":
        """Same configuration at a different operator order, m rescaled if needed."""
        m = max(self.m, 50 * n) if self.m is not None else None
        return replace(self, n=n, m=m)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "m": self.m, "paths": self.paths, "master_seed": self.master_seed,
            "t_grid": list(self.t_grid),
            "quadrature": {"panels": self.quadrature.panels, "order": self.quadrature.order},
            "line_quadrature": {
                "panels": self.line_quadrature.panels, "order": self.line_quadrature.order,
            },
            "truncation_window": self.truncation_window,
            "weight_rule": self.weight_rule, "eval_rule": self.eval_rule,
            "workers": self.workers,
        }


def _check_t(k: Kernel2D, t: float) -> None:
    if not k.contains(t):
        raise DomainError(f"t={t} outside domain {k.domain}")


def ksnno_eval(k: Kernel2D, d2: Density2D, cfg: KSnnoConfig, t: float, path: WienerPath) -> float:
    """One realization of the operator: cell averages times stochastic neurons.

    Under the diagonal rule this is the single sum over the shared index;
    under the tensor rule the indices are independent and the sum runs over
    all index pairs with separable neurons.
    """
    _check_t(k, t)
    n = cfg.n
    c, d_end = k.domain
    jr = lattice_range(n, c, d_end)
    nodes = eval_nodes(path, cfg.eval_rule)
    if cfg.weight_rule == RULE_DIAGONAL:
        coeffs = _coefficient_vector(k, n, jr, cfg.quadrature)
        neurons = path.increments @ diagonal_weights(d2, n, t, nodes, jr)
        return float(coeffs @ neurons)
    cmat = _coefficient_matrix(k, n, jr, cfg.quadrature)
    ut = marginal_weights(d2.density, n, t, jr)[0]
    psi = path.increments @ marginal_weights(d2.density, n, nodes, jr)
    return float(ut @ (cmat @ psi))


def ksnno_via_kantorovich(
    k: Kernel2D, d2: Density2D, cfg: KSnnoConfig, t: float, path: WienerPath
) -> float:
    """The dual route: Ito integral of the deterministic operator section."""
    _check_t(k, t)
    nodes = eval_nodes(path, cfg.eval_rule)
    g = _kantorovich_values(k, d2, cfg.n, t, nodes, cfg.quadrature, cfg.weight_rule)
    return float(g @ path.increments)


@dataclass(frozen=True)
class PathwiseRow:
    t: float
    process: float
    approximation: float
    abs_error: float
    sq_error: float


def pathwise_error_table(
    k: Kernel2D, d2: Density2D, cfg: KSnnoConfig, path: WienerPath
) -> list[PathwiseRow]:
    """Process and operator values with errors, for each t in the grid."""
    nodes = eval_nodes(path, cfg.eval_rule)
    rows = []
    for t in cfg.t_grid:
        _check_t(k, t)
        x = float(k.fn(np.asarray(t, dtype=float), nodes) @ path.increments)
        xn = ksnno_eval(k, d2, cfg, t, path)
        err = abs(x - xn)
        rows.append(PathwiseRow(t=t, process=x, approximation=xn,
                                abs_error=err, sq_error=(x - xn) ** 2))
    return rows


@dataclass(frozen=True)
class MseEstimate:
    mse: float
    standard_error: float
    paths: int


def _squared_error_integrand(
    k: Kernel2D, d2: Density2D, cfg: KSnnoConfig, t: float, nodes: np.ndarray
) -> np.ndarray:
    g = _kantorovich_values(k, d2, cfg.n, t, nodes, cfg.quadrature, cfg.weight_rule)
    return g - k.fn(np.asarray(t, dtype=float), nodes)


def mse_estimate(k: Kernel2D, d2: Density2D, cfg: KSnnoConfig, t: float) -> MseEstimate:
    """Monte-Carlo mean of the squared pathwise error over independent paths.

    Each sample drives the process and the operator with the same path, so
    the estimator targets exactly the quantity the isometry equates to the
    deterministic L2 error.  Results depend only on (config, seed), not on
    the worker count: paths come from per-index substreams and chunks are
    reduced in index order with compensated summation.
    """
    if cfg.paths < 2:
        raise DomainError(f"need at least 2 paths for a standard error, got {cfg.paths}")
    _check_t(k, t)
    c, d_end = k.domain
    template = generate_wiener_path(cfg.master_seed, 0, cfg.m, (c, d_end))
    nodes = eval_nodes(template, cfg.eval_rule)
    g = _squared_error_integrand(k, d2, cfg, t, nodes)

    def chunk_sq_errors(start: int) -> np.ndarray:
        stop = min(start + _CHUNK, cfg.paths)
        block = np.empty((stop - start, cfg.m))
        for i in range(start, stop):
            block[i - start] = generate_wiener_path(cfg.master_seed, i, cfg.m, (c, d_end)).increments
        e = block @ g
        return e * e

    starts = range(0, cfg.paths, _CHUNK)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(chunk_sq_errors, starts))
    else:
        parts = [chunk_sq_errors(s) for s in starts]
    sq = np.concatenate(parts)
    mse = math.fsum(sq.tolist()) / cfg.paths
    se = float(np.std(sq, ddof=1) / math.sqrt(cfg.paths))
    return MseEstimate(mse=mse, standard_error=se, paths=cfg.paths)


@dataclass(frozen=True)
class IsometryReport:
    """Monte-Carlo MSE against the deterministic L2-error oracle at one (n, t)."""

    n: int
    t: float
    mse: float
    standard_error: float
    oracle: float
    gap: float | None
    tolerance: float

    @property
    def applicable(self) -> bool:
        return self.gap is not None and math.isfinite(self.gap)

    @property
    def passed(self) -> bool:
        if self.gap is None:
            return True
        return self.gap <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "n": self.n, "t": self.t, "mse": self.mse,
            "standard_error": self.standard_error, "oracle": self.oracle,
            "gap": self.gap, "tolerance": self.tolerance,
            "applicable": self.applicable, "passed": self.passed,
        }


def isometry_gap(
    k: Kernel2D, d2: Density2D, cfg: KSnnoConfig, t: float, tolerance: float = 0.15
) -> IsometryReport:
    """Relative gap between the Monte-Carlo MSE and the quadrature oracle."""
    est = mse_estimate(k, d2, cfg, t)
    oracle = l2_error_pointwise(
        k, d2, cfg.n, t, cfg.quadrature, cfg.weight_rule, cfg.line_quadrature
    )
    if oracle <= 1e-14:
        noise = 3.0 * est.standard_error + 1e-12
        gap = None if est.mse <= noise else math.inf
    else:
        gap = abs(est.mse - oracle) / oracle
    return IsometryReport(
        n=cfg.n, t=t, mse=est.mse, standard_error=est.standard_error,
        oracle=oracle, gap=gap, tolerance=tolerance,
    )


@dataclass(frozen=True)
class MseEntry:
    """Per-order sweep results, grid-averaged with the per-t breakdown kept."""

    n: int
    mse_mc: float | None
    mse_se: float | None
    oracle_d: float
    isometry_gap: float | None
    mse_by_t: tuple[float, ...] = ()
    oracle_by_t: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "n": self.n, "mse_mc": self.mse_mc, "mse_se": self.mse_se,
            "oracle_d": self.oracle_d, "isometry_gap": self.isometry_gap,
            "mse_by_t": list(self.mse_by_t), "oracle_by_t": list(self.oracle_by_t),
        }


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared}


@dataclass(frozen=True)
class MseReport:
    """A full order sweep: Monte-Carlo MSE, oracle errors and fitted decay."""

    entries: tuple[MseEntry, ...]
    t_grid: tuple[float, ...]
    weight_rule: str
    fit: SlopeFit | None
    oracle_fit: SlopeFit | None
    oracle_fit_hires: SlopeFit | None = None

    def to_dict(self) -> dict:
        return {
            "t_grid": list(self.t_grid),
            "weight_rule": self.weight_rule,
            "entries": [e.to_dict() for e in self.entries],
            "fit": None if self.fit is None else self.fit.to_dict(),
            "oracle_fit": None if self.oracle_fit is None else self.oracle_fit.to_dict(),
            "oracle_fit_hires": (
                None if self.oracle_fit_hires is None else self.oracle_fit_hires.to_dict()
            ),
        }

    def csv_header(self) -> list[str]:
        cols = ["n", "mse_mc", "mse_se", "oracle_d", "isometry_gap"]
        cols += [f"mse_t{t:g}" for t in self.t_grid]
        cols += [f"oracle_t{t:g}" for t in self.t_grid]
        return cols

    def csv_rows(self) -> list[list]:
        rows = []
        for e in self.entries:
            row = [e.n, e.mse_mc, e.mse_se, e.oracle_d, e.isometry_gap]
            row += list(e.mse_by_t) if e.mse_by_t else [None] * len(self.t_grid)
            row += list(e.oracle_by_t)
            rows.append(row)
        return rows
