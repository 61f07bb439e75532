"""Seeded Wiener paths, discretized stochastic integrals and stochastic neurons.

Paths are generated on uniform grids from counter-based substreams: the
child stream for path i is derived by hashing (master seed, i), so any
subset of paths can be regenerated bit-identically in any order and on any
number of workers.  Deterministic integrands are integrated against path
increments with the left-endpoint rule; a midpoint variant exists because
coarse fixture grids need it to match trapezoidal time integrals exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .activation import Density1D, Density2D, density_l2_norm, lattice_range
from .errors import ConfigError, DomainError, FixtureFormatError
from .kantorovich import RULE_DIAGONAL, diagonal_weights, marginal_weights
from .quadrature import QuadratureSpec

EVAL_LEFT = "left"
EVAL_MIDPOINT = "midpoint"
EVAL_RULES = (EVAL_LEFT, EVAL_MIDPOINT)

TIME_RULES = ("left", "right", "trapezoid")


@dataclass(frozen=True, eq=False)
class WienerPath:
    """A sampled Wiener path on a uniform grid.

    values[0] is 0 and values[k+1] - values[k] equals increments[k] exactly
    (increments are re-derived from the cumulative sums so the telescoping
    identity holds in floating point, not just in distribution).
    """

    times: np.ndarray
    increments: np.ndarray
    values: np.ndarray
    seed: int | None
    path_index: int = 0

    @property
    def steps(self) -> int:
        return len(self.increments)

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def interval(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])


def _path_from_draws(times: np.ndarray, draws: np.ndarray, seed, path_index) -> WienerPath:
    values = np.concatenate(([0.0], np.cumsum(draws)))
    increments = np.diff(values)
    times = np.asarray(times, dtype=float)
    times.setflags(write=False)
    increments.setflags(write=False)
    values.setflags(write=False)
    return WienerPath(times=times, increments=increments, values=values,
                      seed=seed, path_index=path_index)


def path_from_increments(times, increments, seed: int | None = None, path_index: int = 0) -> WienerPath:
    """Build a path from explicit increments (fixtures, synthetic test paths)."""
    times = np.asarray(times, dtype=float)
    increments = np.asarray(increments, dtype=float)
    if len(times) != len(increments) + 1:
        raise DomainError("need len(times) == len(increments) + 1")
    if np.any(np.diff(times) <= 0):
        raise DomainError("times must be strictly increasing")
    if not np.all(np.isfinite(increments)):
        raise DomainError("increments must be finite")
    return _path_from_draws(times, increments, seed, path_index)


def _substream(seed: int, path_index: int) -> np.random.Generator:
    if seed < 0:
        raise ConfigError(f"master seed must be non-negative, got {seed}")
    if path_index < 0:
        raise ConfigError(f"path_index must be non-negative, got {path_index}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(path_index,))
    return np.random.Generator(np.random.Philox(ss))


def generate_wiener_path(
    seed: int,
    path_index: int,
    m: int,
    interval: tuple[float, float] = (0.0, 1.0),
) -> WienerPath:
    """Sample a Wiener path with m steps on the interval.

    Identical (seed, path_index, m) always yields bit-identical increments;
    distinct path_index values use statistically independent substreams.
    """
    if m < 2:
        raise DomainError(f"need at least 2 steps, got m={m}")
    c, d_end = interval
    if not (c < d_end):
        raise DomainError(f"empty interval [{c}, {d_end}]")
    rng = _substream(seed, path_index)
    dt = (d_end - c) / m
    draws = rng.standard_normal(m) * math.sqrt(dt)
    times = c + dt * np.arange(m + 1)
    return _path_from_draws(times, draws, seed, path_index)


def eval_nodes(path: WienerPath, eval_rule: str = EVAL_LEFT) -> np.ndarray:
    """Grid points at which deterministic integrands are evaluated."""
    if eval_rule == EVAL_LEFT:
        return path.times[:-1]
    if eval_rule == EVAL_MIDPOINT:
        return 0.5 * (path.times[:-1] + path.times[1:])
    raise ConfigError(f"unknown eval rule {eval_rule!r}; expected one of {EVAL_RULES}")


def ito_integral(f: Callable, path: WienerPath, eval_rule: str = EVAL_LEFT) -> float:
    """Discretized stochastic integral sum f(s_k) * dW_k.

    The default evaluates f at left endpoints (the standard Ito convention);
    for deterministic integrands the choice only shifts the O(1/m) bias.
    """
    nodes = eval_nodes(path, eval_rule)
    try:
        fv = np.asarray(f(nodes), dtype=float)
        if fv.shape != nodes.shape:
            raise TypeError
    except (TypeError, ValueError):
        fv = np.asarray([f(x) for x in nodes], dtype=float)
    if not np.all(np.isfinite(fv)):
        raise DomainError("integrand is not finite on the path grid")
    return float(fv @ path.increments)


def sample_process(k, path: WienerPath, t: float, eval_rule: str = EVAL_LEFT) -> float:
    """One sample of the kernel-driven process: integral of zeta(t, .) dW."""
    if not k.contains(t):
        raise DomainError(f"t={t} outside domain {k.domain}")
    return ito_integral(lambda s: k.fn(np.asarray(t, dtype=float), s), path, eval_rule)


def path_time_integral(path: WienerPath, rule: str = "trapezoid") -> float:
    """Quadrature of the recorded path values over the grid."""
    w = path.values
    dt = path.step
    if rule == "left":
        return float(np.sum(w[:-1]) * dt)
    if rule == "right":
        return float(np.sum(w[1:]) * dt)
    if rule == "trapezoid":
        return float(np.trapezoid(w, dx=dt))
    raise ConfigError(f"unknown time rule {rule!r}; expected one of {TIME_RULES}")


# ---------------------------------------------------------------------------
# stochastic neurons


def neuron_weight_values(
    d2: Density2D,
    n: int,
    j: int,
    t: float,
    s: np.ndarray,
    interval: tuple[float, float],
    rule: str = RULE_DIAGONAL,
) -> np.ndarray:
    """The normalized weight of lattice index j as a function of s."""
    c, d_end = interval
    jr = lattice_range(n, c, d_end)
    if j < jr[0] or j > jr[-1]:
        raise DomainError(f"index j={j} outside the compact range [{jr[0]}, {jr[-1]}]")
    pos = int(j - jr[0])
    if rule == RULE_DIAGONAL:
        return diagonal_weights(d2, n, t, s, jr)[:, pos]
    ut = marginal_weights(d2.density, n, t, jr)[0, pos]
    return ut * marginal_weights(d2.density, n, s, jr)[:, pos]


def stochastic_neuron(
    d2: Density2D,
    n: int,
    j: int,
    t: float,
    path: WienerPath,
    rule: str = RULE_DIAGONAL,
    eval_rule: str = EVAL_LEFT,
) -> float:
    """Ito integral of the normalized index-j weight against the path."""
    nodes = eval_nodes(path, eval_rule)
    h = neuron_weight_values(d2, n, j, t, nodes, path.interval, rule)
    return float(h @ path.increments)


@dataclass(frozen=True)
class NeuronMomentReport:
    """Monte-Carlo second moment of a stochastic neuron vs its upper bound."""

    n: int
    j: int
    t: float
    paths: int
    rule: str
    empirical: float
    standard_error: float
    upper_bound: float

    @property
    def within_bound(self) -> bool:
        return self.empirical <= self.upper_bound + 3.0 * self.standard_error

    def to_dict(self) -> dict:
        return {
            "n": self.n, "j": self.j, "t": self.t, "paths": self.paths, "rule": self.rule,
            "empirical": self.empirical, "standard_error": self.standard_error,
            "upper_bound": self.upper_bound, "within_bound": self.within_bound,
        }


def neuron_second_moment_check(
    d2: Density2D,
    n: int,
    j: int,
    t: float,
    paths: int,
    seed: int,
    m: int = 2000,
    interval: tuple[float, float] = (0.0, 1.0),
    rule: str = RULE_DIAGONAL,
) -> NeuronMomentReport:
    """Estimate E|phi_{j,n}(t, .)|^2 and compare it against the closed bound

        ||density||_2^2 / (n^2 density(2)^4) * density(nt - j)^2

    (unit increment variance).  The bound's denominator uses the compact
    lower bound density(2), which makes it generous; it is checked as an
    upper bound, not an equality.
    """
    if paths < 100:
        raise DomainError(f"need at least 100 paths, got {paths}")
    template = generate_wiener_path(seed, 0, m, interval)
    nodes = eval_nodes(template, EVAL_LEFT)
    h = neuron_weight_values(d2, n, j, t, nodes, interval, rule)
    samples = np.empty(paths)
    for i in range(paths):
        p = generate_wiener_path(seed, i, m, interval)
        phi = float(h @ p.increments)
        samples[i] = phi * phi
    empirical = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / math.sqrt(paths))
    d = d2.density
    J = d.activation.truncation_window
    norm_sq = density_l2_norm(d, (-float(J), float(J)), QuadratureSpec(panels=128, order=8)) ** 2
    bound = norm_sq / (n**2 * d(2.0) ** 4) * d(n * t - j) ** 2
    return NeuronMomentReport(
        n=n, j=j, t=t, paths=paths, rule=rule,
        empirical=empirical, standard_error=se, upper_bound=float(bound),
    )


# ---------------------------------------------------------------------------
# increment fixtures


@dataclass(frozen=True, eq=False)
class IncrementFixture:
    """Times and increments loaded from a `t,dW` table.

    The first row carries the grid origin with a zero placeholder increment;
    row k > 0 holds the increment over [t_{k-1}, t_k].
    """

    times: np.ndarray
    dw: np.ndarray
    provenance: str = "file"

    def __post_init__(self):
        if len(self.times) != len(self.dw):
            raise FixtureFormatError("times and dW columns differ in length")
        if len(self.times) < 3:
            raise FixtureFormatError("fixture needs at least 3 rows")
        if np.any(np.diff(self.times) <= 0):
            raise FixtureFormatError("times must be strictly increasing")
        if not np.all(np.isfinite(self.dw)):
            raise FixtureFormatError("increments must be finite")

    @property
    def rows(self) -> int:
        return len(self.times)

    def to_path(self) -> WienerPath:
        steps = np.diff(self.times)
        if np.max(np.abs(steps - steps[0])) > 1e-9 * steps[0]:
            raise FixtureFormatError("fixture grid must be uniform")
        return path_from_increments(self.times, self.dw[1:], seed=None)


def load_fixture(path, provenance: str | None = None) -> IncrementFixture:
    """Parse a CSV fixture with the exact header `t,dW`."""
    times: list[float] = []
    dw: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FixtureFormatError("empty fixture file") from None
        if [h.strip() for h in header] != ["t", "dW"]:
            raise FixtureFormatError(f"expected header 't,dW', got {','.join(header)!r}", row=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise FixtureFormatError(f"expected 2 columns, got {len(row)}", row=lineno)
            try:
                times.append(float(row[0]))
                dw.append(float(row[1]))
            except ValueError:
                raise FixtureFormatError(f"non-numeric value {row!r}", row=lineno) from None
    return IncrementFixture(
        times=np.asarray(times), dw=np.asarray(dw),
        provenance=provenance or str(path),
    )
