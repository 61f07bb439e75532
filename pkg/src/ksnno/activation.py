"""Sigmoidal activations and their induced density functions.

A sigmoidal activation rises from 0 at -inf to 1 at +inf.  The admissible
ones here are additionally odd around (0, 1/2), concave on t >= 0 and have
a polynomially-or-faster decaying left tail with exponent 1 + gamma.  Each
such activation induces a non-negative even bump

    density(t) = (sigma(t + 1) - sigma(t - 1)) / 2

whose integer translates form a partition of unity; the product of two
copies gives the 2-D weight used by the operators downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError
from .quadrature import LINE_QUADRATURE, QuadratureSpec, nodes_weights


def _logistic(t: np.ndarray) -> np.ndarray:
    # exp on the negative half-line only, to avoid overflow warnings
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


_SIGMOIDS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "logistic": _logistic,
}


def available_activations() -> tuple[str, ...]:
    return tuple(sorted(_SIGMOIDS))


@dataclass(frozen=True)
class Activation:
    """A named sigmoidal function with decay metadata.

    gamma is the left-tail decay exponent used in rate predictions; for the
    logistic any positive value is admissible, so it is recorded as
    configuration rather than estimated.  truncation_window is the lattice
    half-width J beyond which the induced density is treated as zero.
    """

    kind: str = "logistic"
    gamma: float = 5.0
    truncation_window: int = 40
    fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.fn is None and self.kind not in _SIGMOIDS:
            raise ConfigError(
                f"unknown activation {self.kind!r}; available: {', '.join(available_activations())}"
            )
        if not (self.gamma > 0):
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.truncation_window < 1:
            raise ConfigError(f"truncation_window must be positive, got {self.truncation_window}")

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise DomainError("activation argument must be finite")
        fn = self.fn if self.fn is not None else _SIGMOIDS[self.kind]
        out = fn(arr)
        return float(out) if np.isscalar(t) or arr.ndim == 0 else out


@dataclass(frozen=True)
class Density1D:
    """The even bump (sigma(t+1) - sigma(t-1)) / 2 induced by an activation."""

    activation: Activation = Activation()

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        out = 0.5 * (self.activation(arr + 1.0) - self.activation(arr - 1.0))
        return float(out) if np.isscalar(t) or arr.ndim == 0 else out


@dataclass(frozen=True)
class Density2D:
    """Separable 2-D density: the product of two 1-D bumps."""

    density: Density1D = Density1D()

    def __call__(self, t, s):
        return self.density(t) * self.density(s)


def sigmoid_eval(a: Activation, t: float) -> float:
    return a(t)


def density_eval(d: Density1D, t: float) -> float:
    return d(t)


def density2d_eval(d2: Density2D, t: float, s: float) -> float:
    return d2(t, s)


def partition_sum(d: Density1D, t: float) -> float:
    """Truncated lattice sum of translates; equals 1 up to the truncated tail.

    Sums density(t - j) for |j - round(t)| <= J.  The logistic tail beyond
    J = 40 is below 1e-15, so the truncation error is far inside the 1e-10
    tolerance used by the verification suite.
    """
    J = d.activation.truncation_window
    if J < 2:
        raise ConfigError(f"truncation window must be >= 2 for lattice sums, got {J}")
    if not math.isfinite(t):
        raise DomainError("t must be finite")
    center = round(t)
    j = np.arange(center - J, center + J + 1)
    return float(np.sum(d(t - j)))


def lattice_range(n: int, c: float, d_end: float) -> np.ndarray:
    """Indices ceil(n c) .. floor(n d_end) - 1 of the cells inside [c, d_end]."""
    if n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    lo = math.ceil(n * c - 1e-9)
    hi = math.floor(n * d_end + 1e-9) - 1
    if lo > hi:
        raise DomainError(
            f"empty lattice range for n={n} on [{c}, {d_end}]: ceil(nc)={lo} > floor(nd)-1={hi}"
        )
    return np.arange(lo, hi + 1)


def compact_partition_sum(d: Density1D, t: float, n: int, c: float, d_end: float) -> float:
    """Sum of density(n t - j) over the compact index range; >= density(2) > 0."""
    j = lattice_range(n, c, d_end)
    if not (c - 1e-12 <= t <= d_end + 1e-12):
        raise DomainError(f"t={t} outside [{c}, {d_end}]")
    return float(np.sum(d(n * t - j)))


def discrete_moment(d: Density1D, beta: float, t_grid) -> float:
    """Max over the grid of the truncated lattice sum of density(t-j)|t-j|^beta."""
    if beta < 0:
        raise DomainError(f"moment order must be non-negative, got {beta}")
    grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if grid.size == 0:
        raise DomainError("t_grid must be non-empty")
    J = d.activation.truncation_window
    if J < 2:
        raise ConfigError(f"truncation window must be >= 2 for lattice sums, got {J}")
    best = 0.0
    for t in grid:
        j = np.arange(round(t) - J, round(t) + J + 1)
        x = t - j
        best = max(best, float(np.sum(d(x) * np.abs(x) ** beta)))
    return best


def density_l2_norm(
    d: Density1D,
    interval: tuple[float, float],
    spec: QuadratureSpec = LINE_QUADRATURE,
) -> float:
    """L2 norm of the density over an interval, by composite quadrature."""
    c, d_end = interval
    if d_end < c:
        raise DomainError(f"empty interval [{c}, {d_end}]")
    if d_end == c:
        return 0.0
    nodes, weights = nodes_weights(c, d_end, spec)
    vals = d(nodes)
    return float(np.sqrt(weights @ (vals * vals)))


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    passed: bool
    worst: float
    detail: str

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "worst": self.worst, "detail": self.detail}


@dataclass(frozen=True)
class SigmoidalReport:
    """Numerical verification of the structural sigmoidal conditions."""

    activation_kind: str
    gamma: float
    tol: float
    checks: tuple[ConditionCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "activation": self.activation_kind,
            "gamma": self.gamma,
            "tol": self.tol,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def verify_sigmoidal_conditions(a: Activation, tol: float, t_max: float = 30.0) -> SigmoidalReport:
    """Check odd symmetry, concavity on t >= 0 and left-tail decay numerically.

    Failures are reported, never raised: a rejected activation is a result.
    Concavity uses second central differences (step 1e-3, slack 1e-9) as a
    surrogate for the analytic condition.  Decay passes when
    sigma(-t) * t^(1+gamma) stops growing on the outer half of the grid.
    """
    if not (tol > 0):
        raise DomainError(f"tol must be positive, got {tol}")

    grid = np.linspace(-t_max, t_max, 2001)
    odd_dev = float(np.max(np.abs(a(grid) + a(-grid) - 1.0)))
    mid_dev = abs(a(0.0) - 0.5)
    odd = ConditionCheck(
        name="odd_symmetry",
        passed=odd_dev <= tol and mid_dev <= tol,
        worst=max(odd_dev, mid_dev),
        detail="max |sigma(t) + sigma(-t) - 1| on the sample grid, and |sigma(0) - 1/2|",
    )

    h = 1e-3
    pos = np.linspace(0.0, t_max, 2001)
    second = a(pos + h) - 2.0 * a(pos) + a(pos - h)
    worst_second = float(np.max(second))
    concave = ConditionCheck(
        name="concave_right_half",
        passed=worst_second <= 1e-9,
        worst=worst_second,
        detail="max second central difference on t >= 0 (step 1e-3, slack 1e-9)",
    )

    tail = np.geomspace(1.0, t_max, 200)
    q = np.asarray(a(-tail)) * tail ** (1.0 + a.gamma)
    inner = float(np.max(q[tail <= t_max / 2]))
    outer = float(np.max(q[tail > t_max / 2]))
    sup_q = max(inner, outer)
    decay = ConditionCheck(
        name="left_tail_decay",
        passed=outer <= inner * (1.0 + 1e-9) and math.isfinite(sup_q),
        worst=sup_q,
        detail="sup of sigma(-t) t^(1+gamma); outer half must not exceed inner half",
    )

    sigma1 = a(1.0)
    standing = ConditionCheck(
        name="sigma_one_below_one",
        passed=sigma1 < 1.0,
        worst=sigma1,
        detail="standing assumption sigma(1) < 1",
    )

    return SigmoidalReport(
        activation_kind=a.kind,
        gamma=a.gamma,
        tol=tol,
        checks=(odd, concave, decay, standing),
    )
