import math

import numpy as np
import pytest

from ksnno.activation import (
    Activation,
    Density1D,
    Density2D,
    compact_partition_sum,
    density2d_eval,
    density_eval,
    density_l2_norm,
    discrete_moment,
    lattice_range,
    partition_sum,
    sigmoid_eval,
    verify_sigmoidal_conditions,
)
from ksnno.errors import ConfigError, DomainError
from ksnno.quadrature import QuadratureSpec

LOGISTIC = Activation()
DENSITY = Density1D(LOGISTIC)
DENSITY2 = Density2D(DENSITY)


def logistic_closed_form(t: float) -> float:
    return 1.0 / (1.0 + math.exp(-t))


def density_closed_form(t: float) -> float:
    return 0.5 * (logistic_closed_form(t + 1.0) - logistic_closed_form(t - 1.0))


def brute_lattice_sum(t: float, beta: float = 0.0, window: int = 60) -> float:
    # independent oracle: plain python summation over a wide window
    total = 0.0
    for j in range(round(t) - window, round(t) + window + 1):
        total += density_closed_form(t - j) * abs(t - j) ** beta
    return total


class TestSigmoid:
    def test_zero_is_half(self):
        assert sigmoid_eval(LOGISTIC, 0.0) == 0.5

    def test_closed_form_values(self):
        assert sigmoid_eval(LOGISTIC, 1.0) == pytest.approx(0.7310585786, abs=1e-10)
        assert sigmoid_eval(LOGISTIC, -1.0) == pytest.approx(0.2689414214, abs=1e-10)

    def test_range_and_monotonicity(self):
        grid = np.linspace(-40, 40, 401)
        vals = LOGISTIC(grid)
        assert np.all(vals > 0) and np.all(vals < 1)
        assert np.all(np.diff(vals) >= 0)

    def test_nonfinite_rejected(self):
        with pytest.raises(DomainError):
            sigmoid_eval(LOGISTIC, math.nan)
        with pytest.raises(DomainError):
            sigmoid_eval(LOGISTIC, math.inf)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            Activation(kind="relu")

    def test_no_overflow_for_large_negative(self):
        assert LOGISTIC(-800.0) == 0.0


class TestDensity:
    def test_closed_form_values(self):
        assert density_eval(DENSITY, 0.0) == pytest.approx(0.2310585786, abs=1e-10)
        assert density_eval(DENSITY, 2.0) == pytest.approx(0.1107577741, abs=1e-10)
        assert density_eval(DENSITY, -2.0) == density_eval(DENSITY, 2.0)

    def test_nonnegative_and_even(self):
        grid = np.linspace(-30, 30, 1201)
        vals = DENSITY(grid)
        assert np.all(vals >= 0)
        assert np.max(np.abs(vals - DENSITY(-grid))) <= 1e-12

    def test_density_at_two_positive(self):
        assert density_eval(DENSITY, 2.0) > 0

    def test_2d_product_and_symmetry(self):
        assert density2d_eval(DENSITY2, 0.0, 0.0) == pytest.approx(0.0533880666, abs=1e-9)
        assert density2d_eval(DENSITY2, 2.0, 0.0) == pytest.approx(
            density_eval(DENSITY, 2.0) * density_eval(DENSITY, 0.0)
        )
        rng = np.random.default_rng(7)
        for t, s in rng.uniform(-4, 4, size=(20, 2)):
            assert density2d_eval(DENSITY2, t, s) == density2d_eval(DENSITY2, s, t)


class TestPartitionSum:
    def test_reference_points(self):
        assert partition_sum(DENSITY, 0.37) == pytest.approx(1.0, abs=1e-10)
        assert partition_sum(DENSITY, 0.0) == pytest.approx(1.0, abs=1e-10)

    def test_lattice_shift_invariance(self):
        for t in (0.0, 0.21, -1.73):
            assert partition_sum(DENSITY, t) == pytest.approx(
                partition_sum(DENSITY, t + 1.0), abs=1e-12
            )

    def test_thousand_random_points(self):
        rng = np.random.default_rng(42)
        ts = rng.uniform(-5, 5, 1000)
        worst = max(abs(partition_sum(DENSITY, t) - 1.0) for t in ts)
        assert worst <= 1e-10

    def test_small_window_rejected(self):
        with pytest.raises(ConfigError):
            partition_sum(Density1D(Activation(truncation_window=1)), 0.3)

    def test_matches_brute_force(self):
        for t in (0.0, 0.37, -2.6):
            assert partition_sum(DENSITY, t) == pytest.approx(brute_lattice_sum(t), abs=1e-12)


class TestCompactPartitionSum:
    def test_lower_bound_reference(self):
        val = compact_partition_sum(DENSITY, 0.5, n=5, c=0.0, d_end=1.0)
        assert val >= 0.1107577741

    def test_direct_enumeration(self):
        expected = density_closed_form(1.0) + density_closed_form(0.0)
        assert compact_partition_sum(DENSITY, 1.0, n=1, c=0.0, d_end=2.0) == pytest.approx(
            expected, abs=1e-14
        )

    def test_dominated_by_full_sum(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            n = int(rng.integers(2, 30))
            t = float(rng.uniform(0, 1))
            compact = compact_partition_sum(DENSITY, t, n=n, c=0.0, d_end=1.0)
            assert compact <= partition_sum(DENSITY, n * t) + 1e-12
            assert compact >= density_closed_form(2.0)

    def test_empty_range_rejected(self):
        with pytest.raises(DomainError):
            compact_partition_sum(DENSITY, 0.5, n=1, c=0.4, d_end=0.9)

    def test_point_outside_interval_rejected(self):
        with pytest.raises(DomainError):
            compact_partition_sum(DENSITY, 1.5, n=5, c=0.0, d_end=1.0)


class TestLatticeRange:
    def test_unit_interval(self):
        assert list(lattice_range(5, 0.0, 1.0)) == [0, 1, 2, 3, 4]

    def test_degenerate_rejected(self):
        with pytest.raises(DomainError):
            lattice_range(1, 0.4, 0.9)


class TestDiscreteMoment:
    def test_order_zero_is_one(self):
        grid = np.linspace(-3, 3, 61)
        assert discrete_moment(DENSITY, 0.0, grid) == pytest.approx(1.0, abs=1e-8)

    def test_single_point_grid(self):
        assert discrete_moment(DENSITY, 0.0, [0.0]) == pytest.approx(
            partition_sum(DENSITY, 0.0)
        )

    def test_moment_envelope(self):
        grid = np.linspace(-2, 2, 41)
        m0 = discrete_moment(DENSITY, 0.0, grid)
        m1 = discrete_moment(DENSITY, 1.0, grid)
        m2 = discrete_moment(DENSITY, 2.0, grid)
        assert m1 <= max(m0, m2)

    def test_matches_brute_force(self):
        for beta in (0.5, 1.0, 2.0):
            got = discrete_moment(DENSITY, beta, [0.3])
            assert got == pytest.approx(brute_lattice_sum(0.3, beta), rel=1e-10)

    def test_negative_order_rejected(self):
        with pytest.raises(DomainError):
            discrete_moment(DENSITY, -0.5, [0.0])

    def test_empty_grid_rejected(self):
        with pytest.raises(DomainError):
            discrete_moment(DENSITY, 1.0, [])


class TestSigmoidalConditions:
    def test_logistic_passes(self):
        report = verify_sigmoidal_conditions(LOGISTIC, tol=1e-9)
        assert report.passed
        assert {c.name for c in report.checks} >= {
            "odd_symmetry", "concave_right_half", "left_tail_decay",
        }

    def test_shifted_sigmoid_fails_oddness(self):
        broken = Activation(kind="logistic", fn=lambda t: np.clip(
            1.0 / (1.0 + np.exp(-np.asarray(t, dtype=float))) + 0.1, 0.0, 1.0
        ))
        report = verify_sigmoidal_conditions(broken, tol=1e-9)
        odd = next(c for c in report.checks if c.name == "odd_symmetry")
        assert not odd.passed
        assert not report.passed

    def test_large_gamma_still_passes_decay(self):
        report = verify_sigmoidal_conditions(Activation(gamma=5.0), tol=1e-9)
        decay = next(c for c in report.checks if c.name == "left_tail_decay")
        assert decay.passed

    def test_report_round_trips_to_dict(self):
        payload = verify_sigmoidal_conditions(LOGISTIC, tol=1e-9).to_dict()
        assert payload["passed"] is True
        assert len(payload["checks"]) == 4


class TestDensityL2Norm:
    def test_degenerate_interval(self):
        assert density_l2_norm(DENSITY, (0.0, 0.0)) == 0.0

    def test_unit_interval_against_simpson_oracle(self):
        # independent oracle: dense Simpson rule on the squared density
        xs = np.linspace(0.0, 1.0, 20001)
        ys = DENSITY(xs) ** 2
        simpson = (xs[1] - xs[0]) / 3 * (
            ys[0] + ys[-1] + 4 * ys[1:-1:2].sum() + 2 * ys[2:-1:2].sum()
        )
        got = density_l2_norm(DENSITY, (0.0, 1.0))
        assert got == pytest.approx(math.sqrt(simpson), rel=1e-9)
        assert 0 < got <= DENSITY(0.0)

    def test_monotone_in_window(self):
        norms = [density_l2_norm(DENSITY, (-a, a)) for a in (1.0, 2.0, 5.0, 10.0, 40.0)]
        assert all(b >= a for a, b in zip(norms, norms[1:]))
        # saturation at the full-line value
        assert norms[-1] == pytest.approx(norms[-2], rel=1e-10)

    def test_quadrature_spec_respected(self):
        coarse = density_l2_norm(DENSITY, (0.0, 1.0), QuadratureSpec(panels=2, order=4))
        fine = density_l2_norm(DENSITY, (0.0, 1.0), QuadratureSpec(panels=128, order=8))
        assert coarse == pytest.approx(fine, rel=1e-6)
