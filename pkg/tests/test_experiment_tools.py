import math
import numpy as np
import pytest
from models.parameters import ModelParams
from models.results import BoundaryFlag, Outcome
from models.states import CouplingMode
from models.trajectory import EventKind, IntegratorConfig
from tools.experiment_tools import (
    boundary_curve,
    classify_orbit,
    compare_full_vs_averaged,
    critical_width,
    escape_boundary,
    initial_quantum_state,
    oscillation_period,
    period_quadrature_oracle,
    simulate_driven,
    simulate_slow,
    slow_config,
)
from tools.potential_tools import params_from_ratio, slow_coefficients
from utils.exceptions import BracketInvalid, ParameterError, RegimeViolation, TooFewCycles

UNCOUPLED = CouplingMode.uncoupled()
PARTIAL = CouplingMode.partial()
FULL = CouplingMode.full()


@pytest.fixture
def eff():
    return slow_coefficients(1.0, 0.1, 3.0)


@pytest.fixture
def weak_eff():
    return slow_coefficients(1.0, 0.01, 3.0)


def uncoupled_orbit(x0, eff, horizon):
    return simulate_slow(
        initial_quantum_state(x0, 0.1), UNCOUPLED, eff, slow_config(eff, UNCOUPLED, horizon)
    )


def test_slow_config_defaults(eff):
    config = slow_config(eff, PARTIAL)
    assert config.escape_threshold == pytest.approx(3.0)
    assert config.detect_width_collapse
    assert not slow_config(eff, UNCOUPLED).detect_width_collapse


def test_slow_config_needs_threshold_outside_volcano():
    eff = slow_coefficients(1.0, 0.1, 1.0)
    with pytest.raises(ParameterError):
        slow_config(eff, FULL)
    assert slow_config(eff, FULL, escape_threshold=5.0).escape_threshold == 5.0


def test_release_beyond_turning_point_escapes(eff):
    orbit = classify_orbit(1.01, 0.1, UNCOUPLED, eff, horizon=200.0)
    assert orbit.outcome == Outcome.ESCAPED
    assert 0.0 < orbit.time < 200.0


def test_release_inside_turning_point_is_bounded(eff):
    orbit = classify_orbit(0.99, 0.1, UNCOUPLED, eff, horizon=200.0)
    assert orbit.outcome == Outcome.BOUNDED
    assert orbit.time is None
    assert orbit.max_abs_mean == pytest.approx(0.99, abs=1e-3)


def test_width_collapse_is_closure_breakdown(eff):
    orbit = classify_orbit(0.5, 0.01, PARTIAL, eff, horizon=50.0, w_accel=-5.0)
    assert orbit.outcome == Outcome.CLOSURE_BREAKDOWN
    assert orbit.time < 1.0


@pytest.mark.slow
@pytest.mark.parametrize(
    "mode, x0",
    [(PARTIAL, 0.5), (PARTIAL, 0.83), (FULL, 0.5), (FULL, 0.72)],
    ids=["partial-0.5", "partial-0.83", "full-0.5", "full-0.72"],
)
def test_narrow_packets_stay_bounded(eff, mode, x0):
    assert classify_orbit(x0, 0.1, mode, eff, horizon=200.0).bounded


@pytest.mark.slow
def test_wide_packet_kicks_particle_out(weak_eff):
    assert classify_orbit(1.0, 3.0, UNCOUPLED, weak_eff).bounded

    trajectory = simulate_slow(initial_quantum_state(1.0, 3.0), PARTIAL, weak_eff)
    event = trajectory.final_event
    assert event.kind == EventKind.ESCAPE
    assert abs(event.state[0]) > 3.16


@pytest.mark.slow
def test_skewness_helps_escape(weak_eff):
    assert classify_orbit(1.0, 0.1, PARTIAL, weak_eff).bounded
    skewed = classify_orbit(1.0, 0.1, CouplingMode.skewed(8.699), weak_eff)
    assert skewed.outcome == Outcome.ESCAPED


@pytest.mark.slow
def test_uncoupled_boundary_is_turning_point(eff):
    x_max = escape_boundary(0.2, UNCOUPLED, eff, horizon=200.0)
    assert x_max == pytest.approx(1.0, abs=1e-3)


@pytest.mark.slow
def test_partial_boundary_brackets(eff):
    tol = 1e-3
    x_max = escape_boundary(0.1, PARTIAL, eff, horizon=200.0, bisect_tol=tol)
    assert 0.83 < x_max < 0.99
    assert classify_orbit(x_max - 2 * tol, 0.1, PARTIAL, eff, horizon=200.0).bounded
    assert not classify_orbit(x_max + 2 * tol, 0.1, PARTIAL, eff, horizon=200.0).bounded


@pytest.mark.slow
def test_full_boundary_sits_below_partial(eff):
    # Measured gap is about 0.108; see DESIGN.md "Full-mode boundary"
    full = escape_boundary(0.1, FULL, eff, horizon=200.0)
    partial = escape_boundary(0.1, PARTIAL, eff, horizon=200.0)
    assert full == pytest.approx(0.727, abs=0.01)
    assert partial == pytest.approx(0.835, abs=0.01)
    assert 0.09 < partial - full < 0.13


@pytest.mark.slow
def test_full_boundary_below_uncoupled(eff):
    full = escape_boundary(0.1, FULL, eff, horizon=200.0)
    uncoupled = escape_boundary(0.1, UNCOUPLED, eff, horizon=200.0)
    assert 0.72 < full < uncoupled


@pytest.mark.slow
@pytest.mark.parametrize("lam, expected", [(0.1, 0.7277), (0.01, 2.3071)])
def test_full_boundary_at_vanishing_width(lam, expected):
    # Full mode stays well inside the turning point as W0 -> 0; see DESIGN.md
    eff = slow_coefficients(1.0, lam, 3.0)
    x_max = escape_boundary(1e-4, FULL, eff, horizon=200.0)
    assert x_max == pytest.approx(expected, rel=0.01)
    assert x_max < 0.8 * eff.turning_point


@pytest.mark.slow
def test_full_boundary_flat_for_weak_quartic(weak_eff):
    sweep = boundary_curve([0.01, 0.1, 0.5, 1.0], FULL, weak_eff, horizon=200.0, jobs=1)
    maxima = [point.x_max for point in sweep.points]
    assert all(point.flag == BoundaryFlag.OK for point in sweep.points)
    assert (max(maxima) - min(maxima)) / max(maxima) < 0.05


@pytest.mark.slow
def test_partial_boundary_shrinks_with_width(eff):
    tol = 1e-3
    sweep = boundary_curve(
        [0.01, 0.05, 0.1, 0.2, 0.3], PARTIAL, eff, horizon=200.0, bisect_tol=tol, jobs=1
    )
    maxima = [point.x_max for point in sweep.points]
    assert all(b <= a + tol for a, b in zip(maxima, maxima[1:]))
    assert maxima[0] > maxima[-1]


@pytest.mark.slow
def test_boundary_inside_turning_point_near_volcano_onset():
    eff = slow_coefficients(1.0, 0.1, 2.1)
    tol = 1e-3
    sweep = boundary_curve([0.001, 0.01, 0.03], PARTIAL, eff, horizon=200.0, bisect_tol=tol, jobs=1)
    for point in sweep.points:
        assert point.x_max <= eff.turning_point + tol


def test_bracket_all_escaping(eff):
    with pytest.raises(BracketInvalid) as excinfo:
        escape_boundary(0.1, UNCOUPLED, eff, horizon=100.0, bracket=(1.05, 1.4))
    assert excinfo.value.all_escape


def test_bracket_all_bounded(eff):
    with pytest.raises(BracketInvalid) as excinfo:
        escape_boundary(0.1, UNCOUPLED, eff, horizon=50.0, bracket=(0.1, 0.5))
    assert not excinfo.value.all_escape


def test_boundary_curve_flags_unstable_origin():
    eff = slow_coefficients(1.0, 0.5, 3.0)
    sweep = boundary_curve([0.1], PARTIAL, eff, horizon=100.0, jobs=1)
    point = sweep.points[0]
    assert point.flag == BoundaryFlag.ALL_ESCAPE
    assert point.x_max == 0.0


def test_boundary_curve_rejects_bad_grids(eff):
    with pytest.raises(ParameterError):
        boundary_curve([], PARTIAL, eff)
    with pytest.raises(ParameterError):
        boundary_curve([0.2, 0.1], PARTIAL, eff)


@pytest.mark.slow
def test_boundary_curve_is_ordered_and_parallel_safe(eff):
    widths = [0.05, 0.1, 0.2]
    serial = boundary_curve(widths, UNCOUPLED, eff, horizon=50.0, bisect_tol=0.01, jobs=1)
    parallel = boundary_curve(widths, UNCOUPLED, eff, horizon=50.0, bisect_tol=0.01, jobs=3)
    assert [p.w0 for p in serial.points] == widths
    assert serial.points == parallel.points
    for point in serial.points:
        assert point.flag == BoundaryFlag.OK
        assert point.x_max <= serial.bracket_high


@pytest.mark.slow
def test_boundary_grows_as_quartic_weakens():
    maxima = []
    for lam in (0.5, 0.1, 0.05, 0.01):
        eff = slow_coefficients(1.0, lam, 3.0)
        sweep = boundary_curve([0.1], PARTIAL, eff, horizon=200.0, jobs=1)
        maxima.append(sweep.points[0].x_max)
    assert all(b > a for a, b in zip(maxima, maxima[1:]))


@pytest.mark.slow
@pytest.mark.parametrize("lam", [0.5, 0.1, 0.05, 0.01])
def test_vanishing_width_recovers_turning_point(lam):
    eff = slow_coefficients(1.0, lam, 3.0)
    x_max = escape_boundary(1e-4, PARTIAL, eff, horizon=200.0)
    assert x_max == pytest.approx(eff.turning_point, rel=0.02)


@pytest.mark.slow
@pytest.mark.parametrize("lam", [0.1, 0.01])
def test_critical_width(lam):
    eff = slow_coefficients(1.0, lam, 3.0)
    w_star = critical_width(PARTIAL, eff, horizon=200.0)
    assert w_star is not None
    assert w_star <= 5.0
    assert not classify_orbit(0.01, w_star + 0.05, PARTIAL, eff, horizon=200.0).bounded


def test_quadrature_oracle_harmonic_limit(eff):
    assert period_quadrature_oracle(1e-6, eff) == pytest.approx(2 * math.pi / math.sqrt(0.5), rel=1e-9)


def test_quadrature_oracle_grows_toward_barrier(eff):
    periods = [period_quadrature_oracle(x0, eff) for x0 in (0.5, 0.9, 0.99, 0.9999)]
    assert all(b > a for a, b in zip(periods, periods[1:]))
    assert periods[2] > 2 * periods[0]


def test_quadrature_oracle_domain(eff):
    with pytest.raises(ParameterError):
        period_quadrature_oracle(1.0, eff)
    with pytest.raises(ParameterError):
        period_quadrature_oracle(0.0, eff)
    with pytest.raises(ParameterError):
        period_quadrature_oracle(0.5, slow_coefficients(1.0, 0.1, 1.0))


def test_small_amplitude_period(eff):
    estimate = oscillation_period(uncoupled_orbit(1e-3, eff, 60.0))
    assert estimate.period == pytest.approx(2 * math.pi / math.sqrt(0.5), rel=1e-3)
    assert estimate.method == "upward_crossings"
    assert estimate.cycles >= 2


@pytest.mark.parametrize("fraction", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_period_matches_oracle(eff, fraction):
    x0 = fraction * eff.turning_point
    estimate = oscillation_period(uncoupled_orbit(x0, eff, 100.0))
    assert estimate.period == pytest.approx(period_quadrature_oracle(x0, eff), rel=1e-3)
    assert estimate.spread < 1e-3


def test_period_lengthens_near_barrier(eff):
    short = oscillation_period(uncoupled_orbit(0.5, eff, 200.0)).period
    long = oscillation_period(uncoupled_orbit(0.99, eff, 200.0)).period
    assert long > 2 * short


def test_period_from_maxima(eff):
    # Offset orbit that never changes sign
    config = IntegratorConfig(t_end=60.0)
    trajectory = simulate_slow((0.3, 0.0, 0.1, 0.0, 0.0), UNCOUPLED, eff, config)
    shifted = trajectory.model_copy(update={"states": trajectory.states + np.array([2.0, 0, 0, 0, 0])})
    estimate = oscillation_period(shifted)
    assert estimate.method == "maxima"
    assert estimate.period == pytest.approx(period_quadrature_oracle(0.3, eff), rel=1e-3)


def test_too_few_cycles(eff):
    with pytest.raises(TooFewCycles):
        oscillation_period(uncoupled_orbit(0.5, eff, 5.0))


def test_compare_without_drive_is_exact():
    params = ModelParams(omega_sq=1.0, lam=0.1, epsilon=0.0, big_omega=10.0)
    for system in ("classical", "quantum"):
        report = compare_full_vs_averaged(params, 0.5, 5.0, system=system)
        assert report.max_abs == 0.0
        assert report.rms == 0.0
        assert report.samples == 8
    assert report.width_max_abs == 0.0


def test_compare_rejects_slow_drive():
    params = ModelParams(omega_sq=1.0, lam=0.1, epsilon=1.0, big_omega=1.0 / math.sqrt(3.0))
    with pytest.raises(RegimeViolation):
        compare_full_vs_averaged(params, 0.5, 20.0)


def test_compare_classical_reference_drive():
    params = ModelParams(omega_sq=1.0, lam=0.1, epsilon=100.0, big_omega=100.0 / math.sqrt(3.0))
    horizon = 3 * 2 * math.pi / math.sqrt(0.5)
    report = compare_full_vs_averaged(params, 0.5, horizon)
    assert report.rms < 0.05
    assert report.width_rms is None
    assert list(report.rows) == ["t", "slow", "strobe", "fast_corrected", "abs_err"]
    assert report.rows["abs_err"][0] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.slow
@pytest.mark.parametrize("system", ["classical", "quantum"])
def test_compare_improves_with_faster_drive(system):
    horizon = 3 * 2 * math.pi / math.sqrt(0.5)
    rms = []
    for smallness in (0.03, 0.015):
        params = params_from_ratio(1.0, 0.0, 3.0, smallness=smallness)
        rms.append(compare_full_vs_averaged(params, 0.5, horizon, system=system).rms)
    assert rms[1] < rms[0]


@pytest.mark.slow
def test_quantum_compare_does_not_converge_with_quartic():
    # Averaged width equation departs from the driven one at lam > 0; see DESIGN.md
    horizon = 3 * 2 * math.pi / math.sqrt(0.5)
    rms = []
    for smallness in (0.03, 0.015):
        params = params_from_ratio(1.0, 0.1, 3.0, smallness=smallness)
        rms.append(compare_full_vs_averaged(params, 0.5, horizon, system="quantum").rms)
    assert all(value > 0.5 for value in rms)
    assert rms[1] > 0.9 * rms[0]


def test_simulate_driven_from_slow_state():
    params = params_from_ratio(1.0, 0.1, 3.0)
    trajectory = simulate_driven(initial_quantum_state(0.5, 0.1), params, quantum=True, horizon=2.0)
    assert trajectory.dimension == 5
    assert trajectory.events == []
    assert trajectory.times[-1] == 2.0
    assert trajectory.states[0][0] != 0.5

    classical = simulate_driven((0.5, 0.0), params, quantum=False, horizon=2.0)
    assert classical.dimension == 2
