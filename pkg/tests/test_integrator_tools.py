import math
import numpy as np
import pytest
from pydantic import ValidationError
from models.states import CouplingMode
from models.trajectory import EventKind, IntegratorConfig, IntegratorMethod
from tools.dynamics_tools import make_classical_slow_rhs, make_quantum_slow_rhs
from tools.integrator_tools import energy_slow, integrate, step_interpolant
from tools.potential_tools import slow_coefficients
from utils.exceptions import ParameterError


def harmonic(t, y):
    return np.array([y[1], -y[0]])


@pytest.fixture
def eff():
    return slow_coefficients(1.0, 0.1, 3.0)


def test_energy_slow(eff):
    assert energy_slow((0.0, 0.0), eff) == 0.0
    assert energy_slow((1.0, 0.0), eff) == pytest.approx(0.125)
    assert energy_slow((0.5, 0.0), eff) == pytest.approx(0.0546875)


def test_step_interpolant_reproduces_cubics():
    def p(t):
        return 2 * t**3 - t**2 + 0.5 * t - 1

    def dp(t):
        return 6 * t**2 - 2 * t + 0.5

    dense = step_interpolant(
        0.2, np.array([p(0.2), 1.0]), np.array([dp(0.2), 0.0]),
        0.9, np.array([p(0.9), 1.0]), np.array([dp(0.9), 0.0]),
    )
    assert dense(0.55) == pytest.approx([p(0.55), 1.0], rel=1e-12)


def test_adaptive_harmonic_period():
    config = IntegratorConfig(t_end=2 * math.pi, rel_tol=1e-10)
    trajectory = integrate((1.0, 0.0), harmonic, config)
    assert trajectory.times[0] == 0.0
    assert trajectory.times[-1] == pytest.approx(2 * math.pi, rel=1e-15)
    assert trajectory.states[-1] == pytest.approx([1.0, 0.0], abs=1e-8)
    assert trajectory.events == []
    assert trajectory.meta["method"] == "rk45"


def test_rk4_fourth_order():
    errors = []
    for steps in (64, 128):
        config = IntegratorConfig(method=IntegratorMethod.RK4, h=2 * math.pi / steps, t_end=2 * math.pi)
        trajectory = integrate((1.0, 0.0), harmonic, config)
        assert trajectory.times.size == steps + 1
        errors.append(np.linalg.norm(trajectory.states[-1] - [1.0, 0.0]))
    order = math.log2(errors[0] / errors[1])
    assert order == pytest.approx(4.0, abs=0.2)


def test_rk4_requires_step():
    with pytest.raises(ValidationError):
        IntegratorConfig(method=IntegratorMethod.RK4, t_end=1.0)


def test_slow_energy_conservation(eff):
    config = IntegratorConfig(t_end=100.0, rel_tol=1e-10)
    trajectory = integrate((0.5, 0.0), make_classical_slow_rhs(eff), config)
    energies = energy_slow((trajectory.states[:, 0], trajectory.states[:, 1]), eff)
    e0 = energy_slow((0.5, 0.0), eff)
    drift = np.max(np.abs(energies - e0)) / max(e0, 1e-6)
    assert drift < 1e-8


@pytest.mark.slow
def test_rk4_energy_drift_scales_as_fourth_power(eff):
    rhs = make_classical_slow_rhs(eff)
    e0 = energy_slow((0.5, 0.0), eff)
    drifts = []
    for h in (0.025, 0.0125):
        config = IntegratorConfig(method=IntegratorMethod.RK4, h=h, t_end=100.0)
        trajectory = integrate((0.5, 0.0), rhs, config)
        energies = energy_slow((trajectory.states[:, 0], trajectory.states[:, 1]), eff)
        drifts.append(np.max(np.abs(energies - e0)))
    assert drifts[0] / drifts[1] >= 15.0


def test_escape_event_is_localised(eff):
    rhs = make_classical_slow_rhs(eff)
    config = IntegratorConfig(t_end=100.0, escape_threshold=3.0)
    trajectory = integrate((1.01, 0.0), rhs, config)

    event = trajectory.final_event
    assert event.kind == EventKind.ESCAPE
    assert trajectory.escaped
    assert trajectory.times[-1] == event.time
    assert abs(event.state[0]) == pytest.approx(3.0, abs=1e-4)

    rerun = integrate((1.01, 0.0), rhs, IntegratorConfig(t_end=event.time))
    assert abs(rerun.states[-1][0]) == pytest.approx(3.0, abs=1e-4)


def test_bounded_full_mode_orbit():
    eff = slow_coefficients(1.0, 0.1, 3.0)
    config = IntegratorConfig(t_end=100.0, escape_threshold=3.0)
    rhs = make_quantum_slow_rhs(eff, CouplingMode.full())
    trajectory = integrate((0.5, 0.0, 0.1, 0.0, 0.01), rhs, config)
    assert trajectory.events == []
    assert trajectory.dimension == 5


def test_width_collapse_event():
    def shrinking(t, y):
        return np.array([y[1], 0.0, y[3], y[4], 0.0])

    config = IntegratorConfig(t_end=1.0)
    trajectory = integrate((0.0, 0.0, 0.1, -1.0, 0.0), shrinking, config)
    event = trajectory.final_event
    assert event.kind == EventKind.WIDTH_NONPOSITIVE
    assert event.time == pytest.approx(0.1, abs=1e-6)


def test_width_collapse_can_be_disarmed():
    def shrinking(t, y):
        return np.array([y[1], 0.0, y[3], y[4], 0.0])

    config = IntegratorConfig(t_end=1.0, detect_width_collapse=False)
    trajectory = integrate((0.0, 0.0, 0.1, -1.0, 0.0), shrinking, config)
    assert trajectory.events == []
    assert trajectory.states[-1][2] == pytest.approx(-0.9)


def test_blow_up_is_a_step_failure():
    def blow_up(t, y):
        return np.array([y[0] ** 2, 0.0])

    trajectory = integrate((1.0, 0.0), blow_up, IntegratorConfig(t_end=5.0))
    event = trajectory.final_event
    assert event.kind == EventKind.STEP_FAILURE
    assert event.time < 1.0


def test_rk4_blow_up_is_a_step_failure():
    def blow_up(t, y):
        return np.array([y[0] ** 2, 0.0])

    config = IntegratorConfig(method=IntegratorMethod.RK4, h=0.05, t_end=5.0)
    with np.errstate(over="ignore", invalid="ignore"):
        trajectory = integrate((1.0, 0.0), blow_up, config)
    assert trajectory.final_event.kind == EventKind.STEP_FAILURE
    assert np.all(np.isfinite(trajectory.states))


def test_start_outside_threshold():
    config = IntegratorConfig(t_end=10.0, escape_threshold=3.0)
    trajectory = integrate((5.0, 0.0), harmonic, config)
    assert trajectory.times.size == 1
    assert trajectory.final_event.kind == EventKind.ESCAPE
    assert trajectory.final_event.time == 0.0


def test_sample_stride():
    config = IntegratorConfig(method=IntegratorMethod.RK4, h=0.01, t_end=1.0, sample_stride=10)
    trajectory = integrate((1.0, 0.0), harmonic, config)
    assert trajectory.times.size == 11
    assert trajectory.times[-1] == 1.0
    assert trajectory.times[1] == pytest.approx(0.1)


def test_integration_is_deterministic(eff):
    config = IntegratorConfig(t_end=50.0, escape_threshold=3.0)
    rhs = make_quantum_slow_rhs(eff, CouplingMode.partial())
    a = integrate((0.8, 0.0, 0.1, 0.0, 0.01), rhs, config)
    b = integrate((0.8, 0.0, 0.1, 0.0, 0.01), rhs, config)
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.states, b.states)


def test_trajectory_frame(eff):
    config = IntegratorConfig(t_end=1.0)
    trajectory = integrate((0.5, 0.0, 0.1, 0.0, 0.01), make_quantum_slow_rhs(eff, CouplingMode.full()), config)
    frame = trajectory.to_frame()
    assert list(frame.columns) == ["t", "x", "v", "W", "Wdot", "Wddot"]
    assert len(frame) == trajectory.times.size

    classical = integrate((0.5, 0.0), make_classical_slow_rhs(eff), config).to_frame()
    assert list(classical.columns) == ["t", "x", "v"]


def test_trajectory_is_read_only(eff):
    trajectory = integrate((0.5, 0.0), make_classical_slow_rhs(eff), IntegratorConfig(t_end=1.0))
    with pytest.raises(ValueError):
        trajectory.states[0, 0] = 1.0


@pytest.mark.parametrize("state", [(1.0,), (1.0, 2.0, 3.0), (float("nan"), 0.0)])
def test_invalid_initial_states(state):
    with pytest.raises(ParameterError):
        integrate(state, harmonic, IntegratorConfig(t_end=1.0))
