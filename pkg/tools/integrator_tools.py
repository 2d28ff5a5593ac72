"""
Integrator tools: fixed-step RK4 and adaptive Dormand-Prince RK45 with
cubic Hermite dense output and terminal-event localisation.
"""

import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import bisect
from models.parameters import EffectiveParams
from models.trajectory import (
    EventKind,
    IntegratorConfig,
    IntegratorMethod,
    Trajectory,
    TrajectoryEvent,
)
from utils.config import EVENT_TIME_TOL, STEP_UNDERFLOW, logger
from utils.exceptions import ParameterError

Rhs = Callable[[float, np.ndarray], np.ndarray]
EventFn = Callable[[np.ndarray], float]

# Dormand-Prince 5(4) tableau
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
DP_B_LOW = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
DP_E = DP_B - DP_B_LOW

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


def step_interpolant(
    t0: float, y0: np.ndarray, f0: np.ndarray,
    t1: float, y1: np.ndarray, f1: np.ndarray,
) -> CubicHermiteSpline:
    """Cubic Hermite dense output of one step."""
    return CubicHermiteSpline([t0, t1], np.array([y0, y1]), np.array([f0, f1]), axis=0)


def energy_slow(state: Sequence[float], eff: EffectiveParams) -> float:
    """Conserved energy of the averaged classical flow: v²/2 + αx²/2 − βx⁴/4."""
    x, v = state[0], state[1]
    x2 = x * x
    return v * v / 2.0 + eff.alpha * x2 / 2.0 - eff.beta * x2 * x2 / 4.0


def _event_functions(
    dimension: int, config: IntegratorConfig
) -> List[Tuple[EventKind, EventFn]]:
    # Each function is negative while the trajectory is admissible
    events = []
    if config.escape_threshold is not None:
        threshold = config.escape_threshold
        events.append((EventKind.ESCAPE, lambda y: abs(y[0]) - threshold))
    if dimension == 5 and config.detect_width_collapse:
        events.append((EventKind.WIDTH_NONPOSITIVE, lambda y: -y[2]))
    return events


def _locate_event(
    g: EventFn, dense: CubicHermiteSpline, t0: float, t1: float, y1: np.ndarray
) -> float:
    if g(y1) == 0.0:
        return t1
    return bisect(lambda t: g(dense(t)), t0, t1, xtol=EVENT_TIME_TOL)


class _Recorder:
    """Collects samples and events for one integration."""

    def __init__(self, t0: float, y0: np.ndarray, stride: int):
        self.times = [t0]
        self.states = [y0.copy()]
        self.events: List[TrajectoryEvent] = []
        self.stride = stride
        self.steps = 0

    def step(self, t: float, y: np.ndarray, final: bool = False):
        self.steps += 1
        if final or self.steps % self.stride == 0:
            if t > self.times[-1]:
                self.times.append(t)
                self.states.append(y.copy())

    def terminate(self, kind: EventKind, t: float, y: np.ndarray):
        if t > self.times[-1]:
            self.times.append(t)
            self.states.append(y.copy())
        else:
            t = self.times[-1]
            y = self.states[-1]
        self.events.append(
            TrajectoryEvent(kind=kind, time=float(t), state=tuple(float(c) for c in y))
        )

    def check_events(
        self,
        events: List[Tuple[EventKind, EventFn]],
        t0: float, y0: np.ndarray, f0: np.ndarray,
        t1: float, y1: np.ndarray, f1: np.ndarray,
    ) -> bool:
        triggered = [(kind, g) for kind, g in events if g(y1) >= 0.0]
        if not triggered:
            return False
        dense = step_interpolant(t0, y0, f0, t1, y1, f1)
        hits = [(_locate_event(g, dense, t0, t1, y1), kind) for kind, g in triggered]
        t_event, kind = min(hits, key=lambda hit: hit[0])
        self.terminate(kind, t_event, dense(t_event))
        logger.debug(f"{kind.value} event at t={t_event:.6g}")
        return True


def _initial_step(
    rhs: Rhs, t0: float, y0: np.ndarray, f0: np.ndarray, config: IntegratorConfig
) -> float:
    scale = config.abs_tol + config.rel_tol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = rhs(t0 + h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
    return min(100.0 * h0, h1, config.t_end - t0)


def _integrate_rk45(
    rhs: Rhs, t0: float, y0: np.ndarray, config: IntegratorConfig, recorder: _Recorder
):
    events = _event_functions(y0.size, config)
    t, y = t0, y0
    f = rhs(t, y)
    h = _initial_step(rhs, t, y, f, config)
    h_min = STEP_UNDERFLOW * config.t_end
    stages = np.empty((7, y.size))

    while t < config.t_end:
        last = config.t_end - t - h < h_min
        if last:
            h = config.t_end - t
        if h < h_min:
            logger.debug(f"Step size underflow at t={t:.6g}")
            recorder.terminate(EventKind.STEP_FAILURE, t, y)
            return

        stages[0] = f
        for i in range(1, 7):
            stages[i] = rhs(t + DP_C[i] * h, y + h * (DP_A[i] @ stages[:i]))
        y_new = y + h * (DP_B @ stages)
        error = h * (DP_E @ stages)

        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(error))):
            h *= MIN_FACTOR
            continue

        scale = config.abs_tol + config.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        error_norm = math.sqrt(float(np.mean((error / scale) ** 2)))
        if error_norm <= 1.0:
            t_new = config.t_end if last else t + h
            f_new = stages[6].copy()
            if recorder.check_events(events, t, y, f, t_new, y_new, f_new):
                return
            t, y, f = t_new, y_new, f_new
            recorder.step(t, y, final=t >= config.t_end)
            factor = MAX_FACTOR if error_norm == 0.0 else min(
                MAX_FACTOR, max(MIN_FACTOR, SAFETY * error_norm ** -0.2)
            )
        else:
            factor = max(MIN_FACTOR, SAFETY * error_norm ** -0.2)
        h *= factor


def _integrate_rk4(
    rhs: Rhs, t0: float, y0: np.ndarray, config: IntegratorConfig, recorder: _Recorder
):
    events = _event_functions(y0.size, config)
    h = config.h
    span = config.t_end - t0
    n_steps = max(1, int(math.ceil(span / h * (1.0 - 1e-12))))
    t, y = t0, y0
    f = rhs(t, y)

    for i in range(n_steps):
        t_new = config.t_end if i == n_steps - 1 else t0 + (i + 1) * h
        dt = t_new - t
        k1 = f
        k2 = rhs(t + dt / 2, y + dt / 2 * k1)
        k3 = rhs(t + dt / 2, y + dt / 2 * k2)
        k4 = rhs(t_new, y + dt * k3)
        y_new = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y_new)):
            logger.debug(f"Non-finite state after t={t:.6g}")
            recorder.terminate(EventKind.STEP_FAILURE, t, y)
            return
        f_new = rhs(t_new, y_new)
        if recorder.check_events(events, t, y, f, t_new, y_new, f_new):
            return
        t, y, f = t_new, y_new, f_new
        recorder.step(t, y, final=i == n_steps - 1)


def integrate(
    state0: Sequence[float],
    rhs: Rhs,
    config: IntegratorConfig,
    t0: float = 0.0,
    meta: Optional[Dict[str, Any]] = None,
) -> Trajectory:
    """
    Integrate y' = rhs(t, y) from t0 to config.t_end.

    Escape (|y[0]| reaching the threshold) and width collapse (y[2] <= 0 for
    5-component states) terminate the run at the localised crossing time; a
    step-size underflow or a non-finite state terminates with a step-failure
    event.

    Args:
        state0: Initial state (2 or 5 components)
        rhs: Right-hand side f(t, y) returning an array
        config: Integrator settings
        t0: Initial time
        meta: Extra annotations stored on the trajectory

    Returns:
        Trajectory of recorded samples and events
    """
    y0 = np.asarray(state0, dtype=float).copy()
    if y0.ndim != 1 or y0.size not in (2, 5):
        raise ParameterError(f"State must have 2 or 5 components, got shape {y0.shape}")
    if not np.all(np.isfinite(y0)):
        raise ParameterError(f"Initial state is not finite: {y0}")
    if config.t_end <= t0:
        raise ParameterError(f"t_end {config.t_end} must exceed t0 {t0}")

    recorder = _Recorder(t0, y0, config.sample_stride)
    for kind, g in _event_functions(y0.size, config):
        if g(y0) >= 0.0:
            # Already outside the admissible region
            recorder.events.append(
                TrajectoryEvent(kind=kind, time=t0, state=tuple(float(c) for c in y0))
            )
            break
    else:
        if config.method == IntegratorMethod.RK4:
            _integrate_rk4(rhs, t0, y0, config, recorder)
        else:
            _integrate_rk45(rhs, t0, y0, config, recorder)

    info = {"method": config.method.value, "config": config.model_dump(mode="json")}
    info.update(meta or {})
    return Trajectory(
        times=np.array(recorder.times),
        states=np.array(recorder.states),
        events=recorder.events,
        meta=info,
    )
