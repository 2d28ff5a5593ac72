"""
Experiment tools: orbit classification, escape-boundary bisection and
sweeps, period estimation, and driven-versus-averaged validation.
"""

import math
import multiprocessing as mp
from typing import List, Optional, Sequence, Tuple
import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline
from models.parameters import EffectiveParams, ModelParams
from models.results import (
    BoundaryFlag,
    BoundaryPoint,
    DiscrepancyReport,
    OrbitClass,
    Outcome,
    PeriodEstimate,
    SweepResult,
)
from models.states import CouplingMode, QuantumState
from models.trajectory import EventKind, IntegratorConfig, IntegratorMethod, Trajectory
from tools.dynamics_tools import (
    classical_fast_component,
    classical_fast_velocity,
    make_classical_driven_rhs,
    make_classical_slow_rhs,
    make_quantum_driven_rhs,
    make_quantum_slow_rhs,
    quantum_fast_components,
    quantum_fast_rates,
)
from tools.integrator_tools import integrate
from tools.potential_tools import effective_coefficients, regime_report
from utils.config import (
    DEFAULT_ABS_TOL,
    DEFAULT_BISECT_TOL,
    DEFAULT_HORIZON,
    DEFAULT_REL_TOL,
    DEFAULT_WIDTH_ACCEL,
    ESCAPE_TURNING_POINT_FACTOR,
    JOBS,
    PERIOD_CAP,
    PERIOD_SENTINEL,
    STEPS_PER_DRIVE_PERIOD,
    logger,
)
from utils.exceptions import (
    BracketInvalid,
    ParameterError,
    RegimeViolation,
    TooFewCycles,
)


def default_escape_threshold(eff: EffectiveParams) -> Optional[float]:
    """Three times the turning point, or None outside the volcano regime."""
    if eff.turning_point is None:
        return None
    return ESCAPE_TURNING_POINT_FACTOR * eff.turning_point


def initial_quantum_state(
    x0: float,
    w0: float,
    v0: float = 0.0,
    w_rate: float = 0.0,
    w_accel: float = DEFAULT_WIDTH_ACCEL,
) -> QuantumState:
    """Release state at rest with the default width acceleration."""
    return QuantumState(x0, v0, w0, w_rate, w_accel)


def slow_config(
    eff: EffectiveParams,
    mode: CouplingMode,
    horizon: float = DEFAULT_HORIZON,
    method: IntegratorMethod = IntegratorMethod.RK45,
    h: Optional[float] = None,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    sample_stride: int = 1,
    escape_threshold: Optional[float] = None,
) -> IntegratorConfig:
    """
    Integrator settings for an averaged orbit.

    Args:
        eff: Effective parameters
        mode: Coupling mode (width collapse is only watched when the width
            feeds the mean)
        horizon: Final time
        method, h, rel_tol, abs_tol, sample_stride: Stepping settings
        escape_threshold: Overrides the default of three turning points

    Returns:
        IntegratorConfig
    """
    threshold = escape_threshold or default_escape_threshold(eff)
    if threshold is None:
        raise ParameterError(
            "No turning point for these parameters; an escape threshold must be given"
        )
    return IntegratorConfig(
        method=method,
        h=h,
        rel_tol=rel_tol,
        abs_tol=abs_tol,
        t_end=horizon,
        sample_stride=sample_stride,
        escape_threshold=threshold,
        detect_width_collapse=mode.width_feeds_mean,
    )


def simulate_slow(
    state0: Sequence[float],
    mode: CouplingMode,
    eff: EffectiveParams,
    config: Optional[IntegratorConfig] = None,
    literal_dots: Optional[bool] = None,
) -> Trajectory:
    """
    Integrate the averaged moment system from a 5-component state.

    Args:
        state0: (⟨x⟩, ⟨ẋ⟩, W, Ẇ, Ẅ) at t = 0
        mode: Coupling mode
        eff: Effective parameters
        config: Integrator settings (defaults from slow_config)
        literal_dots: Dotted-square reading for the width equation

    Returns:
        Trajectory
    """
    config = config or slow_config(eff, mode)
    rhs = make_quantum_slow_rhs(eff, mode, literal_dots)
    meta = {"mode": mode.label, "ratio": eff.ratio, "lambda": eff.lam}
    return integrate(state0, rhs, config, meta=meta)


def simulate_driven(
    state0: Sequence[float],
    params: ModelParams,
    quantum: bool,
    horizon: float,
    escape_threshold: Optional[float] = None,
    steps_per_period: int = STEPS_PER_DRIVE_PERIOD,
    sample_stride: int = 1,
    literal_dots: Optional[bool] = None,
) -> Trajectory:
    """
    Integrate the driven system from slow initial data.

    The initial condition is shifted by the fast components at t = 0 so that
    the driven and averaged runs describe the same motion.

    Args:
        state0: Slow initial state, (x, v) or (⟨x⟩, ⟨ẋ⟩, W, Ẇ, Ẅ)
        params: Model parameters with a concrete drive
        quantum: Integrate the moment system instead of the classical one
        horizon: Final time
        escape_threshold: Escape detection threshold (None disables it)
        steps_per_period: RK4 steps per drive period
        sample_stride: Output decimation
        literal_dots: Dotted-square reading for the fast width component

    Returns:
        Trajectory
    """
    config = IntegratorConfig(
        method=IntegratorMethod.RK4,
        h=params.drive_period / steps_per_period,
        t_end=horizon,
        sample_stride=sample_stride,
        escape_threshold=escape_threshold,
        detect_width_collapse=quantum,
    )
    if quantum:
        driven0 = _driven_quantum_start(state0, params, literal_dots)
        rhs = make_quantum_driven_rhs(params)
    else:
        driven0 = _driven_classical_start(state0, params)
        rhs = make_classical_driven_rhs(params)
    meta = {"driven": True, "epsilon": params.epsilon, "big_omega": params.big_omega}
    return integrate(driven0, rhs, config, meta=meta)


def _driven_classical_start(state0: Sequence[float], params: ModelParams) -> List[float]:
    x, v = state0[0], state0[1]
    return [
        x + classical_fast_component(x, 0.0, params),
        v + classical_fast_velocity(x, 0.0, params),
    ]


def _driven_quantum_start(
    state0: Sequence[float], params: ModelParams, literal_dots: Optional[bool]
) -> List[float]:
    x, v, width, width_rate, width_accel = state0
    mean_fast, width_fast = quantum_fast_components(state0, 0.0, params, literal_dots)
    mean_rate, fast_rate, fast_accel = quantum_fast_rates(state0, 0.0, params, literal_dots)
    return [
        x + mean_fast,
        v + mean_rate,
        width + width_fast,
        width_rate + fast_rate,
        width_accel + fast_accel,
    ]


def _outcome(trajectory: Trajectory, horizon: float) -> OrbitClass:
    event = trajectory.final_event
    if event is None:
        return OrbitClass(
            outcome=Outcome.BOUNDED, horizon=horizon, max_abs_mean=trajectory.max_abs_mean
        )
    outcome = Outcome.ESCAPED if event.kind == EventKind.ESCAPE else Outcome.CLOSURE_BREAKDOWN
    return OrbitClass(
        outcome=outcome,
        time=event.time,
        horizon=horizon,
        max_abs_mean=trajectory.max_abs_mean,
    )


def classify_orbit(
    x0: float,
    w0: float,
    mode: CouplingMode,
    eff: EffectiveParams,
    horizon: float = DEFAULT_HORIZON,
    w_accel: float = DEFAULT_WIDTH_ACCEL,
    config: Optional[IntegratorConfig] = None,
    literal_dots: Optional[bool] = None,
) -> OrbitClass:
    """
    Classify a release at rest as bounded, escaped, or closure breakdown.

    Args:
        x0: Initial mean position
        w0: Initial width (Ẇ(0) = 0)
        mode: Coupling mode
        eff: Effective parameters
        horizon: Observation time
        w_accel: Initial Ẅ
        config: Integrator settings (defaults from slow_config)
        literal_dots: Dotted-square reading for the width equation

    Returns:
        OrbitClass
    """
    config = config or slow_config(eff, mode, horizon)
    trajectory = simulate_slow(
        initial_quantum_state(x0, w0, w_accel=w_accel), mode, eff, config, literal_dots
    )
    orbit = _outcome(trajectory, config.t_end)
    logger.debug(f"classify x0={x0!r} w0={w0!r} {mode.label}: {orbit.outcome.value}")
    return orbit


def escape_boundary(
    w0: float,
    mode: CouplingMode,
    eff: EffectiveParams,
    horizon: float = DEFAULT_HORIZON,
    bisect_tol: float = DEFAULT_BISECT_TOL,
    bracket: Optional[Tuple[float, float]] = None,
    w_accel: float = DEFAULT_WIDTH_ACCEL,
    literal_dots: Optional[bool] = None,
) -> float:
    """
    Largest initial mean that stays bounded, by bisection.

    Orbits that end in closure breakdown count as escaping. The default
    bracket is [bisect_tol, 1.5 · turning point]; x0 = 0 is an equilibrium
    and would always read as bounded.

    Args:
        w0: Initial width
        mode: Coupling mode
        eff: Effective parameters
        horizon: Observation time for each classification
        bisect_tol: Final bracket width
        bracket: Optional (low, high) initial means
        w_accel: Initial Ẅ
        literal_dots: Dotted-square reading for the width equation

    Returns:
        Midpoint of the final bracket
    """
    if bracket is None:
        if eff.turning_point is None:
            raise ParameterError("No turning point; pass an explicit bracket")
        bracket = (bisect_tol, 1.5 * eff.turning_point)
    low, high = bracket

    def bounded(x0: float) -> bool:
        return classify_orbit(
            x0, w0, mode, eff, horizon, w_accel=w_accel, literal_dots=literal_dots
        ).bounded

    low_bounded, high_bounded = bounded(low), bounded(high)
    if low_bounded == high_bounded:
        raise BracketInvalid(
            f"Bracket [{low}, {high}] at W0={w0} is all "
            f"{'bounded' if low_bounded else 'escaping'}",
            all_escape=not low_bounded,
        )
    if not low_bounded:
        raise BracketInvalid(
            f"Bracket [{low}, {high}] at W0={w0} escapes below and stays bounded above",
            all_escape=False,
        )

    while high - low >= bisect_tol:
        mid = 0.5 * (low + high)
        if bounded(mid):
            low = mid
        else:
            high = mid
    x_max = 0.5 * (low + high)
    logger.debug(f"Boundary at W0={w0!r} ({mode.label}): x_max={x_max:.6g}")
    return x_max


def _boundary_task(task: tuple) -> BoundaryPoint:
    w0, mode, eff, horizon, bisect_tol, bracket, w_accel, literal_dots = task
    try:
        x_max = escape_boundary(
            w0, mode, eff, horizon, bisect_tol, bracket, w_accel, literal_dots
        )
        return BoundaryPoint(w0=w0, x_max=x_max)
    except BracketInvalid as e:
        logger.warning(f"Sweep point W0={w0!r} flagged: {e}")
        flag = BoundaryFlag.ALL_ESCAPE if e.all_escape else BoundaryFlag.NO_ESCAPE
        return BoundaryPoint(w0=w0, x_max=0.0, flag=flag)


def boundary_curve(
    widths: Sequence[float],
    mode: CouplingMode,
    eff: EffectiveParams,
    horizon: float = DEFAULT_HORIZON,
    bisect_tol: float = DEFAULT_BISECT_TOL,
    bracket: Optional[Tuple[float, float]] = None,
    w_accel: float = DEFAULT_WIDTH_ACCEL,
    jobs: Optional[int] = None,
    literal_dots: Optional[bool] = None,
) -> SweepResult:
    """
    Escape boundary over a grid of initial widths.

    Grid points are independent and are mapped over a process pool; the
    result is ordered by width whatever the pool size.

    Args:
        widths: Strictly increasing initial widths
        mode: Coupling mode
        eff: Effective parameters
        horizon: Observation time for each classification
        bisect_tol: Bisection tolerance
        bracket: Optional (low, high) initial means
        w_accel: Initial Ẅ
        jobs: Worker processes (defaults to VOLCANO_JOBS)
        literal_dots: Dotted-square reading for the width equation

    Returns:
        SweepResult
    """
    widths = [float(w) for w in widths]
    if not widths:
        raise ParameterError("Width grid is empty")
    if any(b <= a for a, b in zip(widths, widths[1:])):
        raise ParameterError("Width grid must be strictly increasing")
    if bracket is None and eff.turning_point is None:
        raise ParameterError("No turning point; pass an explicit bracket")
    bracket = bracket or (bisect_tol, 1.5 * eff.turning_point)

    tasks = [
        (w0, mode, eff, horizon, bisect_tol, bracket, w_accel, literal_dots)
        for w0 in widths
    ]
    jobs = max(1, min(jobs or JOBS, len(tasks)))
    logger.info(f"Sweeping {len(tasks)} widths ({mode.label}) with {jobs} job(s)")

    if jobs == 1:
        points = [_boundary_task(task) for task in tasks]
    else:
        with mp.Pool(processes=jobs) as pool:
            points = pool.map(_boundary_task, tasks)

    return SweepResult(
        lam=eff.lam,
        ratio=eff.ratio,
        mode=mode.label,
        points=points,
        bisect_tol=bisect_tol,
        horizon=horizon,
        bracket_high=bracket[1],
    )


def critical_width(
    mode: CouplingMode,
    eff: EffectiveParams,
    x0: float = 0.01,
    w_range: Tuple[float, float] = (1e-4, 5.0),
    tol: float = 1e-3,
    horizon: float = DEFAULT_HORIZON,
) -> Optional[float]:
    """
    Smallest initial width for which a release at x0 escapes.

    Returns:
        The width, or None if x0 stays bounded up to w_range[1]
    """
    low, high = w_range
    if not classify_orbit(x0, low, mode, eff, horizon).bounded:
        return low
    if classify_orbit(x0, high, mode, eff, horizon).bounded:
        return None
    while high - low >= tol:
        mid = 0.5 * (low + high)
        if classify_orbit(x0, mid, mode, eff, horizon).bounded:
            low = mid
        else:
            high = mid
    return high


def _dedupe(values: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    kept = []
    for value in np.sort(values):
        if not kept or value - kept[-1] > tol:
            kept.append(value)
    return np.array(kept)


def oscillation_period(trajectory: Trajectory) -> PeriodEstimate:
    """
    Mean period of the mean-position oscillation.

    Uses successive upward zero crossings of ⟨x⟩, or successive maxima when
    ⟨x⟩ never changes sign; crossings are located on the cubic Hermite
    interpolant built from (x, ẋ).

    Args:
        trajectory: Orbit samples (first two components are x and ẋ)

    Returns:
        PeriodEstimate with the relative spread of the individual periods
    """
    times = trajectory.times
    if times.size < 4:
        raise TooFewCycles(f"Only {times.size} samples")
    spline = CubicHermiteSpline(times, trajectory.states[:, 0], trajectory.states[:, 1])
    slope = spline.derivative()

    crossings = _dedupe(spline.roots(extrapolate=False))
    if crossings.size:
        marks = crossings[slope(crossings) > 0.0]
        method = "upward_crossings"
    else:
        extrema = _dedupe(slope.roots(extrapolate=False))
        marks = extrema[spline.derivative(2)(extrema) < 0.0]
        method = "maxima"

    if marks.size < 3:
        raise TooFewCycles(f"Found {marks.size} same-phase marks, need at least 3")
    periods = np.diff(marks)
    mean = float(np.mean(periods))
    return PeriodEstimate(
        period=mean,
        spread=float(np.std(periods) / mean),
        cycles=int(periods.size),
        method=method,
    )


def period_quadrature_oracle(x0: float, eff: EffectiveParams) -> float:
    """
    Period of the averaged classical orbit released at rest from x0.

    T = 4∫₀^{x0} dx/√(2(V_s(x0) − V_s(x))), evaluated after the substitution
    x = x0 sin θ, which removes the endpoint singularity:
    T = 4∫₀^{π/2} dθ/√(α − βx0²(1 + sin²θ)/2).

    Args:
        x0: Release amplitude, 0 < x0 < turning point
        eff: Effective parameters in the volcano regime

    Returns:
        The period, or PERIOD_SENTINEL once it exceeds PERIOD_CAP
    """
    if eff.turning_point is None:
        raise ParameterError("Period oracle needs the volcano regime")
    if not 0.0 < x0 < eff.turning_point:
        raise ParameterError(
            f"Release {x0} must lie strictly inside (0, {eff.turning_point})"
        )
    half_beta_x0_sq = 0.5 * eff.beta * x0 * x0

    def integrand(theta: float) -> float:
        gap = eff.alpha - half_beta_x0_sq * (1.0 + math.sin(theta) ** 2)
        return 1.0 / math.sqrt(gap) if gap > 0.0 else math.inf

    value, _ = quad(integrand, 0.0, math.pi / 2.0, epsabs=1e-8, epsrel=1e-10, limit=200)
    period = 4.0 * value
    if not math.isfinite(period) or period > PERIOD_CAP:
        return PERIOD_SENTINEL
    return period


def compare_full_vs_averaged(
    params: ModelParams,
    x0: float,
    horizon: float,
    system: str = "classical",
    w0: float = 0.1,
    w_accel: float = DEFAULT_WIDTH_ACCEL,
    steps_per_period: int = STEPS_PER_DRIVE_PERIOD,
    literal_dots: Optional[bool] = None,
) -> DiscrepancyReport:
    """
    Compare the driven run with its averaged model at stroboscopic times.

    Both systems are stepped with RK4 at the same step (a fixed fraction of
    the drive period) and sampled once per drive period; the analytic fast
    component is removed from the driven samples before differencing.

    Args:
        params: Model parameters inside the averaging regime
        x0: Initial slow mean position (released at rest)
        horizon: Comparison time, truncated to whole drive periods
        system: "classical" or "quantum" (full coupling)
        w0: Initial slow width (quantum only)
        w_accel: Initial slow Ẅ (quantum only)
        steps_per_period: RK4 steps per drive period
        literal_dots: Dotted-square reading for the width equations

    Returns:
        DiscrepancyReport
    """
    if system not in ("classical", "quantum"):
        raise ParameterError(f"Unknown system: {system}")
    report = regime_report(params)
    if report.warning:
        raise RegimeViolation("; ".join(report.messages))

    eff = effective_coefficients(params)
    periods = math.floor(horizon / params.drive_period)
    if periods < 1:
        raise ParameterError(f"Horizon {horizon} is shorter than one drive period")
    config = IntegratorConfig(
        method=IntegratorMethod.RK4,
        h=params.drive_period / steps_per_period,
        t_end=periods * params.drive_period,
        sample_stride=steps_per_period,
        detect_width_collapse=False,
    )

    quantum = system == "quantum"
    if quantum:
        slow0 = initial_quantum_state(x0, w0, w_accel=w_accel)
        driven0 = _driven_quantum_start(slow0, params, literal_dots)
        slow_rhs = make_quantum_slow_rhs(eff, CouplingMode.full(), literal_dots)
        driven_rhs = make_quantum_driven_rhs(params)
    else:
        slow0 = (x0, 0.0)
        driven0 = _driven_classical_start(slow0, params)
        slow_rhs = make_classical_slow_rhs(eff)
        driven_rhs = make_classical_driven_rhs(params)

    logger.info(
        f"Comparing {system} driven vs averaged over {periods} drive periods "
        f"(epsilon={params.epsilon:.6g}, Omega={params.big_omega:.6g})"
    )
    slow = integrate(slow0, slow_rhs, config)
    driven = integrate(driven0, driven_rhs, config)

    n = min(slow.times.size, driven.times.size)
    times = slow.times[:n]
    slow_states, driven_states = slow.states[:n], driven.states[:n]

    if quantum:
        fast = np.array([
            quantum_fast_components(state, t, params, literal_dots)
            for t, state in zip(times, slow_states)
        ])
        mean_fast, width_fast = fast[:, 0], fast[:, 1]
    else:
        mean_fast = np.array([
            classical_fast_component(state[0], t, params)
            for t, state in zip(times, slow_states)
        ])

    corrected = driven_states[:, 0] - mean_fast
    abs_err = np.abs(corrected - slow_states[:, 0])

    width_max = width_rms = None
    if quantum:
        width_err = np.abs(driven_states[:, 2] - width_fast - slow_states[:, 2])
        width_max = float(np.max(width_err))
        width_rms = float(np.sqrt(np.mean(width_err**2)))

    return DiscrepancyReport(
        system=system,
        smallness=params.smallness,
        samples=int(n),
        max_abs=float(np.max(abs_err)),
        rms=float(np.sqrt(np.mean(abs_err**2))),
        width_max_abs=width_max,
        width_rms=width_rms,
        rows={
            "t": times.tolist(),
            "slow": slow_states[:, 0].tolist(),
            "strobe": driven_states[:, 0].tolist(),
            "fast_corrected": corrected.tolist(),
            "abs_err": abs_err.tolist(),
        },
    )
