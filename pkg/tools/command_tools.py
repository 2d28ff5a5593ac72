"""
Command runners behind the command-line front end.

Each runner takes the merged settings of one invocation (config file values
overridden by flags) and returns a result dictionary with an exit code, the
output table or verdict, and a one-line summary.
"""

import math
from typing import Any, Callable, Dict, Optional, Tuple
import numpy as np
import pandas as pd
from models.parameters import EffectiveParams, ModelParams
from models.results import BoundaryFlag, Outcome
from models.states import CouplingMode, CouplingVariant
from models.trajectory import EventKind, IntegratorConfig, IntegratorMethod
from tools.experiment_tools import (
    boundary_curve,
    classify_orbit,
    compare_full_vs_averaged,
    default_escape_threshold,
    initial_quantum_state,
    simulate_driven,
    simulate_slow,
    slow_config,
)
from tools.integrator_tools import energy_slow
from tools.potential_tools import (
    effective_coefficients,
    params_from_ratio,
    potential_profile,
    slow_coefficients,
)
from utils.config import (
    DEFAULT_ABS_TOL,
    DEFAULT_BISECT_TOL,
    DEFAULT_HORIZON,
    DEFAULT_REL_TOL,
    DEFAULT_WIDTH_ACCEL,
    VERSION,
    logger,
)
from utils.exceptions import RegimeViolation, UsageError, VolcanoError

Settings = Dict[str, Any]


def build_model(settings: Settings) -> Tuple[Optional[ModelParams], EffectiveParams]:
    """
    Resolve the physical parameters of an invocation.

    Exactly one of `ratio` or the pair (`epsilon`, `omega_drive`) must be set.
    A ratio-only request yields no ModelParams; the slow coefficients depend
    on the ratio alone.

    Args:
        settings: Merged settings

    Returns:
        Tuple (params or None, effective parameters)
    """
    omega_sq = settings.get("omega2", 1.0)
    lam = settings.get("lam", 0.1)
    ratio = settings.get("ratio")
    epsilon = settings.get("epsilon")
    omega_drive = settings.get("omega_drive")

    if ratio is not None:
        if epsilon is not None or omega_drive is not None:
            raise UsageError("Give either --ratio or --epsilon with --omega-drive, not both")
        return None, slow_coefficients(omega_sq, lam, ratio)
    if epsilon is None or omega_drive is None:
        raise UsageError("Give --ratio, or both --epsilon and --omega-drive")
    params = ModelParams(omega_sq=omega_sq, lam=lam, epsilon=epsilon, big_omega=omega_drive)
    return params, effective_coefficients(params)


def driven_params(
    settings: Settings, params: Optional[ModelParams], eff: EffectiveParams
) -> ModelParams:
    """Concrete drive for commands that need the driven system."""
    if params is not None:
        return params
    return params_from_ratio(eff.omega_sq, eff.lam, eff.ratio)


def build_mode(settings: Settings) -> CouplingMode:
    variant = CouplingVariant(settings.get("mode", CouplingVariant.FULL.value))
    return CouplingMode(variant=variant, gamma=settings.get("gamma"))


def _require(settings: Settings, key: str) -> Any:
    if settings.get(key) is None:
        raise UsageError(f"--{key.replace('_', '-')} is required")
    return settings[key]


def _integrator_config(
    settings: Settings, eff: EffectiveParams, mode: CouplingMode, horizon: float
) -> IntegratorConfig:
    return IntegratorConfig(
        method=IntegratorMethod(settings.get("method", IntegratorMethod.RK45.value)),
        h=settings.get("h"),
        rel_tol=settings.get("rel_tol", DEFAULT_REL_TOL),
        abs_tol=settings.get("abs_tol", DEFAULT_ABS_TOL),
        t_end=horizon,
        sample_stride=settings.get("stride", 1),
        escape_threshold=settings.get("escape_threshold") or default_escape_threshold(eff),
        detect_width_collapse=mode.width_feeds_mean,
    )


def _meta(command: str, settings: Settings, eff: EffectiveParams, **extra: Any) -> Dict[str, Any]:
    meta = {
        "version": VERSION,
        "command": command,
        "settings": dict(settings),
        "derived": {
            "alpha": eff.alpha,
            "beta": eff.beta,
            "ratio": eff.ratio,
            "turning_point": eff.turning_point,
        },
    }
    meta.update(extra)
    return meta


def potential_command(settings: Settings) -> Dict[str, Any]:
    """Tabulate the slow (default) or bare potential on a uniform grid."""
    params, eff = build_model(settings)
    xmin = settings.get("xmin", -2.0)
    xmax = settings.get("xmax", 2.0)
    samples = settings.get("samples", 401)
    if not xmin < xmax:
        raise UsageError(f"--xmin ({xmin}) must be below --xmax ({xmax})")
    if samples < 2:
        raise UsageError("--samples must be at least 2")

    xs = np.linspace(xmin, xmax, samples)
    kind = settings.get("kind", "slow")
    if kind == "bare":
        frame = potential_profile(xs, "bare", params=driven_params(settings, params, eff))
    else:
        frame = potential_profile(xs, "slow", eff=eff)

    return {
        "success": True,
        "exit_code": 0,
        "frame": frame,
        "meta": _meta("potential", settings, eff),
        "summary": f"{kind} potential on {samples} points (alpha={eff.alpha:.6g}, beta={eff.beta:.6g})",
    }


def simulate_command(settings: Settings) -> Dict[str, Any]:
    """
    Integrate one orbit and tabulate it.

    The table carries the slow energy of (x, v) and an `event` column marking
    the final localized row. Width collapse and step failure give exit 2; the
    table is still returned.
    """
    params, eff = build_model(settings)
    mode = build_mode(settings)
    state0 = initial_quantum_state(
        _require(settings, "x0"),
        settings.get("w0", 0.1),
        settings.get("v0", 0.0),
        settings.get("w0_rate", 0.0),
        settings.get("w0_accel", DEFAULT_WIDTH_ACCEL),
    )
    horizon = settings.get("horizon", DEFAULT_HORIZON)
    literal_dots = settings.get("literal_dots")

    if settings.get("driven"):
        drive = driven_params(settings, params, eff)
        trajectory = simulate_driven(
            state0,
            drive,
            quantum=True,
            horizon=horizon,
            escape_threshold=settings.get("escape_threshold") or default_escape_threshold(eff),
            sample_stride=settings.get("stride", 1),
            literal_dots=literal_dots,
        )
    else:
        config = _integrator_config(settings, eff, mode, horizon)
        trajectory = simulate_slow(state0, mode, eff, config, literal_dots)

    frame = trajectory.to_frame()
    frame["energy"] = energy_slow((frame["x"].to_numpy(), frame["v"].to_numpy()), eff)
    frame["event"] = ""
    event = trajectory.final_event
    if event is not None:
        frame.loc[frame.index[-1], "event"] = event.kind.value

    result = {
        "success": True,
        "exit_code": 0,
        "frame": frame,
        "meta": _meta("simulate", settings, eff, mode=mode.label, integrator=trajectory.meta.get("config")),
        "summary": f"{len(frame)} samples to t={trajectory.times[-1]:.6g}"
        + (f", {event.kind.value} at t={event.time:.6g}" if event else ""),
    }
    if event is not None and event.kind != EventKind.ESCAPE:
        result.update(
            success=False,
            exit_code=2,
            error=f"{event.kind.value} t={format(event.time, '.17g')}",
        )
    return result


def sweep_command(settings: Settings) -> Dict[str, Any]:
    """Escape boundary x_max over a uniform grid of initial widths."""
    _, eff = build_model(settings)
    mode = build_mode(settings)
    w0_min = _require(settings, "w0_min")
    w0_max = settings.get("w0_max", w0_min)
    steps = settings.get("w0_steps", 25)
    if steps > 1 and not w0_min < w0_max:
        raise UsageError(f"--w0-min ({w0_min}) must be below --w0-max ({w0_max})")
    widths = np.linspace(w0_min, w0_max, steps) if steps > 1 else np.array([w0_min])

    sweep = boundary_curve(
        widths,
        mode,
        eff,
        horizon=settings.get("horizon", DEFAULT_HORIZON),
        bisect_tol=settings.get("bisect_tol", DEFAULT_BISECT_TOL),
        w_accel=settings.get("w0_accel", DEFAULT_WIDTH_ACCEL),
        jobs=settings.get("jobs"),
        literal_dots=settings.get("literal_dots"),
    )
    frame = pd.DataFrame({
        "W0": [point.w0 for point in sweep.points],
        "x_max": [point.x_max for point in sweep.points],
        "flag": [point.flag.value for point in sweep.points],
    })
    flagged = sum(1 for point in sweep.points if point.flag != BoundaryFlag.OK)
    return {
        "success": True,
        "exit_code": 0,
        "frame": frame,
        "meta": _meta("sweep", settings, eff, mode=mode.label, bracket_high=sweep.bracket_high),
        "summary": f"{len(frame)} widths swept ({mode.label}), {flagged} flagged",
    }


def compare_command(settings: Settings) -> Dict[str, Any]:
    """Stroboscopic driven-versus-averaged comparison (default: three slow periods)."""
    params, eff = build_model(settings)
    drive = driven_params(settings, params, eff)
    horizon = settings.get("horizon")
    if horizon is None:
        horizon = 3.0 * 2.0 * math.pi / math.sqrt(eff.alpha) if eff.alpha > 0.0 else DEFAULT_HORIZON

    report = compare_full_vs_averaged(
        drive,
        settings.get("x0", 0.5),
        horizon,
        system=settings.get("system", "classical"),
        w0=settings.get("w0", 0.1),
        w_accel=settings.get("w0_accel", DEFAULT_WIDTH_ACCEL),
        literal_dots=settings.get("literal_dots"),
    )
    summary = f"{report.samples} strobe samples: max |dx|={report.max_abs:.3e}, rms={report.rms:.3e}"
    if report.width_rms is not None:
        summary += f", width rms={report.width_rms:.3e}"
    return {
        "success": True,
        "exit_code": 0,
        "frame": pd.DataFrame(report.rows),
        "meta": _meta(
            "compare", settings, eff,
            epsilon=drive.epsilon, big_omega=drive.big_omega, smallness=drive.smallness,
        ),
        "summary": summary,
    }


def classify_command(settings: Settings) -> Dict[str, Any]:
    """Verdict for one release at rest; closure breakdown gives exit 2."""
    _, eff = build_model(settings)
    mode = build_mode(settings)
    horizon = settings.get("horizon", DEFAULT_HORIZON)
    config = slow_config(
        eff,
        mode,
        horizon,
        escape_threshold=settings.get("escape_threshold"),
        rel_tol=settings.get("rel_tol", DEFAULT_REL_TOL),
        abs_tol=settings.get("abs_tol", DEFAULT_ABS_TOL),
    )
    orbit = classify_orbit(
        _require(settings, "x0"),
        settings.get("w0", 0.1),
        mode,
        eff,
        horizon,
        w_accel=settings.get("w0_accel", DEFAULT_WIDTH_ACCEL),
        config=config,
        literal_dots=settings.get("literal_dots"),
    )

    verdict = orbit.outcome.value
    result = {"success": True, "exit_code": 0, "text": verdict}
    if orbit.bounded:
        result["summary"] = f"bounded to t={horizon:.6g}, max |<x>|={orbit.max_abs_mean:.6g}"
    else:
        result["summary"] = f"{verdict.lower()} at t={orbit.time:.6g}"
    if orbit.outcome == Outcome.CLOSURE_BREAKDOWN:
        result.update(
            success=False,
            exit_code=2,
            text=f"{verdict} t={format(orbit.time, '.17g')}",
            error=f"Closure breakdown at t={orbit.time:.6g}",
        )
    return result


COMMANDS: Dict[str, Callable[[Settings], Dict[str, Any]]] = {
    "potential": potential_command,
    "simulate": simulate_command,
    "sweep": sweep_command,
    "compare": compare_command,
    "classify": classify_command,
}


def run_command(command: str, settings: Settings) -> Dict[str, Any]:
    """
    Run one command and map failures to exit codes.

    Usage and parameter errors (including pydantic validation and regime
    violations) map to 1; other toolkit or numerical failures map to 2.

    Args:
        command: Command name
        settings: Merged settings

    Returns:
        Result dictionary with `success` and `exit_code`
    """
    if command not in COMMANDS:
        return {"success": False, "exit_code": 1, "error": f"Unknown command: {command}"}
    logger.info(f"Running {command}")
    try:
        return COMMANDS[command](settings)
    except (UsageError, RegimeViolation, ValueError) as e:
        logger.error(f"{command}: {e}")
        return {"success": False, "exit_code": 1, "error": str(e)}
    except VolcanoError as e:
        logger.error(f"{command}: {e}")
        return {"success": False, "exit_code": 2, "error": str(e)}
    except Exception as e:
        logger.error(f"Unexpected error in {command}: {e}")
        return {"success": False, "exit_code": 2, "error": f"{type(e).__name__}: {e}"}
