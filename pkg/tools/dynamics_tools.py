"""
Equations of motion for the driven double well: classical and closed-moment
quantum dynamics, driven and averaged, plus moment-closure helpers and the
fast-component estimates that connect the two time scales.
"""

import math
from typing import Callable, Optional, Sequence, Tuple
import numpy as np
from models.parameters import EffectiveParams, ModelParams
from models.states import ClassicalState, CouplingMode, CouplingVariant, QuantumState
from utils.config import LITERAL_DOTS
from utils.exceptions import ParameterError

Rhs = Callable[[float, np.ndarray], np.ndarray]


def _dots(literal_dots: Optional[bool]) -> bool:
    return LITERAL_DOTS if literal_dots is None else literal_dots


def _drive(t: float, params: ModelParams) -> Tuple[float, float]:
    """f(t) = ε cos Ωt and its time derivative."""
    phase = params.big_omega * t
    return (
        params.epsilon * math.cos(phase),
        -params.epsilon * params.big_omega * math.sin(phase),
    )


def _mean_accel(
    x: float, width: float, lin: float, cubic: float, skew: float = 0.0
) -> float:
    # lin·x − cubic·⟨x³⟩ with ⟨x³⟩ − x³ = 3Wx + S; every mean equation shares this form
    return lin * x - cubic * x**3 - cubic * (3.0 * width * x + skew)


def _width_jerk(
    x: float,
    v: float,
    width: float,
    width_rate: float,
    lin: float,
    sq: float,
    quad: float,
    cross: float,
    literal_dots: bool = False,
) -> float:
    if literal_dots:
        d_width_sq = width_rate * width_rate
        d_mean_sq = v * v
    else:
        d_width_sq = 2.0 * width * width_rate
        d_mean_sq = 2.0 * x * v
    return (
        lin * width_rate
        - sq * d_width_sq
        - quad * x * x * width_rate
        - cross * width * d_mean_sq
    )


def _driven_width_jerk(
    x: float, v: float, width: float, width_rate: float, f: float, f_dot: float,
    omega_sq: float, lam: float,
) -> float:
    g = 1.0 + f
    jerk = _width_jerk(
        x, v, width, width_rate,
        4.0 * omega_sq * g, 9.0 * lam * g, 12.0 * lam * g, 6.0 * lam * g,
    )
    return jerk + (
        2.0 * omega_sq * f_dot * width - 6.0 * lam * f_dot * (width * width + width * x * x)
    )


def _slow_width_coefficients(
    eff: EffectiveParams, mode: CouplingMode
) -> Tuple[float, float, float, float]:
    r = eff.ratio
    lin = 4.0 * eff.omega_sq * (1.0 - 2.0 * r)
    sq = 9.0 * eff.lam * (1.0 - 5.0 * r)
    if mode.mean_feeds_width:
        return lin, sq, 12.0 * eff.lam * (1.0 - 9.0 * r), 6.0 * eff.lam * (1.0 - 5.0 * r)
    return lin, sq, 0.0, 0.0


def _slow_mean_accel(
    x: float, width: float, eff: EffectiveParams, mode: CouplingMode
) -> float:
    lin = -eff.alpha
    cubic = -eff.beta
    if mode.variant == CouplingVariant.UNCOUPLED:
        return _mean_accel(x, 0.0, lin, cubic)
    if mode.variant == CouplingVariant.SKEWED_PARTIAL:
        return _mean_accel(x, width, lin, cubic, mode.gamma * x)
    return _mean_accel(x, width, lin, cubic)


# Classical dynamics


def classical_driven_deriv(
    state: Sequence[float], t: float, params: ModelParams
) -> ClassicalState:
    """
    Driven classical equation ẍ = ω²(1 + ε cos Ωt)x − λ(1 + ε cos Ωt)x³.

    Args:
        state: (x, v)
        t: Time
        params: Model parameters

    Returns:
        ClassicalState holding (ẋ, ẍ)
    """
    x, v = state
    f, _ = _drive(t, params)
    g = 1.0 + f
    return ClassicalState(v, _mean_accel(x, 0.0, params.omega_sq * g, params.lam * g))


def classical_slow_deriv(state: Sequence[float], eff: EffectiveParams) -> ClassicalState:
    """Averaged classical equation ẍ_s = −αx_s + βx_s³."""
    x, v = state
    return ClassicalState(v, _mean_accel(x, 0.0, -eff.alpha, -eff.beta))


def classical_fast_component(x_s: float, t: float, params: ModelParams) -> float:
    """Fast displacement x_f = −(ε/Ω²)(ω²x_s − λx_s³) cos Ωt."""
    force = params.omega_sq * x_s - params.lam * x_s**3
    return -(params.epsilon / params.big_omega**2) * force * math.cos(params.big_omega * t)


def classical_fast_velocity(x_s: float, t: float, params: ModelParams) -> float:
    """Time derivative of the fast displacement with x_s held fixed."""
    force = params.omega_sq * x_s - params.lam * x_s**3
    return (params.epsilon / params.big_omega) * force * math.sin(params.big_omega * t)


# Closed moment dynamics


def quantum_driven_deriv(
    state: Sequence[float], t: float, params: ModelParams
) -> QuantumState:
    """
    Driven closed moment system.

    The mean obeys ⟨ẍ⟩ = (1+f)[ω²⟨x⟩ − λ⟨x⟩³ − 3λW⟨x⟩]; the width obeys the
    third-order equation obtained with the Gaussian closure K = 3W² and zero
    skewness, with d(W²)/dt = 2WẆ and d(⟨x⟩²)/dt = 2⟨x⟩⟨ẋ⟩.

    Args:
        state: (⟨x⟩, ⟨ẋ⟩, W, Ẇ, Ẅ)
        t: Time
        params: Model parameters

    Returns:
        QuantumState holding the time derivative of each component
    """
    x, v, width, width_rate, width_accel = state
    f, f_dot = _drive(t, params)
    g = 1.0 + f
    accel = _mean_accel(x, width, params.omega_sq * g, params.lam * g)
    jerk = _driven_width_jerk(
        x, v, width, width_rate, f, f_dot, params.omega_sq, params.lam
    )
    return QuantumState(v, accel, width_rate, width_accel, jerk)


def quantum_slow_deriv(
    state: Sequence[float],
    eff: EffectiveParams,
    mode: CouplingMode,
    literal_dots: Optional[bool] = None,
) -> QuantumState:
    """
    Averaged closed moment system for a given coupling mode.

    Full keeps every coupling; Partial drops the mean from the width equation;
    Uncoupled additionally drops the width from the mean equation; Skewed
    partial adds the static skewness S = γ⟨x⟩ to the mean equation.

    Args:
        state: (⟨x⟩_s, ⟨ẋ⟩_s, W_s, Ẇ_s, Ẅ_s)
        eff: Effective parameters (carry ω², λ and r)
        mode: Coupling mode
        literal_dots: Read the dotted squares as squared rates instead of
            rates of squares (defaults to the configured reading)

    Returns:
        QuantumState holding the time derivative of each component
    """
    x, v, width, width_rate, width_accel = state
    accel = _slow_mean_accel(x, width, eff, mode)
    lin, sq, quad, cross = _slow_width_coefficients(eff, mode)
    jerk = _width_jerk(
        x, v, width, width_rate, lin, sq, quad, cross, _dots(literal_dots)
    )
    return QuantumState(v, accel, width_rate, width_accel, jerk)


def _fast_brackets(
    state: Sequence[float], params: ModelParams, literal_dots: bool
) -> Tuple[float, float, float]:
    x, v, width, width_rate, _ = state
    omega_sq, lam = params.omega_sq, params.lam
    mean_force = omega_sq * x - lam * (x**3 + 3.0 * x * width)
    width_cos = omega_sq * width - 3.0 * lam * (width * x * x + width * width)
    if literal_dots:
        d_width_sq = width_rate * width_rate
        d_mean_sq = v * v
    else:
        d_width_sq = 2.0 * width * width_rate
        d_mean_sq = 2.0 * x * v
    width_sin = 2.0 * omega_sq * width_rate - 3.0 * lam * (
        1.5 * d_width_sq + width * d_mean_sq + 2.0 * width_rate * x * x
    )
    return mean_force, width_cos, width_sin


def quantum_fast_components(
    state: Sequence[float],
    t: float,
    params: ModelParams,
    literal_dots: Optional[bool] = None,
) -> Tuple[float, float]:
    """
    Fast parts of the mean and of the width riding on a slow state.

    Args:
        state: Slow state (⟨x⟩_s, ⟨ẋ⟩_s, W_s, Ẇ_s, Ẅ_s)
        t: Time
        params: Model parameters
        literal_dots: Reading of the dotted squares in the sine bracket

    Returns:
        Tuple (⟨x⟩_f, W_f)
    """
    eps, big_omega = params.epsilon, params.big_omega
    mean_force, width_cos, width_sin = _fast_brackets(state, params, _dots(literal_dots))
    c, s = math.cos(big_omega * t), math.sin(big_omega * t)
    mean_fast = -(eps / big_omega**2) * mean_force * c
    width_fast = (
        -(2.0 * eps / big_omega**2) * width_cos * c
        - (2.0 * eps / big_omega**3) * width_sin * s
    )
    return mean_fast, width_fast


def quantum_fast_rates(
    state: Sequence[float],
    t: float,
    params: ModelParams,
    literal_dots: Optional[bool] = None,
) -> Tuple[float, float, float]:
    """
    Leading-order time derivatives of the fast parts with the slow state frozen.

    Returns:
        Tuple (d⟨x⟩_f/dt, dW_f/dt, d²W_f/dt²)
    """
    eps, big_omega = params.epsilon, params.big_omega
    mean_force, width_cos, width_sin = _fast_brackets(state, params, _dots(literal_dots))
    c, s = math.cos(big_omega * t), math.sin(big_omega * t)
    mean_rate = (eps / big_omega) * mean_force * s
    width_rate = (2.0 * eps / big_omega) * width_cos * s - (
        2.0 * eps / big_omega**2
    ) * width_sin * c
    width_accel = 2.0 * eps * width_cos * c + (2.0 * eps / big_omega) * width_sin * s
    return mean_rate, width_rate, width_accel


def moment_reconstruct(
    mean_x: float, width: float, skew: float = 0.0
) -> Tuple[float, float]:
    """
    Rebuild the raw moments entering the Ehrenfest equations.

    ⟨x³⟩ = ⟨x⟩³ + 3W⟨x⟩ + S, and with the Gaussian closure K = 3W²,
    ⟨x⁴⟩ − ⟨x³⟩⟨x⟩ = K + 3W⟨x⟩².

    Args:
        mean_x: ⟨x⟩
        width: W = ⟨x²⟩ − ⟨x⟩²
        skew: Third central moment S

    Returns:
        Tuple (⟨x³⟩, ⟨x⁴⟩ − ⟨x³⟩⟨x⟩)
    """
    if width < 0.0:
        raise ParameterError(f"Width must be non-negative, got {width}")
    third = mean_x**3 + third_moment_excess(mean_x, width, skew)
    kurtosis = 3.0 * width * width
    return third, kurtosis + 3.0 * width * mean_x**2


def third_moment_excess(mean_x: float, width: float, skew: float = 0.0) -> float:
    """⟨x³⟩ − ⟨x⟩³ = S + 3W⟨x⟩."""
    return skew + 3.0 * width * mean_x


# Integrator-facing right-hand sides


def make_classical_driven_rhs(params: ModelParams) -> Rhs:
    omega_sq, lam = params.omega_sq, params.lam
    eps, big_omega = params.epsilon, params.big_omega

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        g = 1.0 + eps * math.cos(big_omega * t)
        return np.array([y[1], _mean_accel(y[0], 0.0, omega_sq * g, lam * g)])

    return rhs


def make_classical_slow_rhs(eff: EffectiveParams) -> Rhs:
    lin, cubic = -eff.alpha, -eff.beta

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return np.array([y[1], _mean_accel(y[0], 0.0, lin, cubic)])

    return rhs


def make_quantum_driven_rhs(params: ModelParams) -> Rhs:
    omega_sq, lam = params.omega_sq, params.lam
    eps, big_omega = params.epsilon, params.big_omega

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        x, v, width, width_rate, width_accel = y
        phase = big_omega * t
        f = eps * math.cos(phase)
        f_dot = -eps * big_omega * math.sin(phase)
        g = 1.0 + f
        return np.array([
            v,
            _mean_accel(x, width, omega_sq * g, lam * g),
            width_rate,
            width_accel,
            _driven_width_jerk(x, v, width, width_rate, f, f_dot, omega_sq, lam),
        ])

    return rhs


def make_quantum_slow_rhs(
    eff: EffectiveParams, mode: CouplingMode, literal_dots: Optional[bool] = None
) -> Rhs:
    literal = _dots(literal_dots)
    lin, sq, quad, cross = _slow_width_coefficients(eff, mode)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        x, v, width, width_rate, width_accel = y
        return np.array([
            v,
            _slow_mean_accel(x, width, eff, mode),
            width_rate,
            width_accel,
            _width_jerk(x, v, width, width_rate, lin, sq, quad, cross, literal),
        ])

    return rhs
