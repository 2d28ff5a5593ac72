"""
Potential tools: effective volcano coefficients, bare and slow potentials,
and drive-regime diagnostics.
"""

import math
from typing import Optional, Tuple, Union
import numpy as np
import pandas as pd
from models.parameters import EffectiveParams, ModelParams, RegimeReport
from utils.config import (
    DRIVE_SMALLNESS,
    REGIME_FREQUENCY_RATIO_MIN,
    REGIME_SMALLNESS_LIMIT,
    logger,
)
from utils.exceptions import ParameterError

ArrayLike = Union[float, np.ndarray]


def slow_coefficients(omega_sq: float, lam: float, ratio: float) -> EffectiveParams:
    """
    Coefficients of the averaged potential V_s(x) = αx²/2 − βx⁴/4 from the
    drive ratio alone.

    Args:
        omega_sq: Squared natural frequency ω²
        lam: Quartic coefficient λ
        ratio: Drive ratio r = ε²ω²/Ω²

    Returns:
        EffectiveParams; turning point and barrier are set only when α, β > 0
    """
    if not (omega_sq > 0.0 and lam >= 0.0 and ratio >= 0.0):
        raise ParameterError(
            f"Need omega_sq > 0, lambda >= 0, ratio >= 0 (got {omega_sq}, {lam}, {ratio})"
        )

    alpha = omega_sq * (ratio / 2.0 - 1.0)
    beta = lam * (2.0 * ratio - 1.0)

    turning_point = None
    barrier_height = None
    if alpha > 0.0 and beta > 0.0:
        turning_point = math.sqrt(alpha / beta)
        barrier_height = alpha**2 / (4.0 * beta)

    return EffectiveParams(
        alpha=alpha,
        beta=beta,
        ratio=ratio,
        omega_sq=omega_sq,
        lam=lam,
        turning_point=turning_point,
        barrier_height=barrier_height,
    )


def effective_coefficients(params: ModelParams) -> EffectiveParams:
    """Averaged-dynamics coefficients for a concrete drive (depends on ε, Ω only through r)."""
    return slow_coefficients(params.omega_sq, params.lam, params.ratio)


def reference_drive(
    omega_sq: float, ratio: float, smallness: Optional[float] = None
) -> Tuple[float, float]:
    """
    Concrete (ε, Ω) realising a drive ratio inside the averaging regime.

    Chooses εω²/Ω² = smallness, which gives ε = r/smallness and Ω = ω·ε/√r.
    The undriven ratio maps to ε = 0 and Ω = 10ω.

    Args:
        omega_sq: Squared natural frequency
        ratio: Drive ratio r
        smallness: Target εω²/Ω² (defaults to DRIVE_SMALLNESS)

    Returns:
        Tuple (epsilon, big_omega)
    """
    smallness = DRIVE_SMALLNESS if smallness is None else smallness
    if smallness <= 0.0:
        raise ParameterError(f"Drive smallness must be positive, got {smallness}")
    if ratio < 0.0:
        raise ParameterError(f"Drive ratio must be non-negative, got {ratio}")

    omega = math.sqrt(omega_sq)
    if ratio == 0.0:
        return 0.0, REGIME_FREQUENCY_RATIO_MIN * omega

    epsilon = ratio / smallness
    big_omega = omega * epsilon / math.sqrt(ratio)
    return epsilon, big_omega


def params_from_ratio(
    omega_sq: float,
    lam: float,
    ratio: float,
    smallness: Optional[float] = None,
    mass: float = 1.0,
) -> ModelParams:
    """ModelParams for a ratio-only request, using the reference drive mapping."""
    epsilon, big_omega = reference_drive(omega_sq, ratio, smallness)
    return ModelParams(
        omega_sq=omega_sq, lam=lam, epsilon=epsilon, big_omega=big_omega, mass=mass
    )


def potential_bare(x: ArrayLike, params: ModelParams) -> ArrayLike:
    """Undriven double well per unit mass: −ω²x²/2 + λx⁴/4."""
    x2 = x * x
    return -params.omega_sq * x2 / 2.0 + params.lam * x2 * x2 / 4.0


def potential_slow(x: ArrayLike, eff: EffectiveParams) -> ArrayLike:
    """Averaged (volcano) potential per unit mass: αx²/2 − βx⁴/4."""
    x2 = x * x
    return eff.alpha * x2 / 2.0 - eff.beta * x2 * x2 / 4.0


def double_well_minima(params: ModelParams) -> Optional[Tuple[float, float]]:
    """
    Location and depth of the bare wells.

    Returns:
        (x_min, V_min) with the minima at ±x_min, or None when λ = 0
    """
    if params.lam == 0.0:
        return None
    x_min = math.sqrt(params.omega_sq / params.lam)
    return x_min, -params.omega_sq**2 / (4.0 * params.lam)


def potential_profile(
    xs: np.ndarray,
    kind: str,
    params: Optional[ModelParams] = None,
    eff: Optional[EffectiveParams] = None,
) -> pd.DataFrame:
    """
    Tabulate the bare or the slow potential on a grid.

    Args:
        xs: Positions
        kind: "bare" or "slow"
        params: Required for the bare potential
        eff: Required for the slow potential

    Returns:
        DataFrame with columns x, V
    """
    xs = np.asarray(xs, dtype=float)
    if kind == "bare":
        if params is None:
            raise ParameterError("The bare potential needs the full model parameters")
        values = potential_bare(xs, params)
    elif kind == "slow":
        if eff is None:
            raise ParameterError("The slow potential needs effective parameters")
        values = potential_slow(xs, eff)
    else:
        raise ParameterError(f"Unknown potential kind: {kind}")
    return pd.DataFrame({"x": xs, "V": values})


def regime_report(params: ModelParams) -> RegimeReport:
    """
    Check the high-frequency conditions Ω ≫ ω and εω²/Ω² ≪ 1.

    Args:
        params: Model parameters

    Returns:
        RegimeReport with a warning flag and human-readable messages
    """
    ratio = params.ratio
    smallness = params.smallness
    frequency_ratio = params.big_omega / params.omega

    messages = []
    if smallness > REGIME_SMALLNESS_LIMIT:
        messages.append(
            f"epsilon*omega^2/Omega^2 = {smallness:.4g} exceeds {REGIME_SMALLNESS_LIMIT}"
        )
    if frequency_ratio < REGIME_FREQUENCY_RATIO_MIN:
        messages.append(
            f"Omega/omega = {frequency_ratio:.4g} is below {REGIME_FREQUENCY_RATIO_MIN:g}"
        )

    for message in messages:
        logger.warning(f"Averaging regime: {message}")

    return RegimeReport(
        ratio=ratio,
        volcano=ratio / 2.0 > 1.0,
        smallness=smallness,
        frequency_ratio=frequency_ratio,
        warning=bool(messages),
        messages=messages,
    )
