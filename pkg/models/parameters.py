"""
Physical parameter models for the driven double well and its volcano potential.
"""

import math
from typing import List, Optional
from pydantic import BaseModel, ConfigDict, Field, model_validator


class ModelParams(BaseModel):
    """Physical parameters of the driven double well.

    The mass never enters an equation of motion; it is kept so the bare
    potential can be reported in energy units.
    """

    model_config = ConfigDict(frozen=True)

    omega_sq: float = Field(..., gt=0.0, allow_inf_nan=False)
    lam: float = Field(..., ge=0.0, allow_inf_nan=False)
    epsilon: float = Field(..., ge=0.0, allow_inf_nan=False)
    big_omega: float = Field(..., gt=0.0, allow_inf_nan=False)
    mass: float = Field(1.0, gt=0.0, allow_inf_nan=False)

    @model_validator(mode="after")
    def validate_ratio(self):
        if not math.isfinite(self.ratio):
            raise ValueError("Drive ratio epsilon^2 omega^2 / Omega^2 is not finite")
        return self

    @property
    def omega(self) -> float:
        return math.sqrt(self.omega_sq)

    @property
    def ratio(self) -> float:
        """Drive ratio r = ε²ω²/Ω²."""
        return self.epsilon**2 * self.omega_sq / self.big_omega**2

    @property
    def smallness(self) -> float:
        """Averaging-validity figure εω²/Ω²."""
        return self.epsilon * self.omega_sq / self.big_omega**2

    @property
    def drive_period(self) -> float:
        return 2.0 * math.pi / self.big_omega


class EffectiveParams(BaseModel):
    """Coefficients of the averaged slow dynamics.

    `turning_point` and `barrier_height` are None unless both alpha and beta
    are positive (the volcano regime).
    """

    model_config = ConfigDict(frozen=True)

    alpha: float
    beta: float
    ratio: float = Field(..., ge=0.0)
    omega_sq: float = Field(..., gt=0.0)
    lam: float = Field(..., ge=0.0)
    turning_point: Optional[float] = None
    barrier_height: Optional[float] = None

    @model_validator(mode="after")
    def validate_volcano_flags(self):
        has_flags = self.turning_point is not None and self.barrier_height is not None
        if has_flags and not self.is_volcano:
            raise ValueError("Turning point is only defined when alpha > 0 and beta > 0")
        return self

    @property
    def is_volcano(self) -> bool:
        return self.alpha > 0.0 and self.beta > 0.0


class RegimeReport(BaseModel):
    """Validity diagnostics for the high-frequency averaging."""

    model_config = ConfigDict(frozen=True)

    ratio: float
    volcano: bool
    smallness: float
    frequency_ratio: float
    warning: bool
    messages: List[str] = []
