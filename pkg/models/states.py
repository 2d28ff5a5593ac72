"""
State and coupling-mode models for the classical and moment dynamics.
"""

from enum import Enum
from typing import NamedTuple, Optional
from pydantic import BaseModel, ConfigDict, Field, model_validator


class ClassicalState(NamedTuple):
    """Position and velocity of the classical particle (or of its slow part)."""

    x: float
    v: float


class QuantumState(NamedTuple):
    """Closed moment state: mean position, its rate, and the mean-square width
    with its first two time derivatives."""

    mean_x: float
    mean_v: float
    width: float
    width_rate: float
    width_accel: float


class CouplingVariant(str, Enum):
    UNCOUPLED = "uncoupled"
    PARTIAL = "partial"
    FULL = "full"
    SKEWED_PARTIAL = "skewed"


class CouplingMode(BaseModel):
    """How the mean and the width feed each other in the averaged system."""

    model_config = ConfigDict(frozen=True)

    variant: CouplingVariant
    gamma: Optional[float] = Field(None, allow_inf_nan=False)

    @model_validator(mode="after")
    def validate_gamma(self):
        if self.variant == CouplingVariant.SKEWED_PARTIAL and self.gamma is None:
            raise ValueError("Skewed partial coupling requires gamma")
        if self.variant != CouplingVariant.SKEWED_PARTIAL and self.gamma is not None:
            raise ValueError(f"gamma is not used by {self.variant.value} coupling")
        return self

    @classmethod
    def uncoupled(cls) -> "CouplingMode":
        return cls(variant=CouplingVariant.UNCOUPLED)

    @classmethod
    def partial(cls) -> "CouplingMode":
        return cls(variant=CouplingVariant.PARTIAL)

    @classmethod
    def full(cls) -> "CouplingMode":
        return cls(variant=CouplingVariant.FULL)

    @classmethod
    def skewed(cls, gamma: float) -> "CouplingMode":
        return cls(variant=CouplingVariant.SKEWED_PARTIAL, gamma=gamma)

    @property
    def width_feeds_mean(self) -> bool:
        return self.variant != CouplingVariant.UNCOUPLED

    @property
    def mean_feeds_width(self) -> bool:
        return self.variant == CouplingVariant.FULL

    @property
    def label(self) -> str:
        if self.variant == CouplingVariant.SKEWED_PARTIAL:
            return f"{self.variant.value}(gamma={self.gamma!r})"
        return self.variant.value
