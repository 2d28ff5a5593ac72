"""
Result models for the escape experiments.
"""

from enum import Enum
from typing import Dict, List, Optional
from pydantic import BaseModel, ConfigDict, Field, model_validator


class Outcome(str, Enum):
    BOUNDED = "BOUNDED"
    ESCAPED = "ESCAPED"
    CLOSURE_BREAKDOWN = "CLOSURE_BREAKDOWN"


class OrbitClass(BaseModel):
    """Fate of one slow orbit over a finite horizon."""

    model_config = ConfigDict(frozen=True)

    outcome: Outcome
    time: Optional[float] = None
    horizon: float = Field(..., gt=0.0)
    max_abs_mean: float = 0.0

    @model_validator(mode="after")
    def validate_time(self):
        if self.outcome == Outcome.BOUNDED and self.time is not None:
            raise ValueError("Bounded orbits carry no event time")
        if self.outcome != Outcome.BOUNDED:
            if self.time is None or self.time > self.horizon:
                raise ValueError("Event time must lie within the horizon")
        return self

    @property
    def bounded(self) -> bool:
        return self.outcome == Outcome.BOUNDED


class BoundaryFlag(str, Enum):
    OK = "ok"
    ALL_ESCAPE = "all_escape"
    NO_ESCAPE = "no_escape"


class BoundaryPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    w0: float
    x_max: float = Field(..., ge=0.0)
    flag: BoundaryFlag = BoundaryFlag.OK


class SweepResult(BaseModel):
    """Maximum bounded initial mean as a function of the initial width."""

    model_config = ConfigDict(frozen=True)

    lam: float
    ratio: float
    mode: str
    points: List[BoundaryPoint]
    bisect_tol: float
    horizon: float
    bracket_high: float

    @model_validator(mode="after")
    def validate_points(self):
        widths = [point.w0 for point in self.points]
        if any(b <= a for a, b in zip(widths, widths[1:])):
            raise ValueError("Sweep widths must be strictly increasing")
        for point in self.points:
            if point.x_max > self.bracket_high:
                raise ValueError(f"x_max {point.x_max} exceeds bracket {self.bracket_high}")
        return self


class PeriodEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    period: float
    spread: float
    cycles: int
    method: str


class DiscrepancyReport(BaseModel):
    """Stroboscopic comparison of a driven run against its averaged model."""

    model_config = ConfigDict(frozen=True)

    system: str
    smallness: float
    samples: int
    max_abs: float
    rms: float
    width_max_abs: Optional[float] = None
    width_rms: Optional[float] = None
    rows: Dict[str, List[float]]
