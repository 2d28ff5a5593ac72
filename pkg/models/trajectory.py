"""
Integrator configuration and trajectory models.
"""

from enum import Enum
from typing import Any, Dict, List, Optional, Tuple
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

CLASSICAL_COLUMNS = ["x", "v"]
QUANTUM_COLUMNS = ["x", "v", "W", "Wdot", "Wddot"]


class IntegratorMethod(str, Enum):
    RK4 = "rk4"
    RK45 = "rk45"


class EventKind(str, Enum):
    ESCAPE = "escape"
    WIDTH_NONPOSITIVE = "width_nonpositive"
    STEP_FAILURE = "step_failure"


class IntegratorConfig(BaseModel):
    """Time-stepping settings.

    RK4 needs `h`; RK45 needs `rel_tol` and `abs_tol`. A missing
    `escape_threshold` disables escape detection.
    """

    model_config = ConfigDict(frozen=True)

    method: IntegratorMethod = IntegratorMethod.RK45
    h: Optional[float] = Field(None, gt=0.0, allow_inf_nan=False)
    rel_tol: float = Field(1e-9, gt=0.0)
    abs_tol: float = Field(1e-12, gt=0.0)
    t_end: float = Field(..., gt=0.0, allow_inf_nan=False)
    sample_stride: int = Field(1, ge=1)
    escape_threshold: Optional[float] = Field(None, gt=0.0, allow_inf_nan=False)
    detect_width_collapse: bool = True

    @model_validator(mode="after")
    def validate_step(self):
        if self.method == IntegratorMethod.RK4 and self.h is None:
            raise ValueError("Fixed-step RK4 requires a step size h")
        return self


class TrajectoryEvent(BaseModel):
    """A terminal event located on a trajectory."""

    model_config = ConfigDict(frozen=True)

    kind: EventKind
    time: float
    state: Tuple[float, ...]


class Trajectory(BaseModel):
    """Time-ordered samples of one integration plus its event annotations."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: np.ndarray
    states: np.ndarray
    events: List[TrajectoryEvent] = []
    meta: Dict[str, Any] = {}

    @model_validator(mode="after")
    def validate_samples(self):
        if self.times.ndim != 1 or self.states.ndim != 2:
            raise ValueError("times must be 1-D and states 2-D")
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("states and times differ in length")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0.0):
            raise ValueError("times must be strictly increasing")
        for event in self.events:
            if not self.times[0] <= event.time <= self.times[-1]:
                raise ValueError(f"Event at t={event.time} lies outside the trajectory")
        self.times.setflags(write=False)
        self.states.setflags(write=False)
        return self

    @property
    def dimension(self) -> int:
        return self.states.shape[1]

    @property
    def final_event(self) -> Optional[TrajectoryEvent]:
        return self.events[-1] if self.events else None

    @property
    def escaped(self) -> bool:
        return any(event.kind == EventKind.ESCAPE for event in self.events)

    @property
    def max_abs_mean(self) -> float:
        return float(np.max(np.abs(self.states[:, 0])))

    def to_frame(self) -> pd.DataFrame:
        """Samples as a DataFrame with a leading `t` column."""
        columns = QUANTUM_COLUMNS if self.dimension == 5 else CLASSICAL_COLUMNS
        frame = pd.DataFrame(self.states, columns=columns)
        frame.insert(0, "t", self.times)
        return frame
