"""
Simulation settings and the resulting polarization estimate.
"""
from typing import Optional

from pydantic import BaseModel, Field


class SimulationConfig(BaseModel):
    """Euler-Maruyama settings for the noisy leader-follower dynamics."""
    dt: Optional[float] = Field(default=None, gt=0)  # None: 0.1 x stability bound
    t_burn: float = Field(default=20.0, gt=0)
    t_sample: float = Field(default=200.0, gt=0)
    n_paths: int = Field(default=8, ge=1)
    seed: int = Field(default=0, ge=0)
    leader_value: float = 0.0  # fixed opinion of every leader
    noise_scale: float = Field(default=1.0, ge=0)  # 0 gives the deterministic consensus flow
    initial_spread: float = Field(default=0.0, ge=0)  # followers start at leader_value + spread * N(0, 1)
    batches: int = Field(default=10, ge=2)  # batch means per path for the standard error


class PolarizationEstimate(BaseModel):
    """Time and path average of the summed squared deviation from the leaders' opinion."""
    value: float = Field(ge=0)
    stderr: float = Field(ge=0)
    samples_used: int = Field(ge=0)
    dt: float
