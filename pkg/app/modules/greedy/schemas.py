"""
Schemas for greedy selection: gain estimates, results and sketch parameters.
"""
import math
import os
from typing import Literal

from pydantic import BaseModel, Field, field_validator, model_validator

from app.modules.graph.schemas import CandidateEdge
from app.modules.linalg.sketch import sketch_size

WORKERS = int(os.getenv("POLAR_WORKERS", "1"))
PROBE_BLOCK = int(os.getenv("POLAR_PROBE_BLOCK", "16"))
DELTA_FLOOR = 1e-12


class GainEstimate(BaseModel):
    """Marginal decrease of R_Q from adding one candidate, with its two ingredients."""
    edge: CandidateEdge
    t_u: float = Field(gt=0)  # ||L(S)_Q^-1 e_u||^2
    r_u: float = Field(gt=0)  # (L(S)_Q^-1)_uu
    gain: float = Field(gt=0)  # w t_u / (1 + w r_u)

    model_config = {"frozen": True}


class SelectionResult(BaseModel):
    """Chosen edges in order with the objective after every prefix."""
    chosen: list[CandidateEdge] = []
    trajectory: list[float]  # R_Q after 0..k additions
    round_seconds: list[float] = []
    setup_seconds: float = 0.0  # candidate universe + initial factorization
    algorithm: str
    params: dict = {}
    trace_method: Literal["exact", "sketched"] = "exact"

    @model_validator(mode="after")
    def _lengths_agree(self) -> "SelectionResult":
        if len(self.trajectory) != len(self.chosen) + 1:
            raise ValueError(
                f"trajectory has {len(self.trajectory)} values for {len(self.chosen)} chosen edges"
            )
        return self

    @property
    def k(self) -> int:
        return len(self.chosen)

    @property
    def final_value(self) -> float:
        return self.trajectory[-1]

    @property
    def total_seconds(self) -> float:
        return self.setup_seconds + sum(self.round_seconds)

    def is_strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.trajectory, self.trajectory[1:]))


class ApproxParams(BaseModel):
    """
    Parameters of the sketched greedy.

    delta_mode "practical" solves to eps/6; "theoretical" uses the accuracy
    bounds that make the estimator provably (3 eps)-accurate, floored at 1e-12.
    """
    epsilon: float = Field(default=0.2, gt=0, le=0.25)
    sketch_size: int | None = Field(default=None, ge=1)  # overrides ceil(24 ln n / eps^2)
    delta_mode: Literal["practical", "theoretical"] = "practical"
    seed: int = 0
    workers: int = Field(default=WORKERS, ge=1)
    probe_block: int = Field(default=PROBE_BLOCK, ge=1)
    preconditioner: Literal["jacobi", "ilu"] = "jacobi"

    @field_validator("seed")
    @classmethod
    def _nonnegative_seed(cls, v: int) -> int:
        if v < 0:
            raise ValueError("seed must be nonnegative")
        return v

    @property
    def strict(self) -> bool:
        return self.delta_mode == "theoretical"

    def p(self, n: int) -> int:
        return self.sketch_size if self.sketch_size is not None else sketch_size(n, self.epsilon)

    def deltas(self, n: int, m: int, w_min: float, w_max: float) -> tuple[float, float]:
        """Solver accuracies (numerator, denominator) for a graph of n vertices and m edges."""
        eps = self.epsilon
        if self.delta_mode == "practical":
            return eps / 6.0, eps / 6.0
        m = max(m, 1)
        delta1 = eps * math.sqrt(1.0 - eps) * w_min / (6.0 * n**3 * w_max)
        delta2 = math.sqrt(eps * w_min**2 / (16.0 * n**5 * m**2) * math.sqrt((2.0 - 2.0 * eps) / w_max))
        return max(delta1, DELTA_FLOOR), max(delta2, DELTA_FLOOR)
