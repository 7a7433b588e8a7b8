"""
Pydantic schemas for experiment specs, validation reports and the runs API.
"""
from datetime import datetime
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from app.modules.baselines.schemas import TopCentMode

AlgorithmName = Literal["exact", "approx", "random", "top-degree", "top-cent", "brute-force"]
ALGORITHMS: tuple[str, ...] = ("exact", "approx", "random", "top-degree", "top-cent", "brute-force")


class RunSpec(BaseModel):
    """One CLI invocation: inputs, leader selection, budget and algorithm switches."""
    inputs: List[str] = []
    q: Optional[int] = Field(default=None, ge=1)
    leaders: Optional[List[int]] = None  # original vertex ids from the file
    k: int = Field(default=0, ge=0)
    algorithm: Literal["exact", "approx", "random", "top-degree", "top-cent", "brute-force", "all"] = "all"
    epsilon: float = Field(default=0.2, gt=0, le=0.25)
    seed: int = Field(default=0, ge=0)
    reps: int = Field(default=1, ge=1)
    out: str = "."
    workers: int = Field(default=1, ge=1)
    dense_cap: Optional[int] = Field(default=None, ge=1)
    strict_delta: bool = False
    fix_q: bool = False
    top_cent_mode: TopCentMode = "information"
    write_id_map: bool = False

    @model_validator(mode="after")
    def _one_leader_source(self) -> "RunSpec":
        if self.q is not None and self.leaders is not None:
            raise ValueError("give either q or an explicit leader list, not both")
        if self.leaders is not None and not self.leaders:
            raise ValueError("explicit leader list must be nonempty")
        return self

    def algorithms(self) -> list[str]:
        return list(ALGORITHMS) if self.algorithm == "all" else [self.algorithm]


class ValidationCheck(BaseModel):
    """Outcome of one property suite."""
    suite: str
    passed: bool
    worst_slack: float  # most adverse margin observed; negative means violated
    trials: int
    detail: str = ""


# --- runs API ---


class RunRequest(BaseModel):
    """Synchronous selection request on a small graph given inline."""
    name: str = "inline"
    edge_list: str = Field(min_length=1)
    weighted: bool = True
    leaders: Optional[List[int]] = None  # original ids
    q: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0)
    k: int = Field(ge=0)
    algorithm: AlgorithmName = "exact"
    epsilon: float = Field(default=0.2, gt=0, le=0.25)
    top_cent_mode: TopCentMode = "information"

    @model_validator(mode="after")
    def _one_leader_source(self) -> "RunRequest":
        if (self.q is None) == (self.leaders is None):
            raise ValueError("give exactly one of q or leaders")
        return self


class TrajectoryPointResponse(BaseModel):
    k_step: int
    value: float

    model_config = {"from_attributes": True}


class ChosenEdgeResponse(BaseModel):
    step: int
    leader: int  # original ids
    follower: int
    weight: float

    model_config = {"from_attributes": True}


class RunResponse(BaseModel):
    """Run summary."""
    id: int
    created_at: datetime
    network: str
    n: int
    m: int
    q: int
    k: int
    algorithm: str
    epsilon: Optional[float] = None
    seed: int
    initial_value: float  # R_Q before any addition
    final_value: float  # R_Q after k additions
    polarization: float  # final_value / 2
    trace_method: str
    total_seconds: float

    model_config = {"from_attributes": True}


class RunDetailResponse(RunResponse):
    """Run with its trajectory and chosen edges."""
    leaders: List[int] = []
    trajectory: List[TrajectoryPointResponse] = []
    chosen_edges: List[ChosenEdgeResponse] = []

    model_config = {"from_attributes": True}


class ValidationSettings(BaseModel):
    """Sizes of the property suites run by `validate`."""
    gain_identity_trials: int = Field(default=200, ge=1)
    supermodularity_trials: int = Field(default=500, ge=1)
    greedy_bound_repetitions: int = Field(default=3, ge=1)
    greedy_bound_max_k: int = Field(default=4, ge=1)
    brute_force_cap: int = Field(default=100_000, ge=1)
    solve_trials: int = Field(default=6, ge=1)
    solve_max_n: int = Field(default=500, ge=10)
    concentration_seeds: int = Field(default=50, ge=1)
    concentration_epsilon: float = Field(default=0.25, gt=0, le=0.25)
    concentration_target: float = Field(default=0.9, gt=0, le=1)
    dynamics_graphs: int = Field(default=5, ge=0, le=5)
    dynamics_t_sample: float = Field(default=200.0, gt=0)
    dynamics_paths: int = Field(default=8, ge=1)
    approx_ratio_graphs: int = Field(default=5, ge=0, le=5)
    approx_ratio_q: int = Field(default=10, ge=1)
    approx_ratio_k: int = Field(default=20, ge=1)
    approx_ratio_epsilon: float = Field(default=0.2, gt=0, le=0.25)
    approx_ratio_bound: float = Field(default=1.05, ge=1)
    random_repetitions: int = Field(default=20, ge=1)
    seed: int = Field(default=0, ge=0)

    @classmethod
    def quick(cls, seed: int = 0) -> "ValidationSettings":
        """Reduced trial counts for smoke runs (`validate --quick`)."""
        return cls(
            gain_identity_trials=20,
            supermodularity_trials=40,
            greedy_bound_repetitions=1,
            greedy_bound_max_k=3,
            brute_force_cap=20_000,
            solve_trials=2,
            solve_max_n=120,
            concentration_seeds=20,
            dynamics_graphs=1,
            dynamics_t_sample=100.0,
            dynamics_paths=4,
            approx_ratio_graphs=2,
            approx_ratio_k=8,
            random_repetitions=5,
            seed=seed,
        )
