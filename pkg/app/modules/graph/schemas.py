"""
Graph value schemas.

A candidate edge is the unit of selection: one endpoint in the leader set Q,
one follower endpoint, and the weight it would carry once added.
"""
from pydantic import BaseModel, Field, model_validator


class CandidateEdge(BaseModel):
    """A nonexistent leader-follower edge eligible for addition."""
    leader: int = Field(ge=0)  # vertex id in Q
    follower: int = Field(ge=0)  # vertex id in V \ Q
    weight: float = Field(default=1.0, gt=0)

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _distinct_endpoints(self) -> "CandidateEdge":
        if self.leader == self.follower:
            raise ValueError("candidate edge endpoints must differ")
        return self

    def sort_key(self) -> tuple[int, int]:
        """Canonical (follower, leader) order used for ties everywhere."""
        return (self.follower, self.leader)
