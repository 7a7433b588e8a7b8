"""
Database models for stored selection runs.
"""
from datetime import datetime, timezone

from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import relationship

from app.modules.experiments.database import Base


class ExperimentRun(Base):
    """
    One selection run: the instance, the algorithm and its headline numbers.
    """
    __tablename__ = "experiment_runs"

    id = Column(Integer, primary_key=True, index=True)
    created_at = Column(DateTime, nullable=False, default=lambda: datetime.now(timezone.utc), index=True)
    network = Column(String, nullable=False)
    n = Column(Integer, nullable=False)
    m = Column(Integer, nullable=False)
    q = Column(Integer, nullable=False)
    leaders = Column(Text, nullable=False)  # comma-separated original ids
    k = Column(Integer, nullable=False)
    algorithm = Column(String, nullable=False, index=True)
    epsilon = Column(Float, nullable=True)  # approx only
    seed = Column(Integer, nullable=False, default=0)
    initial_value = Column(Float, nullable=False)
    final_value = Column(Float, nullable=False)
    trace_method = Column(String, nullable=False)
    total_seconds = Column(Float, nullable=False)

    trajectory = relationship(
        "TrajectoryPoint", back_populates="run", cascade="all, delete-orphan", order_by="TrajectoryPoint.k_step"
    )
    chosen_edges = relationship(
        "ChosenEdgeRecord", back_populates="run", cascade="all, delete-orphan", order_by="ChosenEdgeRecord.step"
    )

    @property
    def polarization(self) -> float:
        return 0.5 * self.final_value

    @property
    def leader_ids(self) -> list[int]:
        return [int(v) for v in self.leaders.split(",")] if self.leaders else []

    def __repr__(self):
        return f"<ExperimentRun(id={self.id}, network={self.network}, algorithm={self.algorithm}, k={self.k})>"


class TrajectoryPoint(Base):
    """R_Q after k_step additions."""
    __tablename__ = "trajectory_points"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("experiment_runs.id"), nullable=False, index=True)
    k_step = Column(Integer, nullable=False)
    value = Column(Float, nullable=False)

    run = relationship("ExperimentRun", back_populates="trajectory")

    def __repr__(self):
        return f"<TrajectoryPoint(run_id={self.run_id}, k_step={self.k_step}, value={self.value})>"


class ChosenEdgeRecord(Base):
    """Edge added at a given step, in original vertex ids."""
    __tablename__ = "chosen_edges"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("experiment_runs.id"), nullable=False, index=True)
    step = Column(Integer, nullable=False)
    leader = Column(Integer, nullable=False)
    follower = Column(Integer, nullable=False)
    weight = Column(Float, nullable=False)

    run = relationship("ExperimentRun", back_populates="chosen_edges")

    def __repr__(self):
        return f"<ChosenEdgeRecord(run_id={self.run_id}, step={self.step}, {self.leader}-{self.follower})>"
