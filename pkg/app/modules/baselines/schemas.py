"""
Baseline strategy tags.
"""
from typing import Literal, Optional

from pydantic import BaseModel

StrategyName = Literal["Random", "TopDegree", "TopCent", "BruteForce"]
TopCentMode = Literal["information", "grounded"]


class StrategyTag(BaseModel):
    """Which comparison strategy produced a selection, and its seed if it draws randomness."""
    name: StrategyName
    seed: Optional[int] = None
    mode: Optional[TopCentMode] = None  # TopCent only

    model_config = {"frozen": True}
