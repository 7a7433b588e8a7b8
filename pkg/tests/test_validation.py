"""
Unit tests for the property suites behind `validate`.
"""
import numpy as np

from app.modules.experiments.schemas import ValidationSettings
from app.modules.experiments.validation import (
    SUPERMODULARITY_SLACK,
    check_approx_ratio,
    check_monotone_supermodular,
)


def test_supermodularity_runs_every_requested_trial():
    mono, supermod = check_monotone_supermodular(np.random.default_rng(4), 30)

    assert mono.trials == supermod.trials == 30
    assert mono.passed and supermod.passed


def test_supermodularity_compares_proper_subsets():
    """Test S strictly inside T, so no trial scores gain(S) - gain(T) == 0."""
    _, supermod = check_monotone_supermodular(np.random.default_rng(0), 50)

    assert supermod.worst_slack > SUPERMODULARITY_SLACK


def test_approx_ratio_suite():
    settings = ValidationSettings.quick(seed=0).model_copy(update={"approx_ratio_graphs": 1, "random_repetitions": 4})

    ratio, below_random = check_approx_ratio(settings)

    assert ratio.suite == "approx_ratio"
    assert ratio.trials == below_random.trials == 1
    assert ratio.passed
    assert below_random.passed


def test_approx_ratio_suite_can_be_disabled():
    settings = ValidationSettings.quick().model_copy(update={"approx_ratio_graphs": 0})

    ratio, below_random = check_approx_ratio(settings)

    assert not ratio.passed and ratio.trials == 0
    assert below_random.worst_slack == 0.0
