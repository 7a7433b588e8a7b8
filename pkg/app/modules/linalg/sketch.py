"""
Random +-1/sqrt(p) sketch probes.

Every probe vector comes from its own counter-based stream keyed by
(seed, round, probe index, kind), so a probe is the same no matter which
thread draws it or in what order.
"""
import math

import numpy as np

from app.errors import InputValidationError

PROBE_KINDS = ("node", "edge", "diagonal")
_KIND_CODE = {kind: code for code, kind in enumerate(PROBE_KINDS)}


class SketchProbe:
    """
    One row of a p x dim sketch matrix.

    kind is "node" (numerator probes over followers), "edge" (over
    follower-follower edges) or "diagonal" (over followers, for the X part).
    """

    def __init__(self, kind: str, vector: np.ndarray, p: int):
        self.kind = kind
        self.vector = vector
        self.p = p

    @property
    def dim(self) -> int:
        return int(self.vector.size)

    def __repr__(self) -> str:
        return f"<SketchProbe(kind={self.kind}, dim={self.dim}, p={self.p})>"


def sketch_size(n: int, epsilon: float) -> int:
    """p = ceil(24 ln n / eps^2), at least 1."""
    if not epsilon > 0:
        raise InputValidationError(f"epsilon must be positive, got {epsilon}")
    if n < 2:
        return 1
    return max(1, math.ceil(24.0 * math.log(n) / (epsilon * epsilon)))


def probe_rng(seed: int, round_index: int, probe_index: int, kind: str) -> np.random.Generator:
    """Independent generator for one (round, probe, kind) triple."""
    key = np.random.SeedSequence([seed, round_index, probe_index, _KIND_CODE[kind]])
    return np.random.Generator(np.random.Philox(key))


def random_signs(dim: int, p: int, rng: np.random.Generator) -> np.ndarray:
    scale = 1.0 / math.sqrt(p)
    return np.where(rng.integers(0, 2, size=dim, dtype=np.int8) == 1, scale, -scale)


def make_probe(kind: str, dim: int, p: int, rng: np.random.Generator) -> SketchProbe:
    """
    Draw one probe with entries +-1/sqrt(p), each sign with probability 1/2.

    Raises:
        InputValidationError: Unknown kind or p < 1
    """
    if kind not in _KIND_CODE:
        raise InputValidationError(f"unknown probe kind {kind!r}, expected one of {PROBE_KINDS}")
    if p < 1:
        raise InputValidationError(f"sketch size p must be at least 1, got {p}")
    return SketchProbe(kind, random_signs(dim, p, rng), p)
