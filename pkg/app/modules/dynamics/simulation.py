"""
Stochastic simulation of noisy leader-follower opinion dynamics.

Followers integrate
    dx_i = -sum_j w_ij (x_i - x_j) dt + noise_scale dW_i
while leaders hold leader_value. With L = L(S)_Q and X its row sums (the
conductance of each follower into Q), the follower block evolves as
    x <- x - dt (L x - X xbar) + noise_scale sqrt(dt) xi,   xi ~ N(0, I)
The steady-state mean of sum_i (x_i - xbar)^2 is the polarization.
"""
import logging
import math
from typing import Sequence, TextIO

import numpy as np

from app.errors import InputValidationError, StabilityError
from app.modules.dynamics.schemas import PolarizationEstimate, SimulationConfig
from app.modules.graph.graph import Graph
from app.modules.graph.grounded import GroundedSystem, apply_edges, grounded_laplacian
from app.modules.graph.leaders import LeaderConfig
from app.modules.graph.schemas import CandidateEdge
from app.modules.linalg.solver import gershgorin_upper

logger = logging.getLogger(__name__)

POWER_MAX_ITER = 2000
POWER_TOL = 1e-9
# Power iteration approaches lambda_max from below; inflate, capped by Gershgorin
POWER_SLACK = 0.005
# Noise is drawn this many steps at a time per path
NOISE_CHUNK = 256


def stability_bound(sys: GroundedSystem, seed: int = 0) -> float:
    """
    2 / lambda_max estimate for explicit Euler on the drift -L(S)_Q x.

    lambda_max comes from seeded power iteration, inflated slightly and capped
    by the Gershgorin bound, so the estimate is never below the true value by
    more than the iteration error.
    """
    matrix = sys.matrix
    upper = gershgorin_upper(matrix)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(sys.dim)
    v /= np.linalg.norm(v)
    rho = 0.0
    for _ in range(POWER_MAX_ITER):
        mv = matrix @ v
        rho_new = float(v @ mv)
        norm = np.linalg.norm(mv)
        if norm == 0:
            break
        v = mv / norm
        if abs(rho_new - rho) <= POWER_TOL * abs(rho_new):
            rho = rho_new
            break
        rho = rho_new
    lam = min(rho * (1.0 + POWER_SLACK), upper)
    return 2.0 / lam


def _path_rng(seed: int, path: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, path])))


def simulate_paths(
    sys: GroundedSystem,
    sim: SimulationConfig,
    dump: TextIO | None = None,
    dump_every: int = 1,
) -> tuple[PolarizationEstimate, np.ndarray]:
    """
    Integrate all paths and estimate the polarization.

    Args:
        sys: Grounded system (edges already added are part of the dynamics)
        sim: Simulation settings
        dump: Optional text stream receiving "t,follower_id,x" rows for path 0
        dump_every: Write every this many steps to dump

    Returns:
        (estimate, final full state of shape (n, n_paths)); leader rows stay at leader_value

    Raises:
        StabilityError: dt not below the stability bound
    """
    bound = stability_bound(sys, sim.seed)
    dt = 0.1 * bound if sim.dt is None else sim.dt
    if dt >= bound:
        raise StabilityError(dt, bound)

    cfg = sys.config
    xbar = sim.leader_value
    matrix = sys.matrix
    coupling = (sys.leader_conductance + sys.diag_bump)[:, None] * xbar
    burn_steps = math.ceil(sim.t_burn / dt)
    sample_steps = math.ceil(sim.t_sample / dt)
    batches = min(sim.batches, sample_steps)
    batch_len = sample_steps // batches
    total_steps = burn_steps + sample_steps
    noise_sd = sim.noise_scale * math.sqrt(dt)

    rngs = [_path_rng(sim.seed, path) for path in range(sim.n_paths)]
    full = np.full((cfg.n, sim.n_paths), xbar)
    x = np.full((sys.dim, sim.n_paths), xbar)
    if sim.initial_spread > 0:
        for path, rng in enumerate(rngs):
            x[:, path] += sim.initial_spread * rng.standard_normal(sys.dim)

    batch_sums = np.zeros((batches, sim.n_paths))
    if dump is not None:
        dump.write("t,follower_id,x\n")

    logger.info(
        f"Simulating dim={sys.dim}, paths={sim.n_paths}, dt={dt:.4g} (bound {bound:.4g}), "
        f"{total_steps} steps"
    )
    step = 0
    while step < total_steps:
        chunk = min(NOISE_CHUNK, total_steps - step)
        noise = np.stack([rng.standard_normal((chunk, sys.dim)) for rng in rngs], axis=2)
        for s in range(chunk):
            x = x - dt * (matrix @ x - coupling) + noise_sd * noise[s]
            step += 1
            sample_index = step - burn_steps - 1
            if 0 <= sample_index < batches * batch_len:
                dev = x - xbar
                batch_sums[sample_index // batch_len] += np.einsum("ij,ij->j", dev, dev)
            if dump is not None and step % dump_every == 0:
                t = step * dt
                for u, value in zip(cfg.followers, x[:, 0]):
                    dump.write(f"{t:.6g},{int(u)},{value:.10g}\n")
        if step % max(1, total_steps // 10) < chunk:
            logger.debug(f"Simulation progress: {step}/{total_steps} steps")

    batch_means = (batch_sums / batch_len).ravel()
    value = float(batch_means.mean())
    stderr = float(batch_means.std(ddof=1) / math.sqrt(batch_means.size)) if batch_means.size > 1 else 0.0
    full[cfg.followers] = x
    estimate = PolarizationEstimate(
        value=value, stderr=stderr, samples_used=batches * batch_len * sim.n_paths, dt=dt
    )
    return estimate, full


def simulate(
    g: Graph,
    cfg: LeaderConfig,
    sim: SimulationConfig,
    added: Sequence[CandidateEdge] = (),
    dump: TextIO | None = None,
) -> PolarizationEstimate:
    """
    Estimate the polarization of the dynamics on g (plus any added edges) by simulation.

    Raises:
        InputValidationError: Disconnected graph or invalid leaders
        StabilityError: dt not below the stability bound
    """
    if cfg.q == 0:
        raise InputValidationError("simulation needs at least one leader")
    sys = apply_edges(grounded_laplacian(g, cfg), list(added))
    estimate, _ = simulate_paths(sys, sim, dump)
    logger.info(f"Simulated polarization {estimate.value:.6g} +- {estimate.stderr:.2g}")
    return estimate
