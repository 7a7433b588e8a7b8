"""
Experiment driver behind the `run` and `bench` commands.

Output files (all comma-separated with a header row):
- trajectory.csv: repetition, algorithm, k_step, R_Q, wall_ms
- summary.csv: algorithm, reps, k, final_R_Q_mean, final_R_Q_stderr, ratio_to_exact
- chosen_edges.csv: repetition, algorithm, step, leader, follower, weight (original ids)
- bench.csv: network, n, m, algorithm, seconds, universe_seconds ("---" when skipped)

Every failure is tagged with the stage it happened in (load, leaders, an
algorithm name, write) and an exit code: 2 for input problems, 3 for
numerical ones.
"""
import csv
import logging
import math
import os
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from app.errors import InputValidationError, NumericalError, PolarizationError
from app.modules.baselines.brute_force import BRUTE_FORCE_CAP, run_brute_force
from app.modules.baselines.heuristics import run_random, run_top_cent, run_top_degree
from app.modules.baselines.schemas import TopCentMode
from app.modules.experiments.schemas import RunSpec
from app.modules.graph.graph import Graph, largest_connected_component, load_edge_list, write_id_mapping
from app.modules.graph.grounded import grounded_laplacian
from app.modules.graph.leaders import LeaderConfig, make_leader_config, sample_leaders
from app.modules.greedy.approx import run_approx
from app.modules.greedy.exact import run_exact
from app.modules.greedy.schemas import ApproxParams, SelectionResult
from app.modules.greedy.trajectory import exact_trajectory
from app.modules.linalg.dense import DENSE_CAP

logger = logging.getLogger(__name__)

FREEZE_TIMINGS = bool(os.getenv("POLAR_FREEZE_TIMINGS"))
BENCH_SKIPPED = "---"

EXIT_OK = 0
EXIT_PROPERTY_FAILED = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

# Distinct seed streams per algorithm within one repetition
_SEED_SALT = {"approx": 1, "random": 2, "top-degree": 3, "top-cent": 4}


class StageFailure(Exception):
    """A command stage failed; carries the stage name and the exit code to use."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        self.exit_code = exit_code_for(cause)
        super().__init__(f"{stage} failed: {cause}")


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(error, (InputValidationError, ValidationError, OSError, ValueError)):
        return EXIT_INPUT
    return EXIT_NUMERICAL


@contextmanager
def stage(name: str):
    """Tag domain, validation and I/O errors raised inside with the stage name."""
    try:
        yield
    except StageFailure:
        raise
    except (PolarizationError, ValidationError, OSError) as e:
        logger.error(f"Stage '{name}' failed: {e}", exc_info=True)
        raise StageFailure(name, e) from e


def derive_seed(seed: int, repetition: int, salt: int = 0) -> int:
    """Independent 32-bit seed for one (repetition, purpose) pair."""
    return int(np.random.SeedSequence([seed, repetition, salt]).generate_state(1)[0])


def load_graph(path: str, id_map_dir: Path | None = None) -> tuple[str, Graph]:
    """Read an edge list and keep its largest connected component."""
    with open(path, "r", encoding="utf-8") as f:
        g = load_edge_list(f)
    lcc = largest_connected_component(g)
    name = Path(path).stem
    if id_map_dir is not None:
        map_path = id_map_dir / f"{name}.idmap"
        with open(map_path, "w", encoding="utf-8") as f:
            write_id_mapping(lcc, f)
        logger.info(f"Wrote id mapping to {map_path}")
    return name, lcc


def resolve_leaders(g: Graph, spec: RunSpec, repetition: int) -> list[int]:
    """
    Compact leader ids for one repetition.

    Explicit leaders are original ids and must survive the component
    extraction. Sampled leaders are redrawn per repetition unless fix_q.
    """
    if spec.leaders is not None:
        wanted = np.asarray(spec.leaders, dtype=np.int64)
        pos = np.searchsorted(g.labels, wanted)
        pos = np.minimum(pos, g.n - 1)
        missing = wanted[g.labels[pos] != wanted]
        if missing.size:
            raise InputValidationError(f"leaders not in the largest component: {missing.tolist()}")
        return sorted(int(p) for p in pos)
    if spec.q is None:
        raise InputValidationError("either --q or --leaders is required")
    draw = 0 if spec.fix_q else repetition
    return sample_leaders(g, spec.q, np.random.SeedSequence([spec.seed, draw]))


def execute_selection(
    algorithm: str,
    g: Graph,
    cfg: LeaderConfig,
    k: int,
    seed: int = 0,
    epsilon: float = 0.2,
    strict_delta: bool = False,
    workers: int = 1,
    dense_cap: int | None = None,
    top_cent_mode: TopCentMode = "information",
) -> SelectionResult:
    """Dispatch one algorithm by its CLI name."""
    params = ApproxParams(
        epsilon=epsilon,
        delta_mode="theoretical" if strict_delta else "practical",
        seed=seed,
        workers=workers,
    )
    if algorithm == "exact":
        return run_exact(g, cfg, k, dense_cap)
    if algorithm == "approx":
        return run_approx(g, cfg, k, params)
    if algorithm == "random":
        return run_random(g, cfg, k, seed, dense_cap, params)
    if algorithm == "top-degree":
        return run_top_degree(g, cfg, k, seed, dense_cap, params)
    if algorithm == "top-cent":
        return run_top_cent(g, cfg, k, seed, top_cent_mode, dense_cap, params)
    if algorithm == "brute-force":
        return run_brute_force(g, cfg, k, dense_cap=dense_cap, workers=workers)
    raise InputValidationError(f"unknown algorithm {algorithm!r}")


def reported_trajectory(result: SelectionResult, g: Graph, cfg: LeaderConfig, dense_cap: int | None) -> list[float]:
    """Trajectory in the exact objective whenever L_Q fits under the dense cap."""
    cap = DENSE_CAP if dense_cap is None else dense_cap
    if result.trace_method == "exact" or cfg.dim > cap:
        return list(result.trajectory)
    return exact_trajectory(grounded_laplacian(g, cfg), result.chosen, cap)


def cumulative_ms(result: SelectionResult) -> list[float]:
    """Wall time in ms from the start of the run to each k_step."""
    if FREEZE_TIMINGS:
        return [0.0] * (result.k + 1)
    elapsed = [result.setup_seconds]
    for seconds in result.round_seconds:
        elapsed.append(elapsed[-1] + seconds)
    return [1000.0 * s for s in elapsed]


def _fmt(value: float) -> str:
    return repr(float(value))


def _skip_in_all(algorithm: str, cfg: LeaderConfig, k: int, dense_cap: int | None) -> str | None:
    """Reason to leave an algorithm out of an --alg all run, None to keep it."""
    cap = DENSE_CAP if dense_cap is None else dense_cap
    if algorithm in ("exact", "brute-force") and cfg.dim > cap:
        return f"L_Q dimension {cfg.dim} above dense cap {cap}"
    if algorithm == "brute-force" and math.comb(cfg.candidate_count, k) > BRUTE_FORCE_CAP:
        return f"C({cfg.candidate_count}, {k}) subsets above the brute-force cap"
    return None


def _mean_stderr(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values)
    if arr.size < 2:
        return float(arr.mean()), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def cmd_run(spec: RunSpec) -> int:
    """
    Run every requested algorithm for spec.reps repetitions and write the CSVs.

    Returns:
        Exit code 0

    Raises:
        StageFailure: Carries the failing stage and its exit code
    """
    if len(spec.inputs) != 1:
        raise StageFailure("load", InputValidationError("run takes exactly one --input"))
    out_dir = Path(spec.out)
    with stage("write"):
        out_dir.mkdir(parents=True, exist_ok=True)
    with stage("load"):
        name, g = load_graph(spec.inputs[0], out_dir if spec.write_id_map else None)
    logger.info(f"Run on {name}: n={g.n}, m={g.m}, k={spec.k}, reps={spec.reps}, algorithms={spec.algorithms()}")

    trajectory_rows: list[list[str]] = []
    edge_rows: list[list[str]] = []
    finals: dict[str, list[float]] = {}

    for rep in range(spec.reps):
        with stage("leaders"):
            cfg = make_leader_config(g, resolve_leaders(g, spec, rep))
        for algorithm in spec.algorithms():
            if spec.algorithm == "all":
                reason = _skip_in_all(algorithm, cfg, spec.k, spec.dense_cap)
                if reason:
                    logger.warning(f"Skipping {algorithm} in repetition {rep}: {reason}")
                    continue
            with stage(algorithm):
                result = execute_selection(
                    algorithm,
                    g,
                    cfg,
                    spec.k,
                    seed=derive_seed(spec.seed, rep, _SEED_SALT.get(algorithm, 0)),
                    epsilon=spec.epsilon,
                    strict_delta=spec.strict_delta,
                    workers=spec.workers,
                    dense_cap=spec.dense_cap,
                    top_cent_mode=spec.top_cent_mode,
                )
                values = reported_trajectory(result, g, cfg, spec.dense_cap)

            for step, (value, ms) in enumerate(zip(values, cumulative_ms(result))):
                trajectory_rows.append([str(rep), algorithm, str(step), _fmt(value), f"{ms:.3f}"])
            for step, edge in enumerate(result.chosen, start=1):
                edge_rows.append([
                    str(rep), algorithm, str(step),
                    str(int(g.labels[edge.leader])), str(int(g.labels[edge.follower])), _fmt(edge.weight),
                ])
            finals.setdefault(algorithm, []).append(values[-1])
        logger.info(f"Repetition {rep + 1}/{spec.reps} done")

    summary_rows = []
    exact_mean = _mean_stderr(finals["exact"])[0] if "exact" in finals else None
    for algorithm, values in finals.items():
        mean, stderr = _mean_stderr(values)
        ratio = _fmt(mean / exact_mean) if exact_mean else ""
        summary_rows.append([algorithm, str(len(values)), str(spec.k), _fmt(mean), _fmt(stderr), ratio])

    with stage("write"):
        _write_csv(out_dir / "trajectory.csv", ["repetition", "algorithm", "k_step", "R_Q", "wall_ms"], trajectory_rows)
        _write_csv(
            out_dir / "summary.csv",
            ["algorithm", "reps", "k", "final_R_Q_mean", "final_R_Q_stderr", "ratio_to_exact"],
            summary_rows,
        )
        _write_csv(
            out_dir / "chosen_edges.csv",
            ["repetition", "algorithm", "step", "leader", "follower", "weight"],
            edge_rows,
        )
    logger.info(f"Wrote trajectory.csv, summary.csv, chosen_edges.csv to {out_dir}")
    return EXIT_OK


def cmd_bench(spec: RunSpec) -> int:
    """
    Time exact and approx greedy on every input and write bench.csv.

    Exact is recorded as "---" when L_Q exceeds the dense cap.
    """
    if not spec.inputs:
        raise StageFailure("load", InputValidationError("bench needs at least one --input"))
    out_dir = Path(spec.out)
    with stage("write"):
        out_dir.mkdir(parents=True, exist_ok=True)
    cap = DENSE_CAP if spec.dense_cap is None else spec.dense_cap
    algorithms = [spec.algorithm] if spec.algorithm in ("exact", "approx") else ["exact", "approx"]

    rows: list[list[str]] = []
    for path in spec.inputs:
        with stage("load"):
            name, g = load_graph(path, out_dir if spec.write_id_map else None)
        with stage("leaders"):
            leaders = resolve_leaders(g, spec, 0)
            start = time.perf_counter()
            cfg = make_leader_config(g, leaders)
            universe_seconds = 0.0 if FREEZE_TIMINGS else time.perf_counter() - start

        for algorithm in algorithms:
            if algorithm == "exact" and cfg.dim > cap:
                logger.info(f"Bench {name}: exact skipped, dim {cfg.dim} above dense cap {cap}")
                rows.append([name, str(g.n), str(g.m), algorithm, BENCH_SKIPPED, f"{universe_seconds:.4f}"])
                continue
            with stage(algorithm):
                result = execute_selection(
                    algorithm,
                    g,
                    cfg,
                    spec.k,
                    seed=derive_seed(spec.seed, 0, _SEED_SALT.get(algorithm, 0)),
                    epsilon=spec.epsilon,
                    strict_delta=spec.strict_delta,
                    workers=spec.workers,
                    dense_cap=spec.dense_cap,
                )
            seconds = 0.0 if FREEZE_TIMINGS else result.total_seconds
            rows.append([name, str(g.n), str(g.m), algorithm, f"{seconds:.4f}", f"{universe_seconds:.4f}"])
            logger.info(f"Bench {name}: {algorithm} {seconds:.2f}s (n={g.n}, m={g.m})")

    with stage("write"):
        _write_csv(out_dir / "bench.csv", ["network", "n", "m", "algorithm", "seconds", "universe_seconds"], rows)
    return EXIT_OK


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
