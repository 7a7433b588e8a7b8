"""
Property suites behind the `validate` command.

Each suite returns a ValidationCheck whose worst_slack is the smallest margin
by which the property held over all trials (negative when it failed).
"""
import csv
import logging
import math
from pathlib import Path

import numpy as np

from app.modules.baselines.brute_force import exact_polarization, run_brute_force
from app.modules.baselines.heuristics import run_random
from app.modules.dynamics.schemas import SimulationConfig
from app.modules.dynamics.simulation import simulate
from app.modules.experiments.corpus import default_corpus, random_connected_graph, watts_strogatz
from app.modules.experiments.runner import EXIT_OK, EXIT_PROPERTY_FAILED, load_graph, stage
from app.modules.experiments.schemas import RunSpec, ValidationCheck, ValidationSettings
from app.modules.graph.graph import Graph
from app.modules.graph.grounded import add_candidate, apply_edges, grounded_laplacian
from app.modules.graph.leaders import make_leader_config, sample_leaders
from app.modules.greedy.approx import f_gains_est, run_approx
from app.modules.greedy.exact import exact_gains, run_exact
from app.modules.greedy.schemas import ApproxParams
from app.modules.greedy.trajectory import exact_trajectory
from app.modules.linalg.dense import dense_inverse
from app.modules.linalg.solver import make_solve_handle, sdd_solve

logger = logging.getLogger(__name__)

GAIN_IDENTITY_TOL = 1e-9
SUPERMODULARITY_SLACK = 1e-10
GREEDY_BOUND_SLACK = 1e-9


def _random_instance(g: Graph, rng: np.random.Generator):
    q = int(rng.integers(1, max(1, g.n // 5) + 1))
    leaders = sample_leaders(g, q, int(rng.integers(0, 2**31 - 1)))
    cfg = make_leader_config(g, leaders)
    return cfg, grounded_laplacian(g, cfg)


def check_gain_identity(rng: np.random.Generator, trials: int, graphs: list[Graph] | None = None) -> ValidationCheck:
    """Closed-form gain equals the drop in trace after adding the edge."""
    worst = 0.0
    done = 0
    for trial in range(trials):
        g = graphs[trial % len(graphs)] if graphs else random_connected_graph(rng, 8, 60, weighted=True)
        cfg, sys = _random_instance(g, rng)
        if cfg.candidate_count == 0:
            continue
        edge = cfg.candidate_at(int(rng.integers(cfg.candidate_count)))
        invm = dense_inverse(sys)
        gain = exact_gains(sys, invm, [edge])[0].gain
        drop = invm.trace() - dense_inverse(add_candidate(sys, edge)).trace()
        worst = max(worst, abs(gain - drop) / abs(drop))
        done += 1
    return ValidationCheck(
        suite="gain_identity",
        passed=worst <= GAIN_IDENTITY_TOL,
        worst_slack=GAIN_IDENTITY_TOL - worst,
        trials=done,
        detail=f"max relative deviation {worst:.3e}",
    )


def check_monotone_supermodular(rng: np.random.Generator, trials: int) -> list[ValidationCheck]:
    """R_Q decreases with every addition and gains shrink as the edge set grows."""
    mono_worst = math.inf
    super_worst = math.inf
    done = 0
    while done < trials:
        g = random_connected_graph(rng, 8, 40, weighted=True)
        cfg, base = _random_instance(g, rng)
        if cfg.candidate_count < 2:
            continue
        order = rng.permutation(cfg.candidate_count)
        t_size = int(rng.integers(1, min(6, cfg.candidate_count - 1) + 1))
        # S is a proper subset of T
        s_size = int(rng.integers(0, t_size))
        big = [cfg.candidate_at(int(i)) for i in order[:t_size]]
        edge = cfg.candidate_at(int(order[t_size]))

        sys_s = apply_edges(base, big[:s_size])
        sys_t = apply_edges(base, big)
        inv_s = dense_inverse(sys_s)
        inv_t = dense_inverse(sys_t)
        gain_s = exact_gains(sys_s, inv_s, [edge])[0].gain
        gain_t = exact_gains(sys_t, inv_t, [edge])[0].gain

        drop = inv_t.trace() - dense_inverse(add_candidate(sys_t, edge)).trace()
        mono_worst = min(mono_worst, drop)
        super_worst = min(super_worst, gain_s - gain_t + SUPERMODULARITY_SLACK)
        done += 1
    return [
        ValidationCheck(
            suite="monotonicity",
            passed=mono_worst > 0,
            worst_slack=mono_worst,
            trials=done,
            detail="smallest trace drop from one addition",
        ),
        ValidationCheck(
            suite="supermodularity",
            passed=super_worst >= 0,
            worst_slack=super_worst,
            trials=done,
            detail="min of gain(S) - gain(T) + slack over S subset of T",
        ),
    ]


def check_greedy_bound(settings: ValidationSettings) -> ValidationCheck:
    """Greedy reduction is at least (1 - 1/e) of the optimal reduction."""
    g = default_corpus(settings.seed)[0][1]
    worst = math.inf
    done = 0
    near_optimal = 0
    for q in (3, 5):
        for rep in range(settings.greedy_bound_repetitions):
            leaders = sample_leaders(g, q, np.random.SeedSequence([settings.seed, q, rep]))
            cfg = make_leader_config(g, leaders)
            for k in range(1, settings.greedy_bound_max_k + 1):
                if math.comb(cfg.candidate_count, k) > settings.brute_force_cap:
                    continue
                greedy = run_exact(g, cfg, k)
                opt = run_brute_force(g, cfg, k, cap=settings.brute_force_cap)
                base = greedy.trajectory[0]
                slack = (base - greedy.final_value) - (1 - 1 / math.e) * (base - opt.final_value) + GREEDY_BOUND_SLACK
                worst = min(worst, slack)
                near_optimal += greedy.final_value <= 1.01 * opt.final_value
                done += 1
    share = near_optimal / done if done else 0.0
    return ValidationCheck(
        suite="greedy_bound",
        passed=done > 0 and worst >= 0,
        worst_slack=worst if done else 0.0,
        trials=done,
        detail=f"greedy within 1% of optimum on {share:.0%} of instances",
    )


def check_solve_contract(rng: np.random.Generator, settings: ValidationSettings) -> ValidationCheck:
    """Energy-norm error of the iterative solve stays below delta."""
    worst = math.inf
    done = 0
    for trial in range(settings.solve_trials):
        n = int(rng.integers(20, settings.solve_max_n + 1))
        g = watts_strogatz(n, 4, 0.3, int(rng.integers(0, 2**31 - 1)))
        cfg, sys = _random_instance(g, rng)
        dense = sys.matrix.toarray()
        b = rng.standard_normal(sys.dim)
        exact = np.linalg.solve(dense, b)
        exact_norm = math.sqrt(exact @ dense @ exact)
        for delta in (1e-2, 1e-6):
            x = sdd_solve(make_solve_handle(sys, delta, strict=True), b)
            err = x - exact
            ratio = math.sqrt(max(err @ dense @ err, 0.0)) / exact_norm
            worst = min(worst, 1.0 - ratio / delta)
            done += 1
    return ValidationCheck(
        suite="solve_contract",
        passed=worst >= 0,
        worst_slack=worst,
        trials=done,
        detail="1 - (S-norm error / delta), minimum over solves",
    )


def check_concentration(settings: ValidationSettings, strict_delta: bool) -> ValidationCheck:
    """Sketched gains are (3 eps)-approximations of exact gains for most candidates."""
    eps = settings.concentration_epsilon
    corpus = [g for _, g in default_corpus(settings.seed) if g.n <= 100]
    hits = 0
    total = 0
    for seed in range(settings.concentration_seeds):
        g = corpus[seed % len(corpus)]
        leaders = sample_leaders(g, 3, np.random.SeedSequence([settings.seed, seed]))
        cfg = make_leader_config(g, leaders)
        sys = grounded_laplacian(g, cfg)
        exact = np.array([e.gain for e in exact_gains(sys, dense_inverse(sys))])
        params = ApproxParams(
            epsilon=eps, seed=seed, delta_mode="theoretical" if strict_delta else "practical"
        )
        sketched = np.array([e.gain for e in f_gains_est(sys, params)])
        within = (sketched >= (1 - 3 * eps) * exact) & (sketched <= (1 + 3 * eps) * exact)
        hits += int(within.sum())
        total += within.size
        logger.debug(f"Concentration seed {seed}: {within.mean():.1%} within 3 eps")
    share = hits / total if total else 0.0
    return ValidationCheck(
        suite="estimator_concentration",
        passed=share >= settings.concentration_target,
        worst_slack=share - settings.concentration_target,
        trials=total,
        detail=f"{share:.1%} of sketched gains within 3 eps (eps={eps}, {'theoretical' if strict_delta else 'practical'} deltas)",
    )


def check_dynamics(settings: ValidationSettings) -> ValidationCheck:
    """Simulated polarization matches half the grounded trace; single follower matches 1/(2w)."""
    worst = math.inf
    done = 0

    pair = Graph.from_edges([0], [1], [1.0])
    cfg = make_leader_config(pair, [0])
    sim = SimulationConfig(dt=0.01, t_burn=10.0, t_sample=settings.dynamics_t_sample,
                           n_paths=settings.dynamics_paths, seed=settings.seed)
    est = simulate(pair, cfg, sim)
    worst = min(worst, (max(3 * est.stderr, 0.05 * 0.5) - abs(est.value - 0.5)) / 0.5)
    done += 1

    for name, g in default_corpus(settings.seed)[: settings.dynamics_graphs]:
        leaders = sample_leaders(g, 3, np.random.SeedSequence([settings.seed, g.n]))
        cfg = make_leader_config(g, leaders)
        target = exact_polarization(g, cfg)
        sim = SimulationConfig(t_burn=50.0, t_sample=settings.dynamics_t_sample,
                               n_paths=settings.dynamics_paths, seed=settings.seed)
        est = simulate(g, cfg, sim)
        margin = max(3 * est.stderr, 0.05 * target) - abs(est.value - target)
        logger.info(f"Dynamics {name}: simulated {est.value:.4g} +- {est.stderr:.2g}, exact {target:.4g}")
        worst = min(worst, margin / target)
        done += 1
    return ValidationCheck(
        suite="dynamics_polarization",
        passed=worst >= 0,
        worst_slack=worst,
        trials=done,
        detail="tolerance minus |simulated - exact|, relative",
    )


def check_approx_ratio(settings: ValidationSettings) -> list[ValidationCheck]:
    """
    Sketched greedy ends within approx_ratio_bound of the exact greedy's R_Q,
    and the exact greedy stays below the mean Random curve at every k.
    """
    ratio_worst = math.inf
    random_worst = math.inf
    done = 0
    for name, g in default_corpus(settings.seed)[: settings.approx_ratio_graphs]:
        leaders = sample_leaders(g, settings.approx_ratio_q, np.random.SeedSequence([settings.seed, g.n, 1]))
        cfg = make_leader_config(g, leaders)
        k = min(settings.approx_ratio_k, cfg.candidate_count)
        sys = grounded_laplacian(g, cfg)

        exact = run_exact(g, cfg, k)
        approx = run_approx(g, cfg, k, ApproxParams(epsilon=settings.approx_ratio_epsilon, seed=settings.seed))
        ratio = exact_trajectory(sys, approx.chosen)[-1] / exact.final_value
        ratio_worst = min(ratio_worst, settings.approx_ratio_bound - ratio)

        random_mean = np.mean(
            [exact_trajectory(sys, run_random(g, cfg, k, seed=rep).chosen) for rep in range(settings.random_repetitions)],
            axis=0,
        )
        random_worst = min(random_worst, float(np.min((random_mean - np.asarray(exact.trajectory)) / random_mean)))
        logger.info(f"Approx ratio {name}: {ratio:.4f} at k={k}")
        done += 1
    return [
        ValidationCheck(
            suite="approx_ratio",
            passed=done > 0 and ratio_worst >= 0,
            worst_slack=ratio_worst if done else 0.0,
            trials=done,
            detail=f"bound {settings.approx_ratio_bound} minus R_Q(approx) / R_Q(exact) (eps={settings.approx_ratio_epsilon})",
        ),
        ValidationCheck(
            suite="greedy_below_random",
            passed=done > 0 and random_worst >= -GREEDY_BOUND_SLACK,
            worst_slack=random_worst if done else 0.0,
            trials=done,
            detail=f"min over k of (mean Random - exact greedy) / mean Random, {settings.random_repetitions} draws",
        ),
    ]


def run_suites(spec: RunSpec, settings: ValidationSettings | None = None) -> list[ValidationCheck]:
    settings = settings or ValidationSettings(seed=spec.seed)
    rng = np.random.default_rng(settings.seed)

    inputs: list[Graph] = []
    for path in spec.inputs:
        with stage("load"):
            inputs.append(load_graph(path)[1])

    checks = [check_gain_identity(rng, settings.gain_identity_trials)]
    if inputs:
        input_check = check_gain_identity(rng, settings.gain_identity_trials, inputs)
        checks.append(input_check.model_copy(update={"suite": "gain_identity_inputs"}))
    checks.extend(check_monotone_supermodular(rng, settings.supermodularity_trials))
    checks.append(check_greedy_bound(settings))
    checks.append(check_solve_contract(rng, settings))
    checks.append(check_concentration(settings, spec.strict_delta))
    if settings.approx_ratio_graphs:
        checks.extend(check_approx_ratio(settings))
    if settings.dynamics_graphs:
        checks.append(check_dynamics(settings))
    return checks


def cmd_validate(spec: RunSpec, settings: ValidationSettings | None = None) -> int:
    """
    Run all property suites, write validate_report.csv and log each result.

    Returns:
        0 when every suite passed, 1 otherwise

    Raises:
        StageFailure: An input failed to load or a suite hit a domain error
    """
    out_dir = Path(spec.out)
    with stage("write"):
        out_dir.mkdir(parents=True, exist_ok=True)
    with stage("validate"):
        checks = run_suites(spec, settings)

    for check in checks:
        level = logging.INFO if check.passed else logging.ERROR
        logger.log(
            level,
            f"{check.suite}: {'PASS' if check.passed else 'FAIL'} "
            f"(worst slack {check.worst_slack:.3e}, {check.trials} trials) {check.detail}",
        )
    with stage("write"):
        with open(out_dir / "validate_report.csv", "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["suite", "passed", "worst_slack", "trials", "detail"])
            for check in checks:
                writer.writerow([check.suite, check.passed, repr(check.worst_slack), check.trials, check.detail])
    return EXIT_OK if all(c.passed for c in checks) else EXIT_PROPERTY_FAILED
