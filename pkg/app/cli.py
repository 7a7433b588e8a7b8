"""
Command-line entry point: `python -m app.cli {run,bench,validate} ...`

Exit codes: 0 success, 1 a validation property failed, 2 invalid input,
3 numerical failure.
"""
import argparse
import logging
import os
import sys

from pydantic import ValidationError

from app.modules.experiments.runner import EXIT_INPUT, StageFailure, cmd_bench, cmd_run
from app.modules.experiments.schemas import RunSpec, ValidationSettings
from app.modules.experiments.validation import cmd_validate
from app.modules.greedy.schemas import WORKERS

logger = logging.getLogger("app.cli")

BENCH_DEFAULT_Q = 10
BENCH_DEFAULT_K = 20


def _leader_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated vertex ids, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarization",
        description="Select leader-incident edges that minimize polarization of noisy leader-follower dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", dest="inputs", action="append", default=[], metavar="PATH",
                       help="edge-list file 'u v [w]'; repeat for bench")
        leaders = p.add_mutually_exclusive_group()
        leaders.add_argument("--q", type=int, default=None, help="number of leaders sampled uniformly")
        leaders.add_argument("--leaders", type=_leader_list, default=None, metavar="LIST",
                             help="explicit leaders as comma-separated original ids")
        p.add_argument("--k", type=int, default=None, help="number of edges to add")
        p.add_argument("--alg", dest="algorithm", default="all",
                       choices=["exact", "approx", "random", "top-degree", "top-cent", "brute-force", "all"])
        p.add_argument("--eps", dest="epsilon", type=float, default=0.2)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--reps", type=int, default=1)
        p.add_argument("--out", default=".", metavar="DIR")
        p.add_argument("--workers", type=int, default=WORKERS)
        p.add_argument("--dense-cap", type=int, default=None)
        p.add_argument("--strict-delta", action="store_true",
                       help="use the theoretical solver tolerances instead of eps/6")
        p.add_argument("--fix-Q", dest="fix_q", action="store_true",
                       help="keep the same sampled leaders across repetitions")
        p.add_argument("--top-cent-mode", default="information", choices=["information", "grounded"])
        p.add_argument("--write-id-map", action="store_true",
                       help="write orig_id/new_id pairs of the largest component to DIR/<name>.idmap")

    common(sub.add_parser("run", help="run selection algorithms and write trajectory/summary/chosen-edge CSVs"))
    common(sub.add_parser("bench", help="time exact and approx greedy on one or more inputs"))
    validate = sub.add_parser("validate", help="run the property suites and write validate_report.csv")
    common(validate)
    validate.add_argument("--quick", action="store_true", help="reduced trial counts")
    return parser


def spec_from_args(args: argparse.Namespace) -> RunSpec:
    fields = {
        "inputs": args.inputs,
        "q": args.q,
        "leaders": args.leaders,
        "k": args.k,
        "algorithm": args.algorithm,
        "epsilon": args.epsilon,
        "seed": args.seed,
        "reps": args.reps,
        "out": args.out,
        "workers": args.workers,
        "dense_cap": args.dense_cap,
        "strict_delta": args.strict_delta,
        "fix_q": args.fix_q,
        "top_cent_mode": args.top_cent_mode,
        "write_id_map": args.write_id_map,
    }
    if args.command == "bench":
        if fields["q"] is None and fields["leaders"] is None:
            fields["q"] = BENCH_DEFAULT_Q
        if fields["k"] is None:
            fields["k"] = BENCH_DEFAULT_K
    if fields["k"] is None:
        fields["k"] = 0
    return RunSpec(**fields)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.getenv("LOG_LEVEL", "INFO").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)

    try:
        spec = spec_from_args(args)
    except ValidationError as e:
        logger.error(f"Invalid arguments: {e}")
        return EXIT_INPUT

    try:
        if args.command == "run":
            return cmd_run(spec)
        if args.command == "bench":
            return cmd_bench(spec)
        settings = ValidationSettings.quick(spec.seed) if args.quick else ValidationSettings(seed=spec.seed)
        return cmd_validate(spec, settings)
    except StageFailure as e:
        logger.error(f"{args.command}: stage '{e.stage}' failed: {e.cause}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
