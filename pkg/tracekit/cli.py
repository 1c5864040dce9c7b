"""Command-line harness: one-shot estimates, sweeps, failure tables and the fixture catalog.

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical failures.
"""
import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path

from pydantic import ValidationError
from sqlmodel import SQLModel

from tracekit.apps.estimation.endpoints import catalog, estimate
from tracekit.apps.estimation.models import EstimateRequest, EstimatorKind
from tracekit.apps.experiments.models import ExperimentSpec, FailureTableSpec
from tracekit.apps.experiments.runner import failure_table, run_experiment
from tracekit.apps.fixtures.models import FixtureKind
from tracekit.db import create_engine, create_session
from tracekit.errors import ConfigError, NumericalError
from tracekit.libs.stats.sketch import ProbeKind

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
LOG_FORMAT = "%(asctime)s [%(levelname)8s] %(message)s (%(filename)s:%(lineno)s)"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tracekit", description="Matrix-free stochastic trace estimation.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    one_shot = commands.add_parser("estimate", help="estimate the trace of one fixture once")
    source = one_shot.add_mutually_exclusive_group(required=True)
    source.add_argument("--fixture", choices=[kind.value for kind in FixtureKind])
    source.add_argument("--matrix-file", type=Path, help="Matrix Market file, estimated as is")
    one_shot.add_argument("--path", type=Path, help="input file of file-backed fixtures")
    one_shot.add_argument("--n", type=int, default=1000)
    one_shot.add_argument("--c", type=float, default=1.0)
    one_shot.add_argument("--s", type=float, default=10.0)
    one_shot.add_argument("--rank", type=int, default=5)
    one_shot.add_argument("--mesh-k", type=int, default=50)
    one_shot.add_argument("--iters", type=int)
    one_shot.add_argument("--psd", action="store_true", help="declare a matrix file PSD")
    one_shot.add_argument("--estimator", required=True, choices=[kind.value for kind in EstimatorKind])
    tolerance = one_shot.add_mutually_exclusive_group()
    tolerance.add_argument("--eps", type=float, help="absolute tolerance of adaptive estimators")
    tolerance.add_argument("--rel-eps", type=float, help="tolerance relative to the known trace")
    one_shot.add_argument("--delta", type=float, default=0.05)
    one_shot.add_argument("--ell", type=float, default=0.1)
    one_shot.add_argument("--budget", type=int, help="matvec budget of non-adaptive estimators")
    one_shot.add_argument("--seed", type=int, default=0)
    one_shot.add_argument("--block", type=int, default=1)
    one_shot.add_argument("--probes", choices=[kind.value for kind in ProbeKind], default=ProbeKind.GAUSSIAN.value)
    one_shot.add_argument("--reuse", action="store_true",
                          help="reuse the Frobenius probe products in the Hutchinson sum (prototype_adaptive)")

    sweep = commands.add_parser("sweep", help="run an experiment described by a JSON config")
    sweep.add_argument("--config", type=Path, required=True)
    sweep.add_argument("--output", type=Path, help="CSV path; overrides the config")
    sweep.add_argument("--store", metavar="DSN", help="also store the run in this database")

    table = commands.add_parser("failure-table", help="empirical A-Hutch++ failure rates")
    table.add_argument("--config", type=Path, required=True)
    table.add_argument("--output", type=Path, help="CSV path; overrides the config")

    fixtures = commands.add_parser("fixtures", help="fixture catalog")
    fixtures.add_argument("action", choices=["list"])
    return parser


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        datefmt=LOG_DATE_FORMAT,
    )


def _estimate_request(args: argparse.Namespace) -> EstimateRequest:
    if args.matrix_file is not None:
        fixture = {"kind": FixtureKind.MATRIX_FILE, "path": args.matrix_file, "psd": args.psd}
    else:
        fixture = {
            "kind": args.fixture, "path": args.path, "n": args.n, "c": args.c, "s": args.s,
            "rank": args.rank, "mesh_k": args.mesh_k, "iters": args.iters, "psd": args.psd,
            "seed": args.seed,
        }
    return EstimateRequest(
        fixture=fixture,
        estimator=args.estimator,
        budget=args.budget,
        eps=args.eps,
        rel_eps=args.rel_eps,
        delta=args.delta,
        ell=args.ell,
        block=args.block,
        seed=args.seed,
        probes=args.probes,
        reuse=args.reuse,
    )


async def _sweep(args: argparse.Namespace) -> int:
    spec = ExperimentSpec.model_validate_json(args.config.read_text(encoding="utf-8"))
    if args.output is not None:
        spec = spec.model_copy(update={"output": args.output})
    if spec.output is None:
        raise ConfigError("sweep needs an output path (config 'output' or --output)")
    if args.store is None:
        result = await run_experiment(spec)
    else:
        engine = create_engine(args.store)
        try:
            async with engine.begin() as conn:
                await conn.run_sync(SQLModel.metadata.create_all)
            async with create_session(engine)() as session:
                result = await run_experiment(spec, session=session)
        finally:
            await engine.dispose()
        logger.info("stored run %d in %s", result.run_id, args.store)
    print(f"wrote {len(result.rows)} rows to {spec.output}")
    return 0


async def _failure_table(args: argparse.Namespace) -> int:
    spec = FailureTableSpec.model_validate_json(args.config.read_text(encoding="utf-8"))
    if args.output is not None:
        spec = spec.model_copy(update={"output": args.output})
    cells = await failure_table(spec)
    for cell in cells:
        print(f"eps={cell.rel_eps:g}|tr(A)|  delta={cell.delta:g}  failure={cell.rate:.5f}")
    return 0


def dispatch(args: argparse.Namespace) -> int:
    match args.command:
        case "estimate":
            response = estimate(_estimate_request(args))
            print(response.model_dump_json(indent=2))
            return 0
        case "sweep":
            return asyncio.run(_sweep(args))
        case "failure-table":
            return asyncio.run(_failure_table(args))
        case "fixtures":
            print(json.dumps(catalog().model_dump(mode="json"), indent=2))
            return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return dispatch(args)
    except (ConfigError, ValidationError, OSError) as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
