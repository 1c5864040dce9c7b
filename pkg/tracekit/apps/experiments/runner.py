"""Monte Carlo experiment harness: sweeps, paired budgets and failure tables.

Trials run concurrently in worker threads, with the per-trial seed ``seed + trial``.
Results are gathered in trial order, so the CSV output does not depend on scheduling.
"""
import asyncio
import csv
import functools
import logging
import math
from dataclasses import dataclass
from pathlib import Path

from sqlalchemy.ext.asyncio import AsyncSession

from tracekit.apps.estimation.estimators import run_estimator
from tracekit.apps.estimation.models import AdaptiveConfig, EstimatorKind, TraceReport
from tracekit.apps.experiments.models import (
    ExperimentRun,
    ExperimentSpec,
    FailureTableSpec,
    ResultRow,
    ResultRowBase,
)
from tracekit.apps.fixtures.builders import Fixture, generate_fixture
from tracekit.errors import ConfigError

logger = logging.getLogger(__name__)

CSV_COLUMNS = list(ResultRowBase.model_fields)


@dataclass
class ExperimentResult:
    rows: list[ResultRow]
    run_id: int | None = None


@dataclass(frozen=True)
class FailureCell:
    rel_eps: float
    delta: float
    failures: int
    repeats: int

    @property
    def rate(self) -> float:
        return self.failures / self.repeats


def format_value(value) -> str:
    """CSV cell text; floats keep 17 significant digits.

    >>> format_value(0.1), format_value(None), format_value(7)
    ('0.10000000000000001', '', '7')
    """
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: Path, header: list[str], records) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for record in records:
            writer.writerow([format_value(value) for value in record])


def _row(fixture: Fixture, sweep_value: float, trial: int, report: TraceReport) -> ResultRow:
    rel_error = None
    if fixture.truth is not None and fixture.truth != 0:
        rel_error = abs(report.estimate - fixture.truth) / abs(fixture.truth)
    return ResultRow(
        fixture_id=fixture.fixture_id,
        estimator=report.estimator.value,
        sweep_value=float(sweep_value),
        trial=trial,
        estimate=report.estimate,
        truth=fixture.truth,
        rel_error=rel_error,
        matvecs_total=report.matvecs_total,
        matvecs_lowrank=report.matvecs_lowrank,
        matvecs_hutchinson=report.matvecs_hutchinson,
        rank_used=report.rank_used,
        seed=report.seed,
    )


def _adaptive_config(spec: ExperimentSpec, eps: float, seed: int) -> AdaptiveConfig:
    if spec.estimator is EstimatorKind.PROTOTYPE_ADAPTIVE:
        return AdaptiveConfig(eps=eps, delta=spec.delta, ell=spec.ell, block=spec.block, seed=seed,
                              mode="guaranteed")
    return AdaptiveConfig(eps=eps, delta=spec.delta, block=spec.block, seed=seed, mode="practical")


def run_trial(spec: ExperimentSpec, fixture: Fixture, sweep_value: float, trial: int) -> list[ResultRow]:
    """One trial: the estimator itself, then the paired comparisons with the same matvec count."""
    seed = spec.seed + trial
    if not spec.estimator.adaptive:
        report = run_estimator(spec.estimator, fixture.operator, budget=int(sweep_value), seed=seed)
        return [_row(fixture, sweep_value, trial, report)]

    eps = abs(fixture.truth) / 2.0**sweep_value
    cfg = _adaptive_config(spec, eps, seed)
    report = run_estimator(spec.estimator, fixture.operator, cfg=cfg)
    rows = [_row(fixture, sweep_value, trial, report)]
    budget = report.matvecs_total
    if spec.paired and budget >= 3:
        paired = run_estimator(EstimatorKind.HUTCH_PP, fixture.operator, budget=budget - budget % 3, seed=seed)
        rows.append(_row(fixture, sweep_value, trial, paired))
    if spec.include_hutchinson:
        plain = run_estimator(EstimatorKind.HUTCHINSON, fixture.operator, budget=budget, seed=seed)
        rows.append(_row(fixture, sweep_value, trial, plain))
    return rows


def check_compatible(spec: ExperimentSpec, fixture: Fixture) -> None:
    if spec.estimator.needs_psd and not fixture.psd:
        raise ConfigError(f"{spec.estimator.value} needs a PSD fixture; {fixture.fixture_id} is not")
    if spec.estimator.adaptive and not fixture.truth:
        raise ConfigError(f"tolerance sweeps need a known non-zero trace for {fixture.fixture_id}")


async def _gather_in_order(jobs, workers: int) -> list:
    semaphore = asyncio.Semaphore(workers)

    async def bounded(job):
        async with semaphore:
            return await asyncio.to_thread(job)

    return await asyncio.gather(*(bounded(job) for job in jobs))


async def persist_run(session: AsyncSession, spec: ExperimentSpec, fixture_id: str,
                      rows: list[ResultRow]) -> ExperimentRun:
    run = ExperimentRun(
        fixture_id=fixture_id,
        estimator=spec.estimator.value,
        seed=spec.seed,
        spec=spec.model_dump(mode="json"),
        row_count=len(rows),
    )
    session.add(run)
    await session.flush()
    for row in rows:
        row.run_id = run.id
    session.add_all(rows)
    await session.commit()
    await session.refresh(run)
    return run


async def run_experiment(spec: ExperimentSpec, session: AsyncSession | None = None,
                         fixture: Fixture | None = None) -> ExperimentResult:
    """Run every sweep value ``repeats`` times, write the CSV and optionally store the run."""
    fixture = fixture or generate_fixture(spec.fixture)
    check_compatible(spec, fixture)
    jobs = [
        functools.partial(run_trial, spec, fixture, value, trial)
        for value in spec.sweep
        for trial in range(spec.repeats)
    ]
    batches = await _gather_in_order(jobs, spec.workers)
    rows = [row for batch in batches for row in batch]
    logger.info("experiment on %s produced %d rows", fixture.fixture_id, len(rows))

    if spec.output is not None:
        write_csv(spec.output, CSV_COLUMNS, ([getattr(row, name) for name in CSV_COLUMNS] for row in rows))
    result = ExperimentResult(rows=rows)
    if session is not None:
        run = await persist_run(session, spec, fixture.fixture_id, rows)
        result.run_id = run.id
    return result


def _failed(fixture: Fixture, eps: float, delta: float, block: int, seed: int) -> bool:
    cfg = AdaptiveConfig(eps=eps, delta=delta, block=block, seed=seed, mode="practical")
    report = run_estimator(EstimatorKind.A_HUTCH_PP, fixture.operator, cfg=cfg)
    return abs(report.estimate - fixture.truth) > eps


async def failure_table(spec: FailureTableSpec, fixture: Fixture | None = None) -> list[FailureCell]:
    """Empirical failure fraction of A-Hutch++ for every ``(eps, delta)`` cell.

    The CSV has one row per relative tolerance and one column per ``delta``.
    """
    fixture = fixture or generate_fixture(spec.fixture)
    if not fixture.truth:
        raise ConfigError(f"failure tables need a known non-zero trace for {fixture.fixture_id}")
    cells = []
    for rel_eps in spec.rel_eps:
        eps = rel_eps * abs(fixture.truth)
        if not math.isfinite(eps):
            raise ConfigError("eps must be finite")
        for delta in spec.deltas:
            jobs = [
                functools.partial(_failed, fixture, eps, delta, spec.block, spec.seed + trial)
                for trial in range(spec.repeats)
            ]
            outcomes = await _gather_in_order(jobs, spec.workers)
            cell = FailureCell(rel_eps, delta, sum(outcomes), spec.repeats)
            logger.info("eps=%g|tr|, delta=%g: failure rate %.5f", rel_eps, delta, cell.rate)
            cells.append(cell)

    if spec.output is not None:
        by_cell = {(cell.rel_eps, cell.delta): cell.rate for cell in cells}
        header = ["rel_eps"] + [f"delta={delta:g}" for delta in spec.deltas]
        write_csv(spec.output, header, (
            [rel_eps] + [by_cell[rel_eps, delta] for delta in spec.deltas] for rel_eps in spec.rel_eps
        ))
    return cells
