import csv

import pytest
from sqlalchemy.ext.asyncio import AsyncSession
from sqlmodel import func, select

from tracekit.apps.experiments.models import ExperimentRun, ExperimentSpec, FailureTableSpec, ResultRow
from tracekit.apps.experiments.runner import CSV_COLUMNS, failure_table, run_experiment, run_trial
from tracekit.apps.fixtures.builders import generate_fixture
from tracekit.apps.fixtures.models import FixtureSpec
from tracekit.errors import ConfigError

CUBIC = {"kind": "synthetic_algebraic", "c": 3.0, "n": 200}


def _spec(tmp_path, **overrides):
    fields = {"fixture": CUBIC, "estimator": "a_hutch_pp", "sweep": [2], "repeats": 10, "seed": 0,
              "output": tmp_path / "out.csv"}
    fields.update(overrides)
    return ExperimentSpec(**fields)


def test_csv_columns_order():
    assert CSV_COLUMNS == [
        "fixture_id", "estimator", "sweep_value", "trial", "estimate", "truth", "rel_error",
        "matvecs_total", "matvecs_lowrank", "matvecs_hutchinson", "rank_used", "seed",
    ]


async def test_paired_sweep_writes_schema(tmp_path):
    """A-Hutch++ 한 줄 + 같은 matvec 수의 Hutch++ 한 줄 = trial 당 2줄"""
    spec = _spec(tmp_path)
    result = await run_experiment(spec)

    assert len(result.rows) == 20
    with open(spec.output, encoding="utf-8", newline="") as handle:
        records = list(csv.DictReader(handle))
    assert list(records[0]) == CSV_COLUMNS
    assert len(records) == 20
    for adaptive, paired in zip(records[::2], records[1::2]):
        assert adaptive["estimator"] == "a_hutch_pp"
        assert paired["estimator"] == "hutch_pp"
        assert adaptive["trial"] == paired["trial"]
        assert adaptive["seed"] == paired["seed"] == str(int(adaptive["trial"]))
        total = int(adaptive["matvecs_total"])
        assert int(paired["matvecs_total"]) == total - total % 3
        assert int(adaptive["matvecs_lowrank"]) + int(adaptive["matvecs_hutchinson"]) == total
        assert float(adaptive["rel_error"]) >= 0.0
        assert adaptive["fixture_id"] == "synthetic_algebraic(c=3,n=200)"


async def test_output_is_independent_of_worker_count(tmp_path):
    first = _spec(tmp_path, output=tmp_path / "one.csv", workers=1)
    second = _spec(tmp_path, output=tmp_path / "many.csv", workers=8)
    await run_experiment(first)
    await run_experiment(second)
    assert first.output.read_bytes() == second.output.read_bytes()


async def test_budget_sweep_and_plain_hutchinson(tmp_path):
    spec = _spec(tmp_path, estimator="hutch_pp", sweep=[12, 30], repeats=3, output=None)
    result = await run_experiment(spec)
    assert [row.sweep_value for row in result.rows] == [12.0] * 3 + [30.0] * 3
    assert {row.matvecs_total for row in result.rows} == {12, 30}


def test_run_trial_with_hutchinson_comparison():
    spec = ExperimentSpec(fixture=CUBIC, estimator="a_hutch_pp", sweep=[3], repeats=1, paired=False,
                          include_hutchinson=True)
    fixture = generate_fixture(spec.fixture)
    rows = run_trial(spec, fixture, 3.0, 4)
    assert [row.estimator for row in rows] == ["a_hutch_pp", "hutchinson"]
    assert rows[0].matvecs_total == rows[1].matvecs_total
    assert rows[0].seed == 4


async def test_run_is_persisted(tmp_path, db_session: AsyncSession):
    spec = _spec(tmp_path, repeats=2, output=None)
    result = await run_experiment(spec, session=db_session)

    assert result.run_id is not None
    run = await db_session.get(ExperimentRun, result.run_id)
    assert run.row_count == 4
    assert run.spec["estimator"] == "a_hutch_pp"
    count = await db_session.scalar(select(func.count()).select_from(ResultRow).where(ResultRow.run_id == run.id))
    assert count == 4


@pytest.mark.parametrize(
    "overrides",
    [
        {"estimator": "nystrom_pp", "fixture": {"kind": "graph_triangles", "path": "k4.txt"}, "sweep": [6]},
        {"fixture": {"kind": "logdet_matrix", "path": "indef.mtx"}},
    ],
)
async def test_incompatible_fixture(tmp_path, overrides):
    (tmp_path / "k4.txt").write_text("1 2\n1 3\n1 4\n2 3\n2 4\n3 4\n", encoding="utf-8")
    (tmp_path / "indef.mtx").write_text(
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 -1.0\n2 2 1.0\n", encoding="utf-8"
    )
    overrides = dict(overrides)
    fixture = dict(overrides.pop("fixture"))
    fixture["path"] = tmp_path / fixture["path"]
    with pytest.raises(ConfigError):
        await run_experiment(_spec(tmp_path, fixture=fixture, **overrides))


async def test_failure_table(tmp_path):
    spec = FailureTableSpec(
        fixture={"kind": "synthetic_algebraic", "c": 2.0, "n": 200},
        rel_eps=[0.5, 0.1],
        deltas=[0.1, 0.5],
        repeats=5,
        output=tmp_path / "table.csv",
    )
    cells = await failure_table(spec)

    assert [(cell.rel_eps, cell.delta) for cell in cells] == [(0.5, 0.1), (0.5, 0.5), (0.1, 0.1), (0.1, 0.5)]
    assert all(0.0 <= cell.rate <= 1.0 and cell.repeats == 5 for cell in cells)
    lines = spec.output.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "rel_eps,delta=0.1,delta=0.5"
    assert [line.split(",")[0] for line in lines[1:]] == ["0.5", "0.10000000000000001"]


async def test_failure_table_needs_truth(tmp_path):
    path = tmp_path / "indef.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 -1.0\n2 2 1.0\n", encoding="utf-8")
    spec = FailureTableSpec(fixture=FixtureSpec(kind="logdet_matrix", path=path), rel_eps=[0.1], deltas=[0.1])
    with pytest.raises(ConfigError):
        await failure_table(spec)


@pytest.mark.parametrize(
    "overrides",
    [
        {"sweep": []},
        {"sweep": [float("inf")]},
        {"estimator": "hutch_pp", "sweep": [10.5]},
        {"estimator": "hutch_pp", "sweep": [0]},
        {"repeats": 0},
    ],
)
def test_experiment_spec_rejects(tmp_path, overrides):
    with pytest.raises(ValueError):
        _spec(tmp_path, **overrides)
