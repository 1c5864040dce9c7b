from fastapi import APIRouter, HTTPException, status
from sqlmodel import select

from tracekit.db import DbSessionDep
from tracekit.errors import ConfigError, NumericalError
from .models import ExperimentRun, ExperimentRunCreated, ExperimentRunDetail, ExperimentSpec, ResultRow, ResultRowBase
from .runner import run_experiment

router = APIRouter(prefix="/experiments")

# HTTP로 받는 실험은 작은 규모만 허용
MAX_HTTP_TRIALS = 2000


@router.post("/runs", status_code=status.HTTP_201_CREATED)
async def create_run(spec: ExperimentSpec, session: DbSessionDep) -> ExperimentRunCreated:
    if len(spec.sweep) * spec.repeats > MAX_HTTP_TRIALS:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=f"at most {MAX_HTTP_TRIALS} trials per request; use the CLI for larger sweeps",
        )
    # 서버에서는 CSV 파일을 쓰지 않고 DB에만 저장
    spec = spec.model_copy(update={"output": None})
    try:
        result = await run_experiment(spec, session=session)
    except (ConfigError, OSError) as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc)) from exc
    except NumericalError as exc:
        raise HTTPException(status_code=status.HTTP_409_CONFLICT, detail=str(exc)) from exc
    return ExperimentRunCreated(run_id=result.run_id, row_count=len(result.rows))


@router.get("/runs/{run_id}")
async def run_detail(run_id: int, session: DbSessionDep) -> ExperimentRunDetail:
    """저장된 실험과 결과 행들을 조회합니다."""
    run = await session.get(ExperimentRun, run_id)
    if run is None:
        raise HTTPException(
            status_code=status.HTTP_404_NOT_FOUND,
            detail="Experiment run not found",
        )
    stmt = select(ResultRow).where(ResultRow.run_id == run_id).order_by(ResultRow.id)
    result = await session.execute(stmt)
    rows = [ResultRowBase.model_validate(row, from_attributes=True) for row in result.scalars()]
    return ExperimentRunDetail(
        id=run.id,
        fixture_id=run.fixture_id,
        estimator=run.estimator,
        seed=run.seed,
        spec=run.spec,
        row_count=run.row_count,
        created_at=run.created_at,
        rows=rows,
    )
