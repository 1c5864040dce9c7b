import math
from pathlib import Path
from typing import Union

import pydantic
from pydantic import AwareDatetime, BaseModel, model_validator
from sqlmodel import JSON, Field, Relationship, SQLModel, func
from sqlalchemy_utc import UtcDateTime

from tracekit.apps.estimation.models import EstimatorKind
from tracekit.apps.fixtures.models import FixtureSpec


class ExperimentSpec(BaseModel):
    """실험 하나(sweep x repeats)의 설정. JSON 설정 파일도 이 모델로 읽습니다."""

    fixture: FixtureSpec
    estimator: EstimatorKind
    # 적응형 추정기는 eps = |tr(A)| / 2^p 의 p 값, 나머지는 matvec 예산 m
    sweep: list[float]
    repeats: int = pydantic.Field(default=100, ge=1)
    seed: int = 0
    output: Path | None = None
    delta: float = pydantic.Field(default=0.05, gt=0, lt=1)
    block: int = pydantic.Field(default=1, ge=1)
    ell: float = pydantic.Field(default=0.1, gt=0, description="prototype_adaptive 전용")
    # A-Hutch++ 다음에 같은 matvec 수로 Hutch++를 돌리는 짝 비교 프로토콜
    paired: bool = True
    include_hutchinson: bool = False
    workers: int = pydantic.Field(default=4, ge=1)

    @model_validator(mode="after")
    def check_sweep(self):
        if not self.sweep:
            raise ValueError("sweep must not be empty")
        if not all(math.isfinite(value) for value in self.sweep):
            raise ValueError("sweep values must be finite")
        if not self.estimator.adaptive:
            if any(value < 1 or value != int(value) for value in self.sweep):
                raise ValueError("budget sweeps take positive integers")
        return self


class FailureTableSpec(BaseModel):
    fixture: FixtureSpec
    # 상대 허용 오차: eps = rel_eps * |tr(A)|
    rel_eps: list[float]
    deltas: list[float]
    repeats: int = pydantic.Field(default=1000, ge=1)
    seed: int = 0
    block: int = pydantic.Field(default=1, ge=1)
    output: Path | None = None
    workers: int = pydantic.Field(default=4, ge=1)

    @model_validator(mode="after")
    def check_grid(self):
        if not self.rel_eps or not self.deltas:
            raise ValueError("failure tables need at least one eps and one delta")
        if not all(math.isfinite(eps) and eps > 0 for eps in self.rel_eps):
            raise ValueError("eps must be positive and finite")
        if not all(0 < delta < 1 for delta in self.deltas):
            raise ValueError("delta must lie in (0, 1)")
        return self


class ResultRowBase(SQLModel):
    """CSV 한 줄. 필드 순서가 곧 CSV 열 순서입니다."""

    fixture_id: str = Field(max_length=256)
    estimator: str = Field(max_length=32)
    sweep_value: float = Field(description="p 또는 m")
    trial: int
    estimate: float
    truth: Union[float, None] = None
    rel_error: Union[float, None] = None
    matvecs_total: int
    matvecs_lowrank: int
    matvecs_hutchinson: int
    rank_used: int
    seed: int


class ExperimentRun(SQLModel, table=True):
    __tablename__ = "experiment_runs"

    id: int = Field(default=None, primary_key=True)
    fixture_id: str = Field(max_length=256)
    estimator: str = Field(max_length=32)
    seed: int
    spec: dict = Field(sa_type=JSON, default_factory=dict)
    row_count: int = 0
    created_at: AwareDatetime = Field(
        default=None,
        nullable=False,
        sa_type=UtcDateTime,
        sa_column_kwargs={
            "server_default": func.now(),
        },
    )

    rows: list["ResultRow"] = Relationship(back_populates="run")


class ResultRow(ResultRowBase, table=True):
    __tablename__ = "result_rows"

    id: int = Field(default=None, primary_key=True)
    # 저장 전의 행은 아직 실행(run)에 묶이지 않음
    run_id: Union[int, None] = Field(default=None, foreign_key="experiment_runs.id", index=True)
    run: Union["ExperimentRun", None] = Relationship(back_populates="rows")
    created_at: AwareDatetime = Field(
        default=None,
        nullable=False,
        sa_type=UtcDateTime,
        sa_column_kwargs={
            "server_default": func.now(),
        },
    )


class ExperimentRunDetail(SQLModel):
    id: int
    fixture_id: str
    estimator: str
    seed: int
    spec: dict
    row_count: int
    created_at: AwareDatetime
    rows: list[ResultRowBase]


class ExperimentRunCreated(BaseModel):
    run_id: int
    row_count: int
