import enum
import math
from typing import Literal

from pydantic import BaseModel, Field, model_validator

from tracekit.apps.fixtures.models import FixtureSpec
from tracekit.libs.stats.sketch import ProbeKind


class EstimatorKind(str, enum.Enum):
    HUTCHINSON = "hutchinson"
    HUTCH_PP = "hutch_pp"
    PROTOTYPE_ADAPTIVE = "prototype_adaptive"
    A_HUTCH_PP = "a_hutch_pp"
    SINGLE_PASS_HUTCH_PP = "single_pass_hutch_pp"
    NYSTROM_PP = "nystrom_pp"

    @property
    def adaptive(self) -> bool:
        return self in (EstimatorKind.PROTOTYPE_ADAPTIVE, EstimatorKind.A_HUTCH_PP)

    @property
    def needs_psd(self) -> bool:
        return self is EstimatorKind.NYSTROM_PP


class TraceReport(BaseModel):
    """한 번의 추정 결과와 단계별 matvec 분배"""

    estimator: EstimatorKind
    estimate: float
    matvecs_total: int
    matvecs_lowrank: int
    matvecs_hutchinson: int
    rank_used: int = 0
    frob_overestimate: float | None = None
    # 실제로 수행한 기저 행렬 B 의 곱 수 (다항식/Lanczos 연산자)
    base_matvecs: int
    seed: int
    # 3의 배수(Hutch++) 또는 짝수(Nystrom++)로 내림된 실제 예산
    budget: int | None = None

    @model_validator(mode="after")
    def check_split(self):
        if self.matvecs_total != self.matvecs_lowrank + self.matvecs_hutchinson:
            raise ValueError(
                f"matvec split {self.matvecs_lowrank} + {self.matvecs_hutchinson} "
                f"does not add up to {self.matvecs_total}"
            )
        return self


class AdaptiveConfig(BaseModel):
    """Algorithm 설정. practical 모드에서는 ell을 0으로 강제합니다."""

    eps: float = Field(gt=0, description="절대 허용 오차")
    delta: float = Field(gt=0, lt=1, description="실패 확률")
    ell: float = Field(default=0.0, ge=0)
    block: int = Field(default=1, ge=1)
    seed: int = 0
    mode: Literal["guaranteed", "practical"] = "practical"
    # guaranteed 모드에서 Frobenius 과대추정에 쓰는 (k, alpha) 재정의
    k: int | None = Field(default=None, ge=1)
    alpha: float | None = Field(default=None, gt=0, lt=1)

    @model_validator(mode="after")
    def check_mode(self):
        if not math.isfinite(self.eps):
            raise ValueError("eps must be finite")
        if self.mode == "practical":
            self.ell = 0.0
        elif self.ell <= 0:
            raise ValueError("guaranteed mode requires ell > 0")
        return self


class EstimateRequest(BaseModel):
    """`POST /estimation/estimates` 요청 본문"""

    fixture: FixtureSpec
    estimator: EstimatorKind
    budget: int | None = Field(default=None, ge=1)
    eps: float | None = Field(default=None, gt=0)
    rel_eps: float | None = Field(default=None, gt=0, description="eps = rel_eps * |tr(A)|")
    delta: float = Field(default=0.05, gt=0, lt=1)
    ell: float = Field(default=0.1, ge=0)
    block: int = Field(default=1, ge=1)
    seed: int = 0
    probes: ProbeKind = ProbeKind.GAUSSIAN
    # Frobenius 탐침의 곱을 Hutchinson 합에 재사용 (보장 1 - 3 delta)
    reuse: bool = False

    @model_validator(mode="after")
    def check_budget_or_tolerance(self):
        if self.estimator.adaptive:
            if self.eps is None and self.rel_eps is None:
                raise ValueError(f"{self.estimator.value} needs eps or rel_eps")
        elif self.budget is None:
            raise ValueError(f"{self.estimator.value} needs a matvec budget")
        if self.probes is ProbeKind.RADEMACHER and self.estimator not in (
            EstimatorKind.HUTCHINSON, EstimatorKind.HUTCH_PP,
        ):
            raise ValueError("Rademacher probes are only offered for hutchinson and hutch_pp")
        if self.reuse and self.estimator is not EstimatorKind.PROTOTYPE_ADAPTIVE:
            raise ValueError("reuse applies to prototype_adaptive only")
        return self
