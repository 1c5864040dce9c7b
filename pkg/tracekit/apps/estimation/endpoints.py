import asyncio

from fastapi import APIRouter, HTTPException, status
from pydantic import BaseModel, ValidationError

from tracekit.apps.fixtures.builders import generate_fixture
from tracekit.apps.fixtures.models import FixtureKind
from tracekit.errors import ConfigError, NumericalError
from .estimators import run_estimator
from .models import AdaptiveConfig, EstimateRequest, EstimatorKind, TraceReport

# /estimation 경로로 시작하는 API 그룹
router = APIRouter(prefix="/estimation")


class Catalog(BaseModel):
    fixtures: list[FixtureKind]
    estimators: list[EstimatorKind]


class EstimateResponse(BaseModel):
    fixture_id: str
    truth: float | None
    report: TraceReport


def catalog() -> Catalog:
    return Catalog(fixtures=list(FixtureKind), estimators=list(EstimatorKind))


def estimate(request: EstimateRequest) -> EstimateResponse:
    """요청 하나를 동기적으로 처리합니다. (CLI `estimate`와 같은 경로)"""
    fixture = generate_fixture(request.fixture)
    if request.estimator.needs_psd and not fixture.psd:
        raise ConfigError(f"{request.estimator.value} needs a PSD fixture; {fixture.fixture_id} is not")
    cfg = None
    if request.estimator.adaptive:
        eps = request.eps
        if eps is None:
            if not fixture.truth:
                raise ConfigError("rel_eps needs a fixture with a known non-zero trace")
            eps = request.rel_eps * abs(fixture.truth)
        mode = "guaranteed" if request.estimator is EstimatorKind.PROTOTYPE_ADAPTIVE else "practical"
        cfg = AdaptiveConfig(eps=eps, delta=request.delta, ell=request.ell, block=request.block,
                             seed=request.seed, mode=mode)
    report = run_estimator(request.estimator, fixture.operator, budget=request.budget, cfg=cfg,
                           seed=request.seed, probes=request.probes, reuse=request.reuse)
    return EstimateResponse(fixture_id=fixture.fixture_id, truth=fixture.truth, report=report)


@router.get("/fixtures")
async def fixture_catalog() -> Catalog:
    return catalog()


@router.post("/estimates")
async def create_estimate(request: EstimateRequest) -> EstimateResponse:
    # 계산은 CPU 작업이므로 이벤트 루프를 막지 않도록 스레드에서 실행
    try:
        return await asyncio.to_thread(estimate, request)
    except (ConfigError, ValidationError, OSError) as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc)) from exc
    except NumericalError as exc:
        raise HTTPException(status_code=status.HTTP_409_CONFLICT, detail=str(exc)) from exc
