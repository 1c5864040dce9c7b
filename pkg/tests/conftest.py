import numpy as np
import pytest
from fastapi import FastAPI
from fastapi.testclient import TestClient
from sqlalchemy.ext.asyncio import AsyncEngine
from sqlmodel import SQLModel

# 모델들이 metadata에 등록되도록 반드시 import
from tracekit.apps.experiments import models  # noqa
from tracekit.app import include_routers
from tracekit.db import create_engine, create_session, use_session
from tracekit.libs.linalg.linop import SpectralOperator, dense_operator


@pytest.fixture(scope="function")
async def db_engine():
    """테스트용 인메모리 비동기 엔진"""
    engine = create_engine("sqlite+aiosqlite:///:memory:")

    async with engine.begin() as conn:
        await conn.run_sync(SQLModel.metadata.create_all)

    yield engine

    async with engine.begin() as conn:
        await conn.run_sync(SQLModel.metadata.drop_all)

    await engine.dispose()


@pytest.fixture(scope="function")
async def db_session(db_engine: AsyncEngine):
    """테스트마다 독립된 세션"""
    session_factory = create_session(db_engine)
    async with session_factory() as session:
        yield session
        await session.rollback()


@pytest.fixture()
def fastapi_app(db_engine: AsyncEngine):
    """DB 세션 의존성을 테스트 엔진으로 바꾼 앱"""
    app = FastAPI()
    include_routers(app)

    async def override_use_session():
        session_factory = create_session(db_engine)
        async with session_factory() as session:
            yield session

    app.dependency_overrides[use_session] = override_use_session
    return app


@pytest.fixture()
def client(fastapi_app: FastAPI):
    with TestClient(fastapi_app) as client:
        yield client


def random_orthogonal(n: int, seed: int) -> np.ndarray:
    Q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, n)))
    return Q


def low_rank_psd(n: int, eigenvalues, seed: int = 7) -> SpectralOperator:
    """상위 고유값만 0이 아닌 PSD 연산자"""
    spectrum = np.zeros(n)
    spectrum[: len(eigenvalues)] = eigenvalues
    return SpectralOperator(random_orthogonal(n, seed), spectrum)


@pytest.fixture()
def rank5_psd() -> SpectralOperator:
    """n=200, rank 5 PSD 행렬 (정확 복원 테스트용)"""
    return low_rank_psd(200, [5.0, 4.0, 3.0, 2.0, 1.0])


@pytest.fixture()
def spd50():
    """n=50 의 잘 조건화된 SPD 행렬 (고유값 1..4)"""
    Q = random_orthogonal(50, 3)
    eigenvalues = np.linspace(1.0, 4.0, 50)
    return dense_operator((Q * eigenvalues) @ Q.T), Q, eigenvalues


@pytest.fixture()
def make_low_rank_psd():
    """low_rank_psd(n, eigenvalues, seed) 생성 함수를 넘겨줌"""
    return low_rank_psd


@pytest.fixture()
def make_orthogonal():
    return random_orthogonal
