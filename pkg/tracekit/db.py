import os
from typing import Annotated

from fastapi import Depends
from sqlalchemy.ext.asyncio import (
    AsyncEngine,
    AsyncSession,
    async_sessionmaker,
    create_async_engine,
)

DEFAULT_DSN = "sqlite+aiosqlite:///./tracekit.db"
# 환경 변수 TRACEKIT_DSN 으로 결과 저장소를 바꿀 수 있음
DSN = os.environ.get("TRACEKIT_DSN", DEFAULT_DSN)


def create_engine(dsn: str = DSN, echo: bool = False) -> AsyncEngine:
    # echo=True 이면 실행되는 SQL을 모두 출력 (디버깅용)
    return create_async_engine(dsn, echo=echo)


def create_session(async_engine: AsyncEngine | None = None) -> async_sessionmaker[AsyncSession]:
    if async_engine is None:
        async_engine = create_engine()

    return async_sessionmaker(
        async_engine,
        expire_on_commit=False,  # commit 후에도 객체 데이터를 메모리에 유지
        autoflush=False,
        class_=AsyncSession,
    )


# API 요청마다 세션을 빌려주는 의존성
async def use_session():
    async with async_session_factory() as session:
        yield session


engine = create_engine(DSN)
async_session_factory = create_session(engine)

DbSessionDep = Annotated[AsyncSession, Depends(use_session)]
