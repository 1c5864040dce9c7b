import pytest
from fastapi import HTTPException, status
from fastapi.testclient import TestClient
from sqlalchemy.ext.asyncio import AsyncSession

from tracekit.apps.experiments.endpoints import MAX_HTTP_TRIALS, create_run, run_detail
from tracekit.apps.experiments.models import ExperimentSpec

BODY = {
    "fixture": {"kind": "synthetic_algebraic", "c": 3.0, "n": 100},
    "estimator": "hutch_pp",
    "sweep": [6, 9],
    "repeats": 2,
}


async def test_create_and_read_run(db_session: AsyncSession, tmp_path):
    """실험을 저장한 뒤 같은 세션으로 다시 조회"""
    spec = ExperimentSpec(**BODY, output=tmp_path / "ignored.csv")
    created = await create_run(spec, db_session)
    assert created.row_count == 4
    # 서버 경로에서는 CSV를 쓰지 않음
    assert not (tmp_path / "ignored.csv").exists()

    detail = await run_detail(created.run_id, db_session)
    assert detail.fixture_id == "synthetic_algebraic(c=3,n=100)"
    assert [row.sweep_value for row in detail.rows] == [6.0, 6.0, 9.0, 9.0]
    assert [row.trial for row in detail.rows] == [0, 1, 0, 1]


async def test_run_detail_not_found(db_session: AsyncSession):
    with pytest.raises(HTTPException) as exc_info:
        await run_detail(12345, db_session)
    assert exc_info.value.status_code == status.HTTP_404_NOT_FOUND


def test_run_by_http(client: TestClient):
    """Integration Test: POST 로 실행하고 GET 으로 결과 행을 확인"""
    response = client.post("/experiments/runs", json=BODY)
    assert response.status_code == status.HTTP_201_CREATED
    run_id = response.json()["run_id"]

    response = client.get(f"/experiments/runs/{run_id}")
    assert response.status_code == status.HTTP_200_OK
    data = response.json()
    assert data["row_count"] == 4
    assert data["spec"]["estimator"] == "hutch_pp"
    assert data["created_at"] is not None
    assert {row["matvecs_total"] for row in data["rows"]} == {6, 9}


def test_run_by_http_not_found(client: TestClient):
    response = client.get("/experiments/runs/999")
    assert response.status_code == status.HTTP_404_NOT_FOUND


def test_run_by_http_too_many_trials(client: TestClient):
    body = dict(BODY, sweep=[6], repeats=MAX_HTTP_TRIALS + 1)
    response = client.post("/experiments/runs", json=body)
    assert response.status_code == status.HTTP_400_BAD_REQUEST


def test_run_by_http_incompatible_fixture(client: TestClient, tmp_path):
    path = tmp_path / "k4.txt"
    path.write_text("1 2\n1 3\n1 4\n2 3\n2 4\n3 4\n", encoding="utf-8")
    body = dict(BODY, estimator="nystrom_pp", fixture={"kind": "graph_triangles", "path": str(path)})
    response = client.post("/experiments/runs", json=body)
    assert response.status_code == status.HTTP_400_BAD_REQUEST
    assert "PSD" in response.json()["detail"]
