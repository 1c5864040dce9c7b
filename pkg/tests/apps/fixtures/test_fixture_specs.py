import pytest
from pydantic import ValidationError

from tracekit.apps.fixtures.models import FixtureKind, FixtureSpec


@pytest.mark.parametrize(
    "fields",
    [
        {"kind": "graph_triangles"},
        {"kind": "matrix_file"},
        {"kind": "low_rank", "n": 10, "rank": 11},
        {"kind": "synthetic_algebraic", "n": 4},
        {"kind": "synthetic_algebraic", "c": 0.0},
        {"kind": "logdet_sprandn", "density": 1.5},
        {"kind": "no_such_fixture"},
    ],
)
def test_fixture_spec_rejects(fields):
    with pytest.raises(ValidationError):
        FixtureSpec(**fields)


def test_default_lanczos_iterations():
    assert FixtureSpec(kind="estrada", path="g.txt").iters == 30
    assert FixtureSpec(kind="logdet_sprandn").iters == 25
    assert FixtureSpec(kind="logdet_matrix", path="m.mtx").iters == 35
    assert FixtureSpec(kind="logdet_matrix", path="m.mtx", iters=10).iters == 10
    assert FixtureSpec(kind="inverse_tridiag").iters is None


@pytest.mark.parametrize(
    "fields, expected",
    [
        ({"kind": "synthetic_algebraic", "c": 0.5}, "synthetic_algebraic(c=0.5,n=1000)"),
        ({"kind": "synthetic_exponential", "s": 10}, "synthetic_exponential(s=10,n=1000)"),
        ({"kind": "inverse_poisson", "mesh_k": 50}, "inverse_poisson(mesh_k=50)"),
        ({"kind": "estrada", "path": "data/roads.txt"}, "estrada(roads.txt,iters=30)"),
        ({"kind": "matrix_file", "path": "/tmp/a.mtx"}, "matrix_file(a.mtx)"),
    ],
)
def test_fixture_id(fields, expected):
    assert FixtureSpec(**fields).fixture_id == expected


def test_file_backed_kinds():
    assert {kind for kind in FixtureKind if kind.needs_path} == {
        FixtureKind.GRAPH_TRIANGLES,
        FixtureKind.ESTRADA,
        FixtureKind.LOGDET_MATRIX,
        FixtureKind.MATRIX_FILE,
    }
