"""Matrix Market 파일과 공백 구분 간선 목록 읽기."""
import logging
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from tracekit.errors import ConfigError
from tracekit.libs.linalg.linop import SparseOperator, sparse_operator

logger = logging.getLogger(__name__)


def read_matrix_market(path: str | Path) -> SparseOperator:
    """Matrix Market 형식의 대칭 행렬을 읽습니다."""
    matrix = scipy.io.mmread(str(path))
    return sparse_operator(scipy.sparse.csr_matrix(matrix))


def parse_edges(lines) -> np.ndarray:
    """``u v`` 쌍을 읽습니다. 빈 줄과 ``#`` 주석은 건너뛰고 남는 열은 무시합니다."""
    edges = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) < 2:
            raise ConfigError(f"line {lineno}: expected 'u v', got {line!r}")
        try:
            edges.append((int(fields[0]), int(fields[1])))
        except ValueError:
            raise ConfigError(f"line {lineno}: node ids must be integers, got {line!r}") from None
    if not edges:
        raise ConfigError("edge list contains no edges")
    return np.array(edges, dtype=np.int64)


def adjacency_from_edges(edges: np.ndarray) -> scipy.sparse.csr_matrix:
    """대각이 0 인 대칭 0/1 인접 행렬.

    가장 작은 id 가 1 이상이면 1부터, 아니면 0부터 센 것으로 봅니다. 중복 간선은 하나로
    합치고 자기 루프는 버립니다.

    >>> adjacency_from_edges(np.array([[1, 2], [2, 3], [3, 1], [2, 1]])).toarray().tolist()
    [[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]]
    """
    if edges.min() < 0:
        raise ConfigError("node ids must be non-negative")
    if edges.min() >= 1:
        edges = edges - 1
    n = int(edges.max()) + 1
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    keep = rows != cols
    dropped = int((~keep).sum()) // 2
    if dropped:
        logger.warning("dropping %d self-loops", dropped)
    adjacency = scipy.sparse.csr_matrix(
        (np.ones(int(keep.sum())), (rows[keep], cols[keep])), shape=(n, n)
    )
    adjacency.sum_duplicates()
    adjacency.data[:] = 1.0
    return adjacency


def read_edge_list(path: str | Path) -> SparseOperator:
    """간선 목록 파일을 희소 인접 연산자로 읽습니다.

    Args:
        path (str | Path): ``u v`` 가 한 줄에 하나씩 있는 파일.

    Returns:
        SparseOperator: 대칭 인접 행렬 연산자.
    """
    with open(path, encoding="utf-8") as handle:
        edges = parse_edges(handle)
    adjacency = adjacency_from_edges(edges)
    logger.info("read graph with %d nodes and %d edges from %s", adjacency.shape[0], adjacency.nnz // 2, path)
    return SparseOperator(adjacency)
