"""이동된 matvec 목적함수를 따라 키우는 점진적 무작위 range finder.

기저 ``Q`` 는 블록 단위로 자랍니다. 블록 하나에 ``Y = A Omega`` 로 ``b`` 번,
``W = A Qhat`` 로 최대 ``b`` 번의 곱이 듭니다. 상태는 ``W`` 블록에서 ``tr(Q^T A Q)`` 와
``||AQ||_F^2``, ``||Q^T A Q||_F^2`` 를 누적하므로 목적함수

    mtilde(r) = 2r + C (||Q^T A Q||_F^2 - 2 ||A Q||_F^2)

는 추가 곱 없이 갱신됩니다. ``mtilde`` 는 ``m(r) = 2r + C ||A_rest||_F^2`` 와 상수
``C ||A||_F^2`` 만큼 차이 나므로 최소점이 같습니다.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from tracekit.errors import DegenerateBlockError, DimensionError
from tracekit.libs.linalg.linop import MatrixFreeOperator

logger = logging.getLogger(__name__)

NULL_COLUMN_RTOL = 1e-12
REORTHOGONALIZE_RATIO = 1.0 / math.sqrt(2.0)


@dataclass
class RangeState:
    Q: np.ndarray
    constant: float
    trest1: float = 0.0
    frob_AQ2: float = 0.0
    frob_QAQ2: float = 0.0
    mtilde_history: list[tuple[int, float]] = field(default_factory=list)
    matvecs_used: int = 0

    @classmethod
    def empty(cls, n: int, constant: float) -> "RangeState":
        return cls(Q=np.zeros((n, 0)), constant=constant)

    @property
    def rank(self) -> int:
        return self.Q.shape[1]

    def mtilde(self) -> float:
        return 2 * self.rank + self.constant * (self.frob_QAQ2 - 2.0 * self.frob_AQ2)

    def argmin_rank(self) -> int:
        """기록된 ``mtilde`` 가 가장 작은 rank (동률이면 먼저 나온 것)."""
        if not self.mtilde_history:
            return 0
        return min(self.mtilde_history, key=lambda entry: entry[1])[0]


def _orthonormalize_against(Q: np.ndarray, y: np.ndarray) -> np.ndarray | None:
    """``y`` 에서 ``range(Q)`` 성분을 빼고 (필요하면 두 번) 정규화합니다. 수치적으로 0 인 열은 ``None``."""
    y_norm = np.linalg.norm(y)
    if y_norm == 0.0:
        return None
    z = y - Q @ (Q.T @ y)
    z_norm = np.linalg.norm(z)
    if z_norm < REORTHOGONALIZE_RATIO * y_norm:
        z = z - Q @ (Q.T @ z)
        z_norm = np.linalg.norm(z)
    if z_norm <= NULL_COLUMN_RTOL * y_norm:
        return None
    return z / z_norm


def advance(state: RangeState, A: MatrixFreeOperator, probes: np.ndarray) -> RangeState:
    """탐침 블록 하나로 기저를 넓히고 누적량을 제자리에서 갱신합니다.

    Args:
        state (RangeState): 갱신할 상태.
        A (MatrixFreeOperator): 대칭 연산자.
        probes (np.ndarray): ``n x b`` 탐침 블록.

    Returns:
        RangeState: 같은 ``state`` 객체.

    Raises:
        DegenerateBlockError: 블록 전체가 이미 기저 안에 있을 때.
    """
    if probes.ndim != 2 or probes.shape[0] != state.Q.shape[0]:
        raise DimensionError(f"probe block of shape {probes.shape} does not fit basis {state.Q.shape}")
    Y = A.apply(probes)
    state.matvecs_used += probes.shape[1]
    basis = state.Q
    accepted = []
    for j in range(Y.shape[1]):
        q = _orthonormalize_against(basis, Y[:, j])
        if q is None:
            logger.debug("discarding numerically null probe column at rank %d", basis.shape[1])
            continue
        basis = np.column_stack([basis, q])
        accepted.append(q)
    if not accepted:
        raise DegenerateBlockError(f"probe block fell inside the rank-{state.rank} basis")

    Q_new = np.column_stack(accepted)
    W = A.apply(Q_new)
    state.matvecs_used += Q_new.shape[1]
    cross = state.Q.T @ W
    diagonal_block = Q_new.T @ W
    state.trest1 += float(np.trace(diagonal_block))
    state.frob_AQ2 += float(np.sum(W * W))
    state.frob_QAQ2 += 2.0 * float(np.sum(cross * cross)) + float(np.sum(diagonal_block * diagonal_block))
    state.Q = basis
    state.mtilde_history.append((state.rank, state.mtilde()))
    logger.debug("rank %d: trest1=%.6g mtilde=%.6g", state.rank, state.trest1, state.mtilde_history[-1][1])
    return state


def should_stop(state: RangeState, b: int) -> bool:
    """``mtilde`` 기록에서 최소점을 지났는지 판단합니다.

    ``b = 1`` 이면 두 번 연속 증가해야 하고, 더 큰 블록이면 한 번의 증가로 충분합니다.
    차이가 0 이면 증가로 치지 않습니다.

    >>> s = RangeState.empty(4, 1.0)
    >>> s.mtilde_history = [(1, 5.0), (2, 4.0), (3, 6.0)]
    >>> should_stop(s, 1)
    False
    >>> s.mtilde_history.append((4, 9.0))
    >>> should_stop(s, 1)
    True
    """
    values = [value for _, value in state.mtilde_history]
    if b == 1:
        return len(values) >= 3 and values[-1] > values[-2] > values[-3]
    return len(values) >= 2 and values[-1] > values[-2]


def complete_basis(state: RangeState, A: MatrixFreeOperator) -> RangeState:
    """``Q`` 를 전체 공간의 정규직교 기저로 채우고 정확한 대각합을 더합니다.

    rank 상한에 닿았을 때 씁니다. 이때 사영은 항등이고 ``trest1`` 은 ``tr(A)`` 와 같습니다.
    """
    n, r = state.Q.shape
    if r == n:
        return state
    full, _ = np.linalg.qr(np.column_stack([state.Q, np.eye(n)]))
    complement = full[:, r:n]
    complement -= state.Q @ (state.Q.T @ complement)
    complement, _ = np.linalg.qr(complement)
    W = A.apply(complement)
    state.matvecs_used += complement.shape[1]
    state.trest1 += float(np.sum(complement * W))
    state.Q = np.column_stack([state.Q, complement])
    logger.info("rank cap reached; completed the basis with %d exact directions", n - r)
    return state


def dense_mtilde(A: np.ndarray, Q: np.ndarray, constant: float) -> tuple[float, float]:
    """밀집 대칭 ``A`` 와 기저 ``Q`` 로 처음부터 계산한 ``(mtilde(r), m(r))``."""
    AQ = A @ Q
    QAQ = Q.T @ AQ
    rest = A - Q @ (Q.T @ A)
    rest = rest - (rest @ Q) @ Q.T
    r = Q.shape[1]
    mtilde = 2 * r + constant * (np.sum(QAQ * QAQ) - 2.0 * np.sum(AQ * AQ))
    m = 2 * r + constant * np.sum(rest * rest)
    return float(mtilde), float(m)
