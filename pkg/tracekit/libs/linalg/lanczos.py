"""완전 재직교화 Lanczos 삼중대각화와 ``f(B) x`` 작용."""
import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg

from tracekit.errors import ConfigError, DimensionError, LanczosDomainError
from tracekit.libs.linalg.linop import MatrixFreeOperator

logger = logging.getLogger(__name__)

BREAKDOWN_RTOL = 1e-14

FunctionName = Literal["exp", "log", "shifted_log"]


@dataclass(frozen=True)
class ScalarFunction:
    """Ritz 값에 적용하는 스펙트럼 함수.

    >>> ScalarFunction("shifted_log", shift=1.0)(np.array([0.0])).tolist()
    [0.0]
    """

    name: FunctionName
    shift: float = 0.0

    def __post_init__(self):
        if self.name not in ("exp", "log", "shifted_log"):
            raise ConfigError(f"unknown matrix function {self.name!r}")

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        if self.name == "exp":
            return np.exp(theta)
        argument = theta + self.shift if self.name == "shifted_log" else theta
        smallest = float(np.min(argument))
        if smallest <= 0.0:
            raise LanczosDomainError(f"logarithm of non-positive Ritz value {smallest:.6g}", value=smallest)
        return np.log(argument)


@dataclass(frozen=True)
class KrylovDecomposition:
    """``B V = V T + next_beta v_{k+1} e_k^T`` 를 만족하는 Lanczos 결과"""

    V: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    breakdown_at: int | None = None
    next_beta: float = 0.0

    @property
    def steps(self) -> int:
        return self.alpha.size

    def tridiagonal(self) -> np.ndarray:
        return np.diag(self.alpha) + np.diag(self.beta, 1) + np.diag(self.beta, -1)


def lanczos(B: MatrixFreeOperator, x: np.ndarray, iters: int) -> KrylovDecomposition:
    """``x`` 에서 시작해 Lanczos 를 최대 ``iters`` 단계 돌립니다 (단계마다 ``B`` 와의 곱 한 번).

    새 방향은 기저 전체에 대해 두 번 직교화합니다. 다음 부대각 원소가 지금까지의 최대
    ``||B v_j||`` 의 ``1e-14`` 배 이하로 떨어지면 Krylov 공간이 불변이므로 그 자리에서 멈추며,
    이때 결과는 정확합니다.
    """
    if iters < 1:
        raise ConfigError(f"Lanczos needs at least one iteration, got {iters}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (B.dim,):
        raise DimensionError(f"expected a vector of length {B.dim}, got shape {x.shape}")
    x_norm = np.linalg.norm(x)
    if x_norm == 0.0:
        raise ConfigError("Lanczos start vector must be non-zero")

    V = np.empty((B.dim, min(iters, B.dim)))
    V[:, 0] = x / x_norm
    alpha, beta = [], []
    scale = 0.0
    breakdown_at = None
    next_beta = 0.0
    for j in range(V.shape[1]):
        v = V[:, j]
        w = B.apply(v)
        scale = max(scale, float(np.linalg.norm(w)))
        a = float(v @ w)
        alpha.append(a)
        w = w - a * v
        if j:
            w -= beta[-1] * V[:, j - 1]
        basis = V[:, : j + 1]
        for _ in range(2):
            w -= basis @ (basis.T @ w)
        b = float(np.linalg.norm(w))
        if j == V.shape[1] - 1:
            next_beta = b
            break
        if b <= BREAKDOWN_RTOL * scale:
            breakdown_at = j + 1
            logger.debug("Lanczos breakdown after %d steps", breakdown_at)
            break
        beta.append(b)
        V[:, j + 1] = w / b
    steps = len(alpha)
    return KrylovDecomposition(
        V=V[:, :steps],
        alpha=np.array(alpha),
        beta=np.array(beta),
        breakdown_at=breakdown_at,
        next_beta=next_beta,
    )


def _krylov_action(B: MatrixFreeOperator, f: ScalarFunction, x: np.ndarray,
                   iters: int) -> tuple[np.ndarray, int]:
    """``||x|| V f(T) e_1`` 와 실제로 돈 Lanczos 단계 수."""
    x = np.asarray(x, dtype=np.float64)
    if not np.any(x):
        if x.shape != (B.dim,):
            raise DimensionError(f"expected a vector of length {B.dim}, got shape {x.shape}")
        return np.zeros(B.dim), 0
    decomposition = lanczos(B, x, iters)
    if decomposition.steps == 1:
        coefficients = f(decomposition.alpha)
    else:
        theta, S = scipy.linalg.eigh_tridiagonal(decomposition.alpha, decomposition.beta)
        coefficients = S @ (f(theta) * S[0])
    return np.linalg.norm(x) * (decomposition.V @ coefficients), decomposition.steps


def lanczos_fx(B: MatrixFreeOperator, f: ScalarFunction, x: np.ndarray, iters: int) -> np.ndarray:
    """``f(B) x`` 를 ``||x|| V f(T) e_1`` 로 근사합니다.

    Args:
        B (MatrixFreeOperator): 대칭 연산자.
        f (ScalarFunction): exp, log, shifted_log 중 하나.
        x (np.ndarray): 길이 ``B.dim`` 의 시작 벡터. 0 벡터면 0 을 돌려줍니다.
        iters (int): 최대 반복 횟수 (``B.dim`` 에서 잘림).

    Returns:
        np.ndarray: ``f(B) x`` 의 근사.
    """
    return _krylov_action(B, f, x, iters)[0]


class MatrixFunctionOperator(MatrixFreeOperator):
    """``f(B)`` 를 열마다 최대 ``iters`` 번의 Lanczos 단계로 적용합니다.

    ``base_cost`` 는 열당 상한이고, 기반 곱 집계는 실제로 돈 단계 수를 따릅니다.
    """

    def __init__(self, base: MatrixFreeOperator, f: ScalarFunction, iters: int):
        if iters < 1:
            raise ConfigError(f"Lanczos needs at least one iteration, got {iters}")
        super().__init__(base.dim, base_cost=iters * base.base_cost)
        self.base = base
        self.f = f
        self.iters = iters

    def _apply_counted(self, X: np.ndarray) -> tuple[np.ndarray, int]:
        columns, steps = [], 0
        for j in range(X.shape[1]):
            y, used = _krylov_action(self.base, self.f, X[:, j], self.iters)
            columns.append(y)
            steps += used
        return np.column_stack(columns), steps * self.base.base_cost

    def _apply(self, X: np.ndarray) -> np.ndarray:
        return self._apply_counted(X)[0]


def matrix_function_operator(base: MatrixFreeOperator, name: FunctionName, iters: int,
                             shift: float = 0.0) -> MatrixFunctionOperator:
    return MatrixFunctionOperator(base, ScalarFunction(name, shift), iters)
