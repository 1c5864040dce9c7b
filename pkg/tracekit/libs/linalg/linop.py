"""행렬 곱 횟수를 정확히 세는 matrix-free 대칭 연산자.

tracekit 의 모든 추정기는 :meth:`MatrixFreeOperator.apply` 로만 입력에 접근합니다.
``n x s`` 블록을 받아 ``n x s`` 블록을 돌려주고, 연산자의 matvec 카운터에 ``s`` 를,
기반 행렬 카운터에 실제로 쓴 기반 곱 횟수를 더합니다. 연산자는 생성 후 불변이고
카운터만 잠금 아래에서 갱신되므로 동시 실행되는 시행들이 연산자 하나를 공유할 수 있습니다.
"""
import logging
import math
import threading
from abc import ABC, abstractmethod

import numpy as np
import scipy.linalg.lapack
import scipy.sparse
import scipy.sparse.linalg

from tracekit.errors import ConfigError, DimensionError, NotPositiveDefiniteError, SolverError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
ORTHONORMALITY_TOL = 1e-10
CG_TOL = 1e-10


class MatrixFreeOperator(ABC):
    """matvec 으로만 접근하는 대칭 ``dim x dim`` 연산자.

    Args:
        dim (int): 차원 n.
        trace (float | None): 생성 시점에 알려진 정확한 대각합, 모르면 ``None``.
        base_cost (int): 이 연산자의 matvec 한 번에 필요한 기반 행렬 곱의 최대 횟수
            (``B^3`` 이면 3, ``f(B)`` 이면 Lanczos 반복 횟수).
    """

    def __init__(self, dim: int, *, trace: float | None = None, base_cost: int = 1):
        if dim < 1:
            raise DimensionError(f"operator dimension must be positive, got {dim}")
        self.dim = int(dim)
        self.trace = trace
        self.base_cost = int(base_cost)
        self._matvec_count = 0
        self._base_matvec_count = 0
        self._lock = threading.Lock()

    @property
    def shape(self) -> tuple[int, int]:
        return (self.dim, self.dim)

    @property
    def matvec_count(self) -> int:
        return self._matvec_count

    @property
    def base_matvec_count(self) -> int:
        """지금까지 실제로 수행한 기반 행렬 곱의 수."""
        return self._base_matvec_count

    def apply_counted(self, X) -> tuple[np.ndarray, int]:
        """벡터 또는 블록의 각 열에 연산자를 적용합니다.

        Returns:
            tuple[np.ndarray, int]: 결과와 이번 적용에 쓴 기반 행렬 곱의 수.
        """
        X = np.asarray(X, dtype=np.float64)
        is_vector = X.ndim == 1
        block = X[:, None] if is_vector else X
        if block.ndim != 2 or block.shape[0] != self.dim:
            raise DimensionError(f"expected a block with {self.dim} rows, got shape {X.shape}")
        cols = block.shape[1]
        if cols == 0:
            return np.zeros((self.dim, 0)), 0
        out, base_products = self._apply_counted(block)
        with self._lock:
            self._matvec_count += cols
            self._base_matvec_count += base_products
        return (out[:, 0] if is_vector else out), base_products

    def apply(self, X) -> np.ndarray:
        return self.apply_counted(X)[0]

    def _apply_counted(self, X: np.ndarray) -> tuple[np.ndarray, int]:
        return self._apply(X), X.shape[1] * self.base_cost

    @abstractmethod
    def _apply(self, X: np.ndarray) -> np.ndarray:
        ...

    def to_dense(self) -> np.ndarray:
        """항등행렬에 적용해 밀집 행렬을 만듭니다 (``dim`` 번의 matvec, 테스트와 oracle 전용)."""
        return self.apply(np.eye(self.dim))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim}, matvecs={self.matvec_count})"


class Tally(MatrixFreeOperator):
    """추정기 호출 하나가 자기 matvec 만 세도록 ``base`` 위에 씌우는 카운터.

    적용은 그대로 전달되므로 ``base`` 도 모든 곱을 봅니다.
    """

    def __init__(self, base: MatrixFreeOperator):
        super().__init__(base.dim, trace=base.trace, base_cost=base.base_cost)
        self.base = base

    def _apply_counted(self, X: np.ndarray) -> tuple[np.ndarray, int]:
        return self.base.apply_counted(X)

    def _apply(self, X: np.ndarray) -> np.ndarray:
        return self.base.apply(X)


class DenseOperator(MatrixFreeOperator):
    def __init__(self, M: np.ndarray):
        super().__init__(M.shape[0], trace=float(np.trace(M)))
        self.matrix = M

    def _apply(self, X: np.ndarray) -> np.ndarray:
        return self.matrix @ X


class SparseOperator(MatrixFreeOperator):
    def __init__(self, M: scipy.sparse.csr_matrix):
        super().__init__(M.shape[0], trace=float(M.diagonal().sum()))
        self.matrix = M

    def _apply(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self.matrix @ X)


class SpectralOperator(MatrixFreeOperator):
    """``A = U diag(eigenvalues) U^T`` 를 인수별로 적용합니다."""

    def __init__(self, U: np.ndarray, eigenvalues: np.ndarray):
        super().__init__(U.shape[0], trace=math.fsum(eigenvalues))
        self.U = U
        self.eigenvalues = eigenvalues

    def _apply(self, X: np.ndarray) -> np.ndarray:
        return self.U @ (self.eigenvalues[:, None] * (self.U.T @ X))


class TridiagonalOperator(MatrixFreeOperator):
    """주대각과 부대각으로 주어진 대칭 삼중대각 연산자."""

    def __init__(self, diagonal: np.ndarray, off_diagonal: np.ndarray):
        diagonal = np.asarray(diagonal, dtype=np.float64)
        off_diagonal = np.asarray(off_diagonal, dtype=np.float64)
        if off_diagonal.shape != (diagonal.size - 1,):
            raise DimensionError(
                f"off-diagonal must have {diagonal.size - 1} entries, got {off_diagonal.size}"
            )
        super().__init__(diagonal.size, trace=math.fsum(diagonal))
        self.diagonal = diagonal
        self.off_diagonal = off_diagonal

    @property
    def bands(self) -> tuple[np.ndarray, np.ndarray]:
        return self.diagonal, self.off_diagonal

    def _apply(self, X: np.ndarray) -> np.ndarray:
        Y = self.diagonal[:, None] * X
        Y[:-1] += self.off_diagonal[:, None] * X[1:]
        Y[1:] += self.off_diagonal[:, None] * X[:-1]
        return Y


class IdentityPlusLowRankOperator(MatrixFreeOperator):
    """``B = I + X diag(weights) X^T``, ``X`` 는 ``n x t`` 밀집 또는 희소 행렬."""

    def __init__(self, X, weights: np.ndarray):
        weights = np.asarray(weights, dtype=np.float64)
        if X.shape[1] != weights.size:
            raise DimensionError(f"{X.shape[1]} columns but {weights.size} weights")
        column_norms2 = np.asarray(
            X.multiply(X).sum(axis=0) if scipy.sparse.issparse(X) else (X * X).sum(axis=0)
        ).ravel()
        super().__init__(X.shape[0], trace=X.shape[0] + math.fsum(weights * column_norms2))
        self.factor = X
        self.weights = weights

    def _apply(self, V: np.ndarray) -> np.ndarray:
        coefficients = np.asarray(self.factor.T @ V)
        return V + np.asarray(self.factor @ (self.weights[:, None] * coefficients))


class PolynomialOperator(MatrixFreeOperator):
    """``B^degree``. 이 연산자의 matvec 한 번은 ``B`` 와의 곱 ``degree`` 번입니다."""

    def __init__(self, base: MatrixFreeOperator, degree: int):
        super().__init__(base.dim, base_cost=degree * base.base_cost)
        self.base = base
        self.degree = degree

    def _apply_counted(self, X: np.ndarray) -> tuple[np.ndarray, int]:
        total = 0
        for _ in range(self.degree):
            X, products = self.base.apply_counted(X)
            total += products
        return X, total

    def _apply(self, X: np.ndarray) -> np.ndarray:
        return self._apply_counted(X)[0]


class TridiagonalInverseOperator(MatrixFreeOperator):
    """SPD 삼중대각 ``B`` 의 역행렬, 띠 Cholesky 분해로 적용합니다."""

    def __init__(self, base: TridiagonalOperator):
        super().__init__(base.dim)
        self.base = base
        diagonal, off_diagonal = base.bands
        upper = np.zeros((2, base.dim))
        upper[0, 1:] = off_diagonal
        upper[1, :] = diagonal
        factor, info = scipy.linalg.lapack.dpbtrf(upper, lower=0)
        if info > 0:
            raise NotPositiveDefiniteError("tridiagonal operator is not positive definite", pivot=info)
        self._factor = factor

    def _apply(self, X: np.ndarray) -> np.ndarray:
        Z, info = scipy.linalg.lapack.dpbtrs(self._factor, X, lower=0)
        if info != 0:
            raise DimensionError(f"banded solve rejected its arguments (info={info})")
        return Z


class ConjugateGradientInverseOperator(MatrixFreeOperator):
    """SPD ``B`` 의 역행렬, 열마다 켤레기울기법으로 풉니다."""

    def __init__(self, base: MatrixFreeOperator, tol: float = CG_TOL, maxiter: int | None = None):
        super().__init__(base.dim)
        self.base = base
        self.tol = tol
        self.maxiter = maxiter or 10 * base.dim
        self._linear_operator = scipy.sparse.linalg.LinearOperator(
            base.shape, matvec=base.apply, dtype=np.float64
        )

    def _apply(self, X: np.ndarray) -> np.ndarray:
        Z = np.zeros_like(X)
        for j in range(X.shape[1]):
            rhs = X[:, j]
            rhs_norm = np.linalg.norm(rhs)
            if rhs_norm == 0.0:
                continue
            iterations = [0]
            z, info = scipy.sparse.linalg.cg(
                self._linear_operator,
                rhs,
                rtol=self.tol,
                atol=0.0,
                maxiter=self.maxiter,
                callback=lambda _: iterations.__setitem__(0, iterations[0] + 1),
            )
            if info != 0:
                residual = np.linalg.norm(rhs - self.base.apply(z)) / rhs_norm
                raise SolverError(
                    "conjugate gradients did not converge", residual=residual, iterations=iterations[0]
                )
            Z[:, j] = z
        return Z


class RestOperator(MatrixFreeOperator):
    """``(I - QQ^T) A (I - QQ^T)``. 행렬을 만들지 않고 열마다 기반 matvec 한 번."""

    def __init__(self, base: MatrixFreeOperator, basis: np.ndarray):
        super().__init__(base.dim, base_cost=base.base_cost)
        self.base = base
        self.basis = basis

    def project_out(self, X: np.ndarray) -> np.ndarray:
        return X - self.basis @ (self.basis.T @ X)

    def _apply_counted(self, X: np.ndarray) -> tuple[np.ndarray, int]:
        Y, products = self.base.apply_counted(self.project_out(X))
        return self.project_out(Y), products

    def _apply(self, X: np.ndarray) -> np.ndarray:
        return self._apply_counted(X)[0]


def dense_operator(M) -> DenseOperator:
    """밀집 대칭 행렬을 감쌉니다. 비대칭 입력은 ``(M + M^T)/2`` 로 대칭화합니다.

    >>> dense_operator([[2.0, 0.0], [0.0, 3.0]]).apply([1.0, 1.0]).tolist()
    [2.0, 3.0]
    """
    M = np.array(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    if np.abs(M - M.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        logger.warning("symmetrizing a %dx%d matrix that is not symmetric", *M.shape)
        M = (M + M.T) / 2
    return DenseOperator(M)


def sparse_operator(M) -> SparseOperator:
    M = scipy.sparse.csr_matrix(M, dtype=np.float64)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    asymmetry = abs(M - M.T).max() if M.nnz else 0.0
    if asymmetry > SYMMETRY_TOL * max(1.0, abs(M).max() if M.nnz else 0.0):
        logger.warning("symmetrizing a %dx%d sparse matrix that is not symmetric", *M.shape)
        M = ((M + M.T) / 2).tocsr()
    return SparseOperator(M)


def algebraic_decay(n: int, c: float) -> np.ndarray:
    """고유값 ``1/i^c`` (``i = 1..n``).

    >>> algebraic_decay(3, 1.0).tolist()
    [1.0, 0.5, 0.3333333333333333]
    """
    return 1.0 / np.arange(1, n + 1, dtype=np.float64) ** c


def exponential_decay(n: int, s: float) -> np.ndarray:
    """고유값 ``exp(-i/s)`` (``i = 1..n``)."""
    return np.exp(-np.arange(1, n + 1, dtype=np.float64) / s)


def synthetic_spectrum_operator(n: int, eigenvalues, seed: int) -> SpectralOperator:
    """``U diag(eigenvalues) U^T``, ``U`` 는 시드 고정 가우스 행렬 QR 의 부호 보정된 Q 인수."""
    if n < 1:
        raise ConfigError(f"n must be positive, got {n}")
    eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
    if eigenvalues.shape != (n,):
        raise DimensionError(f"expected {n} eigenvalues, got {eigenvalues.size}")
    if not np.all(np.isfinite(eigenvalues)):
        raise ConfigError("eigenvalues must be finite")
    gaussian = np.random.default_rng(seed).standard_normal((n, n))
    U, R = np.linalg.qr(gaussian)
    U *= np.where(np.diag(R) < 0, -1.0, 1.0)
    return SpectralOperator(U, eigenvalues)


def polynomial_operator(base: MatrixFreeOperator, degree: int) -> PolynomialOperator:
    if degree < 1:
        raise ConfigError(f"polynomial degree must be at least 1, got {degree}")
    return PolynomialOperator(base, degree)


def poisson_operator(mesh_k: int) -> SparseOperator:
    """k x k 격자 위의 5점 라플라시안 (대각 4, 이웃마다 -1)."""
    if mesh_k < 2:
        raise ConfigError(f"mesh size must be at least 2, got {mesh_k}")
    T = scipy.sparse.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(mesh_k, mesh_k))
    eye = scipy.sparse.identity(mesh_k)
    return SparseOperator(scipy.sparse.csr_matrix(scipy.sparse.kron(eye, T) + scipy.sparse.kron(T, eye)))


def inverse_operator(base: MatrixFreeOperator, kind: str = "cg", tol: float = CG_TOL) -> MatrixFreeOperator:
    """``B^{-1}`` 를 띠 직접법(``kind="tridiagonal"``) 또는 켤레기울기법으로 적용합니다."""
    if kind == "tridiagonal":
        if not isinstance(base, TridiagonalOperator):
            raise ConfigError("a tridiagonal inverse needs an operator that exposes its bands")
        return TridiagonalInverseOperator(base)
    if kind == "cg":
        if tol <= 0:
            raise ConfigError(f"CG tolerance must be positive, got {tol}")
        return ConjugateGradientInverseOperator(base, tol=tol)
    raise ConfigError(f"unknown inverse kind {kind!r}")


def rest_operator(base: MatrixFreeOperator, basis) -> RestOperator:
    basis = np.asarray(basis, dtype=np.float64)
    if basis.ndim != 2 or basis.shape[0] != base.dim:
        raise DimensionError(f"basis must have {base.dim} rows, got shape {basis.shape}")
    if basis.shape[1]:
        defect = np.abs(basis.T @ basis - np.eye(basis.shape[1])).max()
        if defect > ORTHONORMALITY_TOL:
            raise ConfigError(f"basis columns are not orthonormal (defect {defect:.2e})")
    return RestOperator(base, basis)


def check_symmetry(op: MatrixFreeOperator, pairs: int = 20, seed: int = 0) -> float:
    """무작위 단위벡터 쌍에 대한 ``|<u, Av> - <v, Au>| / (||Au|| ||v||)`` 의 최댓값."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        uv = rng.standard_normal((op.dim, 2))
        uv /= np.linalg.norm(uv, axis=0)
        Auv = op.apply(uv)
        defect = abs(uv[:, 0] @ Auv[:, 1] - uv[:, 1] @ Auv[:, 0])
        scale = np.linalg.norm(Auv[:, 0]) * np.linalg.norm(uv[:, 1])
        worst = max(worst, defect / scale if scale > 0 else defect)
    return worst
