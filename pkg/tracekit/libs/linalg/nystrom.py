"""고유쌍 형태의 안정화된 Nystrom 근사.

``A + nu I`` 의 근사를 의사역행렬 없이 만든 뒤, 고유값에서 ``nu`` 를 빼고 0에서 자릅니다.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.linalg.lapack

from tracekit.errors import DimensionError, NotPositiveDefiniteError
from tracekit.libs.linalg.linop import MatrixFreeOperator

logger = logging.getLogger(__name__)

CORE_RTOL = 1e-12


@dataclass(frozen=True)
class NystromFactors:
    U: np.ndarray
    lam: np.ndarray
    shift_nu: float
    probe_count: int

    @property
    def trace(self) -> float:
        return float(self.lam.sum())

    def apply(self, X: np.ndarray) -> np.ndarray:
        return self.U @ (self.lam[:, None] * (self.U.T @ X))

    def to_dense(self) -> np.ndarray:
        return (self.U * self.lam) @ self.U.T


def _truncated_core_image(core: np.ndarray, Y_nu: np.ndarray, pivot: int) -> np.ndarray:
    """``B`` 를 ``B B^T = Y_nu core^+ Y_nu^T`` 가 되도록 고유분해로 만듭니다.

    Args:
        core: 대칭 ``k x k`` 행렬 ``Omega^T Y_nu``.
        Y_nu: 이동된 스케치 ``Y + nu Omega``.
        pivot: Cholesky 가 실패한 위치 (오류 메시지용, 실행하지 않았으면 0).

    Returns:
        np.ndarray: ``n x r`` 행렬, ``r`` 은 유효한 고유값 개수.
    """
    w, V = scipy.linalg.eigh(core)
    cutoff = CORE_RTOL * max(float(np.abs(w).max()), np.finfo(np.float64).tiny)
    if w[0] < -cutoff:
        raise NotPositiveDefiniteError("Nystrom core matrix is not positive definite", pivot=pivot or 1)
    keep = w > cutoff
    logger.debug("Nystrom core is singular; keeping %d of %d directions", int(keep.sum()), w.size)
    return (Y_nu @ V[:, keep]) / np.sqrt(w[keep])


def factor_from_sketch(omega: np.ndarray, Y: np.ndarray) -> NystromFactors:
    """탐침 ``omega`` 와 그 상 ``Y = A omega`` 로 Nystrom 인수를 만듭니다.

    탐침 수가 ``n`` 을 넘거나 Cholesky 가 반올림 때문에 실패하면 core 의 고유분해로 잘린
    의사역행렬을 씁니다. core 에 음의 방향이 있으면 ``NotPositiveDefiniteError`` 입니다.
    """
    n, k = omega.shape
    if Y.shape != (n, k):
        raise DimensionError(f"sketch of shape {Y.shape} does not match probes {omega.shape}")
    nu = float(np.sqrt(n) * np.spacing(np.linalg.norm(Y, 2)))
    Y_nu = Y + nu * omega
    core = omega.T @ Y_nu
    core = (core + core.T) / 2
    info = 0
    if k <= n:
        C, info = scipy.linalg.lapack.dpotrf(core, lower=0, clean=1)
    if k <= n and info == 0:
        B = scipy.linalg.solve_triangular(C, Y_nu.T, trans="T", lower=False).T
    else:
        B = _truncated_core_image(core, Y_nu, pivot=info)
    U, sigma, _ = scipy.linalg.svd(B, full_matrices=False)
    lam = np.maximum(0.0, sigma**2 - nu)
    logger.debug("Nystrom factor with %d probes, shift %.3e", k, nu)
    return NystromFactors(U=U, lam=lam, shift_nu=nu, probe_count=k)


def nystrom_factor(A: MatrixFreeOperator, omega: np.ndarray) -> NystromFactors:
    """PSD ``A`` 의 안정화된 Nystrom 인수 (탐침 블록 하나, ``k`` 번의 matvec)."""
    return factor_from_sketch(omega, A.apply(omega))


def nystrom_error_check(A: np.ndarray, factors: NystromFactors) -> float:
    """밀집 행렬 ``A`` 에 대한 ``||A - U diag(lam) U^T||_F``."""
    A = np.asarray(A, dtype=np.float64)
    if A.shape != (factors.U.shape[0],) * 2:
        raise DimensionError(f"matrix of shape {A.shape} does not match factors of size {factors.U.shape[0]}")
    return float(np.linalg.norm(A - factors.to_dense(), "fro"))
