"""Test matrices of the experiment suite, with their exact traces where affordable."""
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse

from tracekit.apps.fixtures.models import FixtureKind, FixtureSpec
from tracekit.libs.linalg.io import read_edge_list, read_matrix_market
from tracekit.libs.linalg.lanczos import matrix_function_operator
from tracekit.libs.linalg.linop import (
    IdentityPlusLowRankOperator,
    MatrixFreeOperator,
    SparseOperator,
    TridiagonalOperator,
    algebraic_decay,
    exponential_decay,
    inverse_operator,
    poisson_operator,
    polynomial_operator,
    synthetic_spectrum_operator,
)

logger = logging.getLogger(__name__)

DENSE_TRUTH_LIMIT = 2000
GRAPH_TRUTH_LIMIT = 6000
LOGDET_LEADING_TERMS = 40
LOGDET_TRAILING_TERMS = 60


@dataclass(frozen=True)
class Fixture:
    operator: MatrixFreeOperator
    truth: float | None
    psd: bool
    fixture_id: str


def tridiagonal_inverse_trace(n: int) -> float:
    """``tr(T^{-1})`` for ``T = tridiag(-1, 4, -1)`` of size ``n``.

    >>> round(tridiagonal_inverse_trace(1), 12)
    0.25
    """
    k = np.arange(1, n + 1)
    return math.fsum(1.0 / (4.0 - 2.0 * np.cos(k * np.pi / (n + 1))))


def poisson_inverse_trace(mesh_k: int) -> float:
    """``tr(L^{-1})`` for the 5-point Laplacian on a ``mesh_k x mesh_k`` mesh."""
    theta = 2.0 - 2.0 * np.cos(np.arange(1, mesh_k + 1) * np.pi / (mesh_k + 1))
    return math.fsum((1.0 / (theta[:, None] + theta[None, :])).ravel())


def triangle_trace(adjacency: scipy.sparse.csr_matrix) -> float:
    """``tr(B^3)`` as the sum of ``B^2`` entries on the edges of ``B``; six times the triangle count."""
    return float((adjacency @ adjacency).multiply(adjacency).sum())


def _dense(operator: MatrixFreeOperator) -> np.ndarray:
    if isinstance(operator, SparseOperator):
        return operator.matrix.toarray()
    return operator.to_dense()


def _synthetic(spec: FixtureSpec, eigenvalues: np.ndarray) -> Fixture:
    operator = synthetic_spectrum_operator(spec.n, eigenvalues, spec.seed)
    return Fixture(operator, operator.trace, bool(np.all(eigenvalues >= 0)), spec.fixture_id)


def _low_rank_spectrum(n: int, rank: int) -> np.ndarray:
    eigenvalues = np.zeros(n)
    eigenvalues[:rank] = algebraic_decay(rank, 1.0)
    return eigenvalues


def _graph_triangles(spec: FixtureSpec) -> Fixture:
    graph = read_edge_list(spec.path)
    truth = triangle_trace(graph.matrix) if graph.dim <= GRAPH_TRUTH_LIMIT else None
    return Fixture(polynomial_operator(graph, 3), truth, False, spec.fixture_id)


def _estrada(spec: FixtureSpec) -> Fixture:
    graph = read_edge_list(spec.path)
    truth = None
    if graph.dim <= DENSE_TRUTH_LIMIT:
        truth = math.fsum(np.exp(np.linalg.eigvalsh(graph.matrix.toarray())))
    return Fixture(matrix_function_operator(graph, "exp", spec.iters), truth, True, spec.fixture_id)


def sprandn_low_rank_update(n: int, density: float, seed: int) -> IdentityPlusLowRankOperator:
    """``B = I + sum_j w_j x_j x_j^T`` with sparse Gaussian ``x_j``.

    The first 40 weights are ``10/j^2`` and the remaining ones ``1/j^2``.
    """
    rng = np.random.default_rng(seed)
    terms = LOGDET_LEADING_TERMS + LOGDET_TRAILING_TERMS
    factor = scipy.sparse.random(
        n, terms, density=density, format="csc", random_state=rng, data_rvs=rng.standard_normal
    )
    j = np.arange(1, terms + 1, dtype=np.float64)
    weights = np.where(j <= LOGDET_LEADING_TERMS, 10.0, 1.0) / j**2
    return IdentityPlusLowRankOperator(factor, weights)


def _logdet_truth(base: MatrixFreeOperator) -> float | None:
    if base.dim > DENSE_TRUTH_LIMIT:
        return None
    sign, logdet = np.linalg.slogdet(_dense(base))
    if sign <= 0:
        logger.warning("log-det fixture is not positive definite; truth left empty")
        return None
    return float(logdet)


def _logdet_sprandn(spec: FixtureSpec) -> Fixture:
    base = sprandn_low_rank_update(spec.n, spec.density, spec.seed)
    truth = _logdet_truth(base)
    return Fixture(matrix_function_operator(base, "log", spec.iters), truth, True, spec.fixture_id)


def _logdet_matrix(spec: FixtureSpec) -> Fixture:
    base = read_matrix_market(spec.path)
    truth = _logdet_truth(base)
    return Fixture(matrix_function_operator(base, "log", spec.iters), truth, spec.psd, spec.fixture_id)


def _inverse_tridiag(spec: FixtureSpec) -> Fixture:
    base = TridiagonalOperator(np.full(spec.n, 4.0), np.full(spec.n - 1, -1.0))
    operator = inverse_operator(base, kind="tridiagonal")
    return Fixture(operator, tridiagonal_inverse_trace(spec.n), True, spec.fixture_id)


def _inverse_poisson(spec: FixtureSpec) -> Fixture:
    operator = inverse_operator(poisson_operator(spec.mesh_k), kind="cg")
    return Fixture(operator, poisson_inverse_trace(spec.mesh_k), True, spec.fixture_id)


def _matrix_file(spec: FixtureSpec) -> Fixture:
    operator = read_matrix_market(spec.path)
    return Fixture(operator, operator.trace, spec.psd, spec.fixture_id)


def generate_fixture(spec: FixtureSpec) -> Fixture:
    """Build the operator described by ``spec`` together with its known trace."""
    match spec.kind:
        case FixtureKind.SYNTHETIC_ALGEBRAIC:
            fixture = _synthetic(spec, algebraic_decay(spec.n, spec.c))
        case FixtureKind.SYNTHETIC_EXPONENTIAL:
            fixture = _synthetic(spec, exponential_decay(spec.n, spec.s))
        case FixtureKind.LOW_RANK:
            fixture = _synthetic(spec, _low_rank_spectrum(spec.n, spec.rank))
        case FixtureKind.GRAPH_TRIANGLES:
            fixture = _graph_triangles(spec)
        case FixtureKind.ESTRADA:
            fixture = _estrada(spec)
        case FixtureKind.LOGDET_SPRANDN:
            fixture = _logdet_sprandn(spec)
        case FixtureKind.LOGDET_MATRIX:
            fixture = _logdet_matrix(spec)
        case FixtureKind.INVERSE_TRIDIAG:
            fixture = _inverse_tridiag(spec)
        case FixtureKind.INVERSE_POISSON:
            fixture = _inverse_poisson(spec)
        case FixtureKind.MATRIX_FILE:
            fixture = _matrix_file(spec)
    logger.info("fixture %s: n=%d, truth=%s", fixture.fixture_id, fixture.operator.dim, fixture.truth)
    return fixture
