"""Stochastic trace estimators with exact matvec accounting.

Each estimator wraps its operator in a :class:`~tracekit.libs.linalg.linop.Tally`, so the
reported counts belong to this call alone even when concurrent trials share the operator.
Probe families come from separate substreams of ``seed``: the range-finder sketch, the
Hutchinson probes, the Frobenius probes and the single-pass co-sketch never overlap.
"""
import logging
import math

import numpy as np
import scipy.linalg

from tracekit.apps.estimation.models import AdaptiveConfig, EstimatorKind, TraceReport
from tracekit.errors import ConfigError, DegenerateBlockError, RankDeficiencyError
from tracekit.libs.linalg.linop import MatrixFreeOperator, Tally, rest_operator
from tracekit.libs.linalg.nystrom import factor_from_sketch
from tracekit.libs.linalg.rangefinder import RangeState, advance, complete_basis, should_stop
from tracekit.libs.stats.sketch import ProbeKind, ProbeStream, StreamRole
from tracekit.libs.stats.special import (
    TailConstants,
    alpha_k,
    ceil_tolerant,
    default_frobenius_probes,
    min_samples_floor,
    sample_constant,
)

logger = logging.getLogger(__name__)

PROBE_CHUNK = 256
RANK_RTOL = 1e-12
SINGLE_PASS_COND_LIMIT = 1e12
SINGLE_PASS_DEFAULTS = (0.32, 0.35, 0.33)


def _report(kind: EstimatorKind, tally: Tally, estimate: float, lowrank: int, *, seed: int,
            rank: int = 0, frob: float | None = None, budget: int | None = None) -> TraceReport:
    total = tally.matvec_count
    report = TraceReport(
        estimator=kind,
        estimate=float(estimate),
        matvecs_total=total,
        matvecs_lowrank=lowrank,
        matvecs_hutchinson=total - lowrank,
        rank_used=rank,
        frob_overestimate=frob,
        base_matvecs=tally.base_matvec_count,
        seed=seed,
        budget=budget,
    )
    logger.info(
        "%s: estimate=%.10g matvecs=%d (low-rank %d, hutchinson %d) rank=%d",
        kind.value, report.estimate, total, lowrank, report.matvecs_hutchinson, rank,
    )
    return report


def _quadratic_form_sum(op: MatrixFreeOperator, stream: ProbeStream, count: int) -> float:
    """``sum_j x_j^T op x_j`` over the next ``count`` columns of ``stream``, drawn in chunks."""
    total = 0.0
    remaining = count
    while remaining > 0:
        probes = stream.draw(min(PROBE_CHUNK, remaining))
        total += float(np.sum(probes * op.apply(probes)))
        remaining -= probes.shape[1]
    return total


def _round_budget(m: int, multiple: int, kind: EstimatorKind, cap: int | None = None) -> int:
    effective = m - m % multiple
    if cap is not None:
        effective = min(effective, cap)
    if effective != m:
        logger.warning("%s budget %d rounded down to %d", kind.value, m, effective)
    return effective


def hutchinson(A: MatrixFreeOperator, m: int, probes: ProbeKind = ProbeKind.GAUSSIAN, seed: int = 0,
               *, omega: np.ndarray | None = None) -> TraceReport:
    """``(1/m) tr(X^T A X)`` over ``m`` probe columns; ``omega`` replaces the drawn probes."""
    tally = Tally(A)
    if omega is not None:
        omega = np.asarray(omega, dtype=np.float64).reshape(A.dim, -1)
        m = omega.shape[1]
        total = float(np.sum(omega * tally.apply(omega)))
    else:
        if m < 1:
            raise ConfigError(f"hutchinson needs m >= 1, got {m}")
        stream = ProbeStream(seed, A.dim, ProbeKind(probes), StreamRole.HUTCHINSON)
        total = _quadratic_form_sum(tally, stream, m)
    return _report(EstimatorKind.HUTCHINSON, tally, total / m, 0, seed=seed, budget=m)


def hutch_pp(A: MatrixFreeOperator, m: int, seed: int = 0,
             probes: ProbeKind = ProbeKind.GAUSSIAN) -> TraceReport:
    if m < 3:
        raise ConfigError(f"hutch_pp needs m >= 3, got {m}")
    # QR 의 열 수는 min(n, third) 이므로 third <= n
    budget = _round_budget(m, 3, EstimatorKind.HUTCH_PP, cap=3 * A.dim)
    third = budget // 3
    kind = ProbeKind(probes)
    tally = Tally(A)

    sketch = ProbeStream(seed, A.dim, kind, StreamRole.SKETCH).draw(third)
    Q, _ = np.linalg.qr(tally.apply(sketch))
    lowrank_trace = float(np.sum(Q * tally.apply(Q)))
    lowrank = tally.matvec_count

    psi = ProbeStream(seed, A.dim, kind, StreamRole.HUTCHINSON).draw(third)
    psi -= Q @ (Q.T @ psi)
    residual_trace = float(np.sum(psi * tally.apply(psi))) / third
    return _report(EstimatorKind.HUTCH_PP, tally, lowrank_trace + residual_trace, lowrank,
                   seed=seed, rank=Q.shape[1], budget=budget)


def _range_phase(tally: Tally, cfg: AdaptiveConfig, constant: float) -> tuple[RangeState, bool]:
    """Grow the basis until the shifted objective turns up.

    Returns the state and whether its ``trest1`` is already the exact trace: the case when
    a probe block falls inside the basis or the rank cap ``n/2`` is reached.
    """
    state = RangeState.empty(tally.dim, constant)
    stream = ProbeStream(cfg.seed, tally.dim, ProbeKind.GAUSSIAN, StreamRole.SKETCH)
    cap = tally.dim // 2
    while True:
        block = min(cfg.block, cap - state.rank)
        if block < 1:
            complete_basis(state, tally)
            return state, True
        try:
            advance(state, tally, stream.draw(block))
        except DegenerateBlockError as exc:
            logger.debug("range finder stopped: %s", exc)
            return state, True
        if should_stop(state, cfg.block):
            return state, False


def prototype_adaptive(A: MatrixFreeOperator, cfg: AdaptiveConfig, *, reuse: bool = False) -> TraceReport:
    """Adaptive estimate with the ``(eps, delta)`` guarantee.

    The Hutchinson phase uses ``M`` fresh probes sized from a ``k``-probe Frobenius
    over-estimate of the residual, so ``k + M`` products go to the second phase.

    With ``reuse`` the ``k`` Frobenius products also enter the Hutchinson sum and only
    ``max(M - k, 0)`` fresh probes are drawn; the guarantee weakens to ``1 - 3 delta``.
    """
    if cfg.mode != "guaranteed":
        raise ConfigError("prototype_adaptive runs in guaranteed mode")
    tally = Tally(A)
    constant = sample_constant(TailConstants(cfg.eps, cfg.delta, cfg.ell))
    state, exact = _range_phase(tally, cfg, constant)
    lowrank = state.matvecs_used
    if exact:
        return _report(EstimatorKind.PROTOTYPE_ADAPTIVE, tally, state.trest1, lowrank,
                       seed=cfg.seed, rank=state.rank, frob=0.0)

    k = cfg.k or default_frobenius_probes(cfg.delta)
    alpha = cfg.alpha or alpha_k(k, cfg.delta).value
    rest = rest_operator(tally, state.Q)
    frob_probes = ProbeStream(cfg.seed, A.dim, ProbeKind.GAUSSIAN, StreamRole.FROBENIUS).draw(k)
    frob_images = rest.apply(frob_probes)
    frob = float(np.sum(frob_images**2)) / (k * alpha)
    samples = max(min_samples_floor(cfg.delta, cfg.ell), ceil_tolerant(constant * frob))
    logger.debug("prototype: k=%d alpha=%.6g frob=%.6g M=%d reuse=%s", k, alpha, frob, samples, reuse)

    stream = ProbeStream(cfg.seed, A.dim, ProbeKind.GAUSSIAN, StreamRole.HUTCHINSON)
    if reuse:
        fresh = max(samples - k, 0)
        reused_sum = float(np.sum(frob_probes * frob_images))
        residual_trace = (reused_sum + _quadratic_form_sum(rest, stream, fresh)) / (k + fresh)
    else:
        residual_trace = _quadratic_form_sum(rest, stream, samples) / samples
    return _report(EstimatorKind.PROTOTYPE_ADAPTIVE, tally, state.trest1 + residual_trace, lowrank,
                   seed=cfg.seed, rank=state.rank, frob=frob)


def a_hutch_pp(A: MatrixFreeOperator, cfg: AdaptiveConfig) -> TraceReport:
    """A-Hutch++: the Frobenius probes double as Hutchinson probes.

    Probe blocks of size ``b`` are added until ``M_k = C (1/(k alpha_k)) ||A_rest Psi||_F^2``
    drops to ``k`` or below.
    """
    if cfg.mode != "practical":
        raise ConfigError("a_hutch_pp runs in practical mode (ell = 0)")
    tally = Tally(A)
    constant = sample_constant(TailConstants(cfg.eps, cfg.delta, cfg.ell))
    state, exact = _range_phase(tally, cfg, constant)
    lowrank = state.matvecs_used
    if exact:
        return _report(EstimatorKind.A_HUTCH_PP, tally, state.trest1, lowrank,
                       seed=cfg.seed, rank=state.rank, frob=0.0)

    rest = rest_operator(tally, state.Q)
    stream = ProbeStream(cfg.seed, A.dim, ProbeKind.GAUSSIAN, StreamRole.FROBENIUS)
    k = 0
    frob_sum = trace_sum = 0.0
    while True:
        psi = stream.draw(cfg.block)
        C = rest.apply(psi)
        k += cfg.block
        frob_sum += float(np.sum(C * C))
        trace_sum += float(np.sum(psi * C))
        frob = frob_sum / (k * alpha_k(k, cfg.delta).value)
        if constant * frob <= k:
            break
    return _report(EstimatorKind.A_HUTCH_PP, tally, state.trest1 + trace_sum / k, lowrank,
                   seed=cfg.seed, rank=state.rank, frob=frob)


def _check_single_pass_split(m: int, c1: float, c2: float, c3: float) -> tuple[int, int, int]:
    if not (c1 > 0 and c2 > 0 and c3 > 0):
        raise ConfigError("single-pass constants must be positive")
    if not c1 < c2:
        raise ConfigError(f"single-pass constants need c1 < c2, got {c1} and {c2}")
    if not math.isclose(c1 + c2 + c3, 1.0, abs_tol=1e-12):
        raise ConfigError(f"single-pass constants must sum to 1, got {c1 + c2 + c3}")
    m1, m2 = math.floor(c1 * m), math.floor(c2 * m)
    m3 = m - m1 - m2
    if min(m1, m2, m3) < 1:
        raise ConfigError(f"budget {m} leaves an empty probe block ({m1}, {m2}, {m3})")
    return m1, m2, m3


def _single_pass_factors(omega: np.ndarray, X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(S, Z)`` with ``Y (Omega^T Y)^+ X^T = S Z^T``.

    Full-rank sketches go through the thin QR ``(Omega^T Y)^T = QR``. When ``X`` is
    numerically rank deficient the pseudoinverse is truncated to that rank instead.
    """
    core = omega.T @ Y
    sigma_x = np.linalg.svd(X, compute_uv=False)
    rank = int(np.sum(sigma_x > RANK_RTOL * sigma_x[0])) if sigma_x[0] > 0 else 0
    if rank < X.shape[1]:
        logger.debug("single-pass sketch has numerical rank %d of %d", rank, X.shape[1])
        if rank == 0:
            return np.zeros((Y.shape[0], 0)), np.zeros((X.shape[0], 0))
        U, sigma, Vt = np.linalg.svd(core, full_matrices=False)
        return (Y @ Vt[:rank].T) / sigma[:rank], X @ U[:, :rank]
    Q, R = np.linalg.qr(core.T)
    condition = np.linalg.cond(R)
    if not condition <= SINGLE_PASS_COND_LIMIT:
        raise RankDeficiencyError(
            f"single-pass core is ill-conditioned (cond {condition:.3g}); "
            "increase c2 or use nystrom_pp",
            condition=float(condition),
        )
    return Y @ Q, scipy.linalg.solve_triangular(R, X.T, trans="T", lower=False).T


def single_pass_hutch_pp(A: MatrixFreeOperator, m: int, c1: float = SINGLE_PASS_DEFAULTS[0],
                         c2: float = SINGLE_PASS_DEFAULTS[1], c3: float = SINGLE_PASS_DEFAULTS[2],
                         seed: int = 0) -> TraceReport:
    """Single-pass Hutch++: one batched product ``A [Omega Psi Phi]``."""
    m1, m2, m3 = _check_single_pass_split(m, c1, c2, c3)
    tally = Tally(A)
    omega = ProbeStream(seed, A.dim, role=StreamRole.SKETCH).draw(m1)
    psi = ProbeStream(seed, A.dim, role=StreamRole.CO_SKETCH).draw(m2)
    phi = ProbeStream(seed, A.dim, role=StreamRole.HUTCHINSON).draw(m3)
    XYZ = tally.apply(np.hstack([omega, psi, phi]))
    X, Y, Z = XYZ[:, :m1], XYZ[:, m1:m1 + m2], XYZ[:, m1 + m2:]

    S, W = _single_pass_factors(omega, X, Y)
    lowrank_trace = float(np.sum(S * W))
    correction = float(np.sum((S.T @ phi) * (W.T @ phi)))
    residual_trace = (float(np.sum(phi * Z)) - correction) / m3
    return _report(EstimatorKind.SINGLE_PASS_HUTCH_PP, tally, lowrank_trace + residual_trace,
                   m1 + m2, seed=seed, rank=S.shape[1], budget=m)


def nystrom_pp(A: MatrixFreeOperator, m: int, seed: int = 0) -> TraceReport:
    """Nystrom++ for PSD ``A``: Nystrom trace plus Hutchinson on the Nystrom residual."""
    if m < 2:
        raise ConfigError(f"nystrom_pp needs m >= 2, got {m}")
    budget = _round_budget(m, 2, EstimatorKind.NYSTROM_PP)
    half = budget // 2
    tally = Tally(A)
    omega = ProbeStream(seed, A.dim, role=StreamRole.SKETCH).draw(half)
    phi = ProbeStream(seed, A.dim, role=StreamRole.HUTCHINSON).draw(half)
    XY = tally.apply(np.hstack([omega, phi]))

    factors = factor_from_sketch(omega, XY[:, :half])
    projected = np.sqrt(factors.lam)[:, None] * (factors.U.T @ phi)
    residual_trace = (float(np.sum(phi * XY[:, half:])) - float(np.sum(projected**2))) / half
    return _report(EstimatorKind.NYSTROM_PP, tally, factors.trace + residual_trace, half,
                   seed=seed, rank=int(np.count_nonzero(factors.lam)), budget=budget)


def run_estimator(kind: EstimatorKind, A: MatrixFreeOperator, *, budget: int | None = None,
                  cfg: AdaptiveConfig | None = None, seed: int = 0,
                  probes: ProbeKind = ProbeKind.GAUSSIAN, reuse: bool = False) -> TraceReport:
    """Dispatch by name: adaptive estimators take ``cfg``, the others a matvec ``budget``."""
    if reuse and kind is not EstimatorKind.PROTOTYPE_ADAPTIVE:
        raise ConfigError(f"reuse applies to prototype_adaptive only, not {kind.value}")
    if kind.adaptive:
        if cfg is None:
            raise ConfigError(f"{kind.value} needs an adaptive configuration")
        if kind is EstimatorKind.PROTOTYPE_ADAPTIVE:
            return prototype_adaptive(A, cfg, reuse=reuse)
        return a_hutch_pp(A, cfg)
    if budget is None:
        raise ConfigError(f"{kind.value} needs a matvec budget")
    match kind:
        case EstimatorKind.HUTCHINSON:
            return hutchinson(A, budget, probes, seed)
        case EstimatorKind.HUTCH_PP:
            return hutch_pp(A, budget, seed, probes)
        case EstimatorKind.SINGLE_PASS_HUTCH_PP:
            return single_pass_hutch_pp(A, budget, seed=seed)
        case EstimatorKind.NYSTROM_PP:
            return nystrom_pp(A, budget, seed)
