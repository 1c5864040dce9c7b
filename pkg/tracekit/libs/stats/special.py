"""적응형 추정기가 쓰는 특수함수와 꼬리 확률 상수.

정규화된 하측 불완전 감마함수는 ``x = s + 1`` 아래에서는 멱급수로, 위에서는 수정 Lentz
연분수로 계산합니다.
"""
import functools
import logging
import math
from dataclasses import dataclass

from tracekit.errors import ConfigError, NumericalError

logger = logging.getLogger(__name__)

GAMMA_RTOL = 1e-15
ALPHA_TOL = 1e-12
ALPHA_CLAMP = 1.0 - 1e-12
_TINY = 1e-300


def ceil_tolerant(x: float) -> int:
    """정수 바로 위의 몇 ulp 반올림 오차를 무시하는 올림.

    >>> ceil_tolerant(8.000000000000002), ceil_tolerant(29.5)
    (8, 30)
    """
    return math.ceil(x - 1e-9 * max(1.0, abs(x)))


@dataclass(frozen=True)
class TailConstants:
    eps: float
    delta: float
    ell: float = 0.0

    def __post_init__(self):
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ConfigError(f"eps must be positive and finite, got {self.eps}")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.ell >= 0:
            raise ConfigError(f"ell must be non-negative, got {self.ell}")


@dataclass(frozen=True)
class AlphaK:
    value: float
    clamped: bool = False


def _max_iterations(s: float) -> int:
    return 1000 + int(50 * math.sqrt(s))


def _lower_series(s: float, x: float, log_prefactor: float) -> float:
    term = total = 1.0 / s
    denominator = s
    for _ in range(_max_iterations(s)):
        denominator += 1.0
        term *= x / denominator
        total += term
        if abs(term) < abs(total) * GAMMA_RTOL:
            return min(1.0, total * math.exp(log_prefactor))
    raise NumericalError(f"incomplete gamma series did not converge for s={s}, x={x}")


def _upper_continued_fraction(s: float, x: float, log_prefactor: float) -> float:
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _max_iterations(s)):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < GAMMA_RTOL:
            return math.exp(log_prefactor) * h
    raise NumericalError(f"incomplete gamma continued fraction did not converge for s={s}, x={x}")


def reg_lower_gamma(s: float, x: float) -> float:
    """``P(s, x) = gamma(s, x) / Gamma(s)``.

    Args:
        s (float): 양의 모양 모수.
        x (float): 0 이상의 인자. ``inf`` 면 1 입니다.

    Returns:
        float: ``[0, 1]`` 안의 값.

    Raises:
        ConfigError: ``s <= 0`` 이거나 ``x < 0`` 일 때.
        NumericalError: 급수나 연분수가 수렴하지 않을 때.


    >>> round(reg_lower_gamma(1.0, 1.0), 10)
    0.6321205588
    >>> reg_lower_gamma(3.0, 0.0)
    0.0
    """
    if not s > 0:
        raise ConfigError(f"shape s must be positive, got {s}")
    if not x >= 0:
        raise ConfigError(f"argument x must be non-negative, got {x}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    log_prefactor = -x + s * math.log(x) - math.lgamma(s)
    if x < s + 1.0:
        return _lower_series(s, x, log_prefactor)
    return max(0.0, 1.0 - _upper_continued_fraction(s, x, log_prefactor))


@functools.lru_cache(maxsize=8192)
def alpha_k(k: int, delta: float) -> AlphaK:
    """``P(k/2, alpha k/2) <= delta`` 를 만족하는 (0, 1) 안의 가장 큰 ``alpha`` (이분법).

    ``alpha = 1`` 에서도 확률이 ``delta`` 이하이면 1 바로 아래로 고정하고 표시합니다.

    Args:
        k (int): Frobenius 탐침 수.
        delta (float): 실패 확률.

    Returns:
        AlphaK: 값과 고정 여부.
    """
    if k < 1:
        raise ConfigError(f"k must be a positive integer, got {k}")
    if not 0 < delta < 1:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")
    s = k / 2.0
    if reg_lower_gamma(s, s) <= delta:
        logger.warning("alpha_k clamped for k=%d, delta=%g", k, delta)
        return AlphaK(ALPHA_CLAMP, clamped=True)
    lo, hi = 1e-16, 1.0
    while hi - lo > ALPHA_TOL:
        mid = 0.5 * (lo + hi)
        if reg_lower_gamma(s, mid * s) <= delta:
            lo = mid
        else:
            hi = mid
    return AlphaK(lo)


def sample_constant(tc: TailConstants) -> float:
    """``C(eps, delta) = 4 (1 + ell) eps^-2 log(2/delta)``.

    >>> round(sample_constant(TailConstants(eps=0.1, delta=0.05)), 2)
    1475.55
    """
    return 4.0 * (1.0 + tc.ell) * math.log(2.0 / tc.delta) / tc.eps**2


def min_samples_floor(delta: float, ell: float) -> int:
    """``ceil(4 (1 + ell) log(2/delta) / ell^2)``. ``ell > 0`` 일 때만 정의됩니다.

    >>> min_samples_floor(0.05, 1.0)
    30
    """
    if not ell > 0:
        raise ConfigError("the sample floor needs ell > 0; practical mode omits it")
    if not 0 < delta < 1:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")
    return ceil_tolerant(4.0 * (1.0 + ell) * math.log(2.0 / delta) / ell**2)


def default_frobenius_probes(delta: float) -> int:
    """Frobenius 과대추정에 쓰는 기본 탐침 수 ``ceil(10 log(2/delta))``."""
    return ceil_tolerant(10.0 * math.log(2.0 / delta))


def hanson_wright_c(c: float) -> float:
    """``C(c) = -1/c - log(1 - 2c) / (2 c^2)``, 항상 1 보다 큽니다.

    작은 ``c`` 에서는 두 항의 상쇄를 피하려고 ``1 + sum_{j>=3} 2^(j-1) c^(j-2) / j`` 전개를
    씁니다.

    >>> round(hanson_wright_c(0.25), 6)
    1.545177
    """
    if not 0 < c < 0.5:
        raise ConfigError(f"c must lie in (0, 1/2), got {c}")
    if c < 1e-2:
        return 1.0 + math.fsum(2.0 ** (j - 1) * c ** (j - 2) / j for j in range(3, 24))
    return -1.0 / c - math.log1p(-2.0 * c) / (2.0 * c * c)


def _hw_rate(frob2: float, spectral: float, eps: float, c: float) -> float:
    if not spectral > 0 or frob2 < spectral * spectral * (1.0 - 1e-12):
        raise ConfigError(f"inconsistent norms: ||A||_F^2={frob2} < ||A||_2^2={spectral * spectral}")
    if not eps > 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    return min(eps * eps / (4.0 * hanson_wright_c(c) * frob2), c * eps / (2.0 * spectral))


def hw_tail_bound(frob2: float, spec: float, m: int, eps: float, c: float) -> float:
    """Hanson-Wright 꼬리 확률 상한 ``2 exp(-m min{eps^2/(4C ||A||_F^2), c eps/(2 ||A||_2)})``."""
    if m < 1:
        raise ConfigError(f"m must be at least 1, got {m}")
    return 2.0 * math.exp(-m * _hw_rate(frob2, spec, eps, c))


def sample_count_hw(frob2: float, spec: float, eps: float, delta: float, c: float) -> int:
    """:func:`hw_tail_bound` 가 ``delta`` 이하가 되는 가장 작은 ``m``."""
    if not 0 < delta < 1:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")
    return max(1, ceil_tolerant(math.log(2.0 / delta) / _hw_rate(frob2, spec, eps, c)))
