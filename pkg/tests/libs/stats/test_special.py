import math

import numpy as np
import pytest

from tracekit.errors import ConfigError
from tracekit.libs.stats.special import (
    TailConstants,
    alpha_k,
    ceil_tolerant,
    default_frobenius_probes,
    hanson_wright_c,
    hw_tail_bound,
    min_samples_floor,
    reg_lower_gamma,
    sample_constant,
    sample_count_hw,
)


@pytest.mark.parametrize(
    "s, x, expected",
    [
        (1.0, 1.0, 1.0 - math.exp(-1.0)),
        (0.5, 1.0, math.erf(1.0)),
        (1.0, 5.0, 1.0 - math.exp(-5.0)),
        (2.0, 6.0, 1.0 - 7.0 * math.exp(-6.0)),
        (0.5, 0.0, 0.0),
    ],
)
def test_reg_lower_gamma_closed_forms(s, x, expected):
    assert reg_lower_gamma(s, x) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_reg_lower_gamma_at_infinity():
    assert reg_lower_gamma(3.0, math.inf) == 1.0


@pytest.mark.parametrize("s, x", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.5)])
def test_reg_lower_gamma_domain(s, x):
    with pytest.raises(ConfigError):
        reg_lower_gamma(s, x)


@pytest.mark.parametrize("delta", [0.01, 0.05, 0.2])
def test_alpha_two_closed_form(delta):
    result = alpha_k(2, delta)
    assert not result.clamped
    assert result.value == pytest.approx(-math.log(1.0 - delta), abs=1e-10)


def test_alpha_k_increases_with_k():
    values = [alpha_k(k, 0.05).value for k in range(1, 61)]
    assert all(0.0 < v < 1.0 for v in values)
    assert all(later >= earlier for earlier, later in zip(values, values[1:]))


def test_alpha_k_hits_the_target_probability():
    alpha = alpha_k(20, 0.05).value
    assert reg_lower_gamma(10.0, alpha * 10.0) == pytest.approx(0.05, abs=1e-9)


def test_alpha_k_is_clamped_when_delta_is_large():
    result = alpha_k(4, 0.6)
    assert result.clamped
    assert result.value == pytest.approx(1.0 - 1e-12)


def test_alpha_k_is_memoised():
    assert alpha_k(7, 0.05) is alpha_k(7, 0.05)


@pytest.mark.parametrize("k, delta", [(0, 0.05), (3, 0.0), (3, 1.0)])
def test_alpha_k_domain(k, delta):
    with pytest.raises(ConfigError):
        alpha_k(k, delta)


def test_sample_constant_and_floors():
    assert sample_constant(TailConstants(eps=0.1, delta=0.05)) == pytest.approx(400.0 * math.log(40.0))
    assert sample_constant(TailConstants(eps=0.1, delta=0.05, ell=0.5)) == pytest.approx(600.0 * math.log(40.0))
    assert min_samples_floor(0.05, 1.0) == 30
    assert default_frobenius_probes(0.05) == 37


def test_floor_needs_positive_ell():
    with pytest.raises(ConfigError):
        min_samples_floor(0.05, 0.0)


@pytest.mark.parametrize("eps, delta, ell", [(0.0, 0.05, 0.0), (math.inf, 0.05, 0.0), (0.1, 1.0, 0.0), (0.1, 0.05, -1.0)])
def test_tail_constants_validation(eps, delta, ell):
    with pytest.raises(ConfigError):
        TailConstants(eps=eps, delta=delta, ell=ell)


def test_ceil_tolerant():
    assert ceil_tolerant(4.0 * 2.0) == 8
    assert ceil_tolerant(0.1 * 3 * 10) == 3
    assert ceil_tolerant(3.01) == 4


def test_hanson_wright_constant():
    assert hanson_wright_c(0.25) == pytest.approx(-4.0 + 8.0 * math.log(2.0), rel=1e-14)
    c = 1e-3
    assert hanson_wright_c(c) == pytest.approx(1.0 + 4.0 * c / 3.0 + 2.0 * c * c, rel=1e-8)
    assert hanson_wright_c(0.0099999) == pytest.approx(hanson_wright_c(0.0100001), rel=1e-6)
    assert all(hanson_wright_c(c) > 1.0 for c in (1e-6, 0.1, 0.49))


@pytest.mark.parametrize("c", [0.0, 0.5, -0.1])
def test_hanson_wright_constant_domain(c):
    with pytest.raises(ConfigError):
        hanson_wright_c(c)


def test_hw_tail_bound_and_sample_count():
    assert hw_tail_bound(frob2=1.0, spec=1.0, m=1, eps=1.0, c=0.25) == pytest.approx(2.0 * math.exp(-0.125))
    m = sample_count_hw(frob2=1.0, spec=1.0, eps=1.0, delta=0.05, c=0.25)
    assert m == 30
    assert hw_tail_bound(1.0, 1.0, m, 1.0, 0.25) <= 0.05 < hw_tail_bound(1.0, 1.0, m - 1, 1.0, 0.25)


def test_hw_rejects_inconsistent_norms():
    with pytest.raises(ConfigError):
        hw_tail_bound(frob2=0.5, spec=1.0, m=1, eps=1.0, c=0.25)


@pytest.mark.parametrize("delta", [0.01, 0.05, 0.1])
def test_alpha_k_is_monotone_up_to_two_hundred(delta):
    values = [alpha_k(k, delta).value for k in range(1, 201)]
    assert all(later >= earlier for earlier, later in zip(values, values[1:]))


def test_alpha_k_approaches_one_for_large_k():
    result = alpha_k(10_000, 0.05)
    assert not result.clamped
    assert 0.95 < result.value < 1.0


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0, 5.0, 50.0])
def test_reg_lower_gamma_is_a_distribution_function(s):
    grid = np.linspace(0.0, 4.0 * s + 20.0, 401)
    values = [reg_lower_gamma(s, float(x)) for x in grid]
    assert all(0.0 <= v <= 1.0 for v in values)
    assert all(later >= earlier - 1e-14 for earlier, later in zip(values, values[1:]))
    assert values[-1] == pytest.approx(1.0, abs=1e-6)


def test_sample_count_meets_tolerance():
    rng = np.random.default_rng(0)
    for _ in range(200):
        eps = float(rng.uniform(0.01, 1.0))
        delta = float(rng.uniform(0.01, 0.2))
        ell = float(rng.uniform(0.01, 2.0))
        frob = float(rng.uniform(0.5, 10.0))
        m = ceil_tolerant(sample_constant(TailConstants(eps, delta, ell)) * frob**2)
        bound = 2.0 * math.sqrt(1.0 + ell) * math.sqrt(math.log(2.0 / delta) / m) * frob
        assert bound <= eps * (1.0 + 1e-9)
