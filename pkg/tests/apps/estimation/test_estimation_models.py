import math

import pytest
from pydantic import ValidationError

from tracekit.apps.estimation.models import AdaptiveConfig, EstimateRequest, EstimatorKind, TraceReport


def test_practical_mode_forces_ell_to_zero():
    cfg = AdaptiveConfig(eps=0.1, delta=0.05, ell=0.5)
    assert cfg.mode == "practical"
    assert cfg.ell == 0.0


def test_guaranteed_mode_needs_positive_ell():
    with pytest.raises(ValidationError):
        AdaptiveConfig(eps=0.1, delta=0.05, mode="guaranteed")
    assert AdaptiveConfig(eps=0.1, delta=0.05, ell=0.1, mode="guaranteed").ell == 0.1


@pytest.mark.parametrize(
    "fields",
    [
        {"eps": 0.0, "delta": 0.05},
        {"eps": math.inf, "delta": 0.05},
        {"eps": 0.1, "delta": 1.0},
        {"eps": 0.1, "delta": 0.05, "block": 0},
        {"eps": 0.1, "delta": 0.05, "alpha": 1.5},
    ],
)
def test_adaptive_config_rejects(fields):
    with pytest.raises(ValidationError):
        AdaptiveConfig(**fields)


def test_estimator_kind_properties():
    assert {kind for kind in EstimatorKind if kind.adaptive} == {
        EstimatorKind.PROTOTYPE_ADAPTIVE,
        EstimatorKind.A_HUTCH_PP,
    }
    assert [kind for kind in EstimatorKind if kind.needs_psd] == [EstimatorKind.NYSTROM_PP]


def test_trace_report_split_must_add_up():
    with pytest.raises(ValidationError):
        TraceReport(estimator="hutch_pp", estimate=1.0, matvecs_total=30, matvecs_lowrank=20,
                    matvecs_hutchinson=9, base_matvecs=30, seed=0)


@pytest.mark.parametrize(
    "fields",
    [
        {"estimator": "a_hutch_pp"},
        {"estimator": "hutch_pp"},
        {"estimator": "nystrom_pp", "budget": 20, "probes": "rademacher"},
        {"estimator": "hutch_pp", "budget": 0},
        {"estimator": "a_hutch_pp", "rel_eps": 0.1, "reuse": True},
    ],
)
def test_estimate_request_rejects(fields):
    with pytest.raises(ValidationError):
        EstimateRequest(fixture={"kind": "synthetic_algebraic"}, **fields)


def test_estimate_request_defaults():
    request = EstimateRequest(fixture={"kind": "low_rank", "n": 50}, estimator="a_hutch_pp", rel_eps=0.01)
    assert request.delta == 0.05
    assert request.block == 1
    assert request.fixture.rank == 5


def test_estimate_request_reuse_for_prototype():
    request = EstimateRequest(fixture={"kind": "synthetic_algebraic"}, estimator="prototype_adaptive",
                              rel_eps=0.1, reuse=True)
    assert request.reuse
