"""Core domain types: alpha schedules, scalarization, config (de)serialization."""

import math

import numpy as np
import pytest

from motr.core import (
    ConfigError,
    DimensionMismatchError,
    FixedAlpha,
    HessianCombine,
    HessianMode,
    ObjectiveSample,
    RngStream,
    SolverConfig,
    SummableToOneAlpha,
    alpha_at,
    as_decision_vector,
    parse_kv_text,
    scalar_representation,
    solver_config_from_mapping,
    solver_config_to_mapping,
)


def test_alpha_fixed_constant():
    assert alpha_at(FixedAlpha(math.sqrt(0.5)), 7, 2) == pytest.approx(0.70710678, abs=1e-8)


def test_alpha_summable_values():
    assert alpha_at(SummableToOneAlpha(offset=2), 0, 1) == pytest.approx(0.75)
    assert alpha_at(SummableToOneAlpha(offset=2), 0, 2) == pytest.approx(0.8660254, abs=1e-7)


def test_alpha_summable_increasing_with_limit_one():
    sched = SummableToOneAlpha(offset=2)
    vals = [alpha_at(sched, k, 2) for k in range(200)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1.0
    assert alpha_at(sched, 10**9, 2) == pytest.approx(1.0, abs=1e-12)


def test_alpha_summable_failure_mass_bounded():
    # Partial sums of 1 - alpha_k^q stay below the comparison series
    # sum 1/(k+offset)^2 for every prefix.
    sched = SummableToOneAlpha(offset=2)
    ks = np.arange(100_000)
    fail = 1.0 - np.array([alpha_at(sched, int(k), 3) for k in ks[:1000]]) ** 3
    comparison = 1.0 / (ks[:1000] + sched.offset) ** 2
    assert np.all(np.cumsum(fail) <= np.cumsum(comparison) + 1e-12)


def test_alpha_rejects_negative_iteration():
    with pytest.raises(ValueError):
        alpha_at(FixedAlpha(0.5), -1, 2)


def test_alpha_schedule_validation():
    with pytest.raises(ConfigError):
        FixedAlpha(1.0)
    with pytest.raises(ConfigError):
        SummableToOneAlpha(offset=1)


def test_scalar_representation_examples():
    assert scalar_representation([3.0, 5.0]) == 5.0
    assert scalar_representation([7.0]) == 7.0
    # Both objectives of the first analytic benchmark at (9, 9).
    assert scalar_representation([162.0, 32.0]) == 162.0


def test_scalar_representation_monotone():
    rng = np.random.default_rng(0)
    for _ in range(100):
        v = rng.normal(size=4)
        w = v + rng.uniform(0, 1, size=4)
        assert scalar_representation(v) <= scalar_representation(w)


def test_as_decision_vector_validation():
    np.testing.assert_array_equal(as_decision_vector([1.0, 2.0], 2), [1.0, 2.0])
    with pytest.raises(DimensionMismatchError):
        as_decision_vector([1.0, 2.0], 3)
    with pytest.raises(DimensionMismatchError):
        as_decision_vector([[1.0]])
    with pytest.raises(ValueError):
        as_decision_vector([np.nan, 1.0])


def test_objective_sample_validation():
    good = ObjectiveSample(values=[1.0, 2.0], gradients=[[1.0, 0.0], [0.0, 1.0]],
                           delta=0.5, sample_sizes=[3, 4], cost=7)
    assert good.q == 2 and good.n == 2
    with pytest.raises(ValueError):
        ObjectiveSample(values=[1.0], gradients=[[1.0, 0.0], [0.0, 1.0]],
                        delta=0.5, sample_sizes=[1], cost=0)
    with pytest.raises(ValueError):
        ObjectiveSample(values=[np.inf], gradients=[[1.0]], delta=0.5,
                        sample_sizes=[1], cost=0)
    with pytest.raises(ValueError):
        ObjectiveSample(values=[1.0], gradients=[[1.0, 0.0]], delta=-1.0,
                        sample_sizes=[1], cost=0)
    with pytest.raises(ValueError):
        ObjectiveSample(values=[1.0], gradients=[[1.0, 0.0]], delta=1.0,
                        sample_sizes=[1], cost=0,
                        hessians=[[[0.0, 1.0], [0.5, 0.0]]])


def test_rng_stream_reproducible_and_independent():
    a = RngStream(42, 0).generator().random(8)
    b = RngStream(42, 0).generator().random(8)
    c = RngStream(42, 1).generator().random(8)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert RngStream(42, 0).substream(3) != RngStream(42, 0).substream(4)


def test_solver_config_gamma_consistency():
    SolverConfig(gamma1=0.25, gamma2=4.0)
    with pytest.raises(ConfigError):
        SolverConfig(gamma1=0.5, gamma2=3.0)


def test_solver_config_field_validation():
    with pytest.raises(ConfigError):
        SolverConfig(delta0=2.0, delta_max=1.0)
    with pytest.raises(ConfigError):
        SolverConfig(eta1=0.0)
    with pytest.raises(ConfigError):
        SolverConfig(theta=-1.0)
    with pytest.raises(ConfigError):
        SolverConfig(k_max=0)
    with pytest.raises(ConfigError):
        SolverConfig(refine_steps=6)


def test_parse_kv_text():
    text = "a = 1\n# comment\n\nb=two # trailing\n"
    assert parse_kv_text(text) == {"a": "1", "b": "two"}
    with pytest.raises(ConfigError):
        parse_kv_text("no equals sign")
    with pytest.raises(ConfigError):
        parse_kv_text("a = 1\na = 2")


def test_solver_config_round_trip():
    cfg = SolverConfig(delta0=0.3, delta_max=7.0, gamma1=0.25, gamma2=4.0,
                       eta1=0.2, theta=0.4, k_max=33,
                       alpha_schedule=SummableToOneAlpha(offset=5),
                       hessian_mode=HessianMode.SUBSAMPLED,
                       hessian_combine=HessianCombine.UNIFORM,
                       refine_steps=2, exact_metrics=False, seed=9)
    assert solver_config_from_mapping(solver_config_to_mapping(cfg)) == cfg


def test_solver_config_mapping_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        solver_config_from_mapping({"delta_zero": "1.0"})
    with pytest.raises(ConfigError):
        solver_config_from_mapping({"alpha_value": "0.5"})
    with pytest.raises(ConfigError):
        solver_config_from_mapping({"alpha_kind": "banana"})
    with pytest.raises(ConfigError):
        solver_config_from_mapping({"k_max": "many"})


def test_solver_config_mapping_parses_types():
    cfg = solver_config_from_mapping({
        "delta0": "0.5", "k_max": "12", "alpha_kind": "fixed",
        "alpha_value": "0.9", "hessian_mode": "subsampled",
        "exact_metrics": "false", "seed": "4"})
    assert cfg.delta0 == 0.5
    assert cfg.k_max == 12
    assert cfg.alpha_schedule == FixedAlpha(0.9)
    assert cfg.hessian_mode is HessianMode.SUBSAMPLED
    assert cfg.exact_metrics is False
    assert cfg.seed == 4
