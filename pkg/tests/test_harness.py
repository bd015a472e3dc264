"""Harness operations: metrics, masks, synthetic data, reshape planning,
and experiment execution."""

import numpy as np
import pytest

from trcomplete import (ExperimentSpec, ObservationMask, SolverConfig,
                        complete, recovery_error, recovery_error_unobserved,
                        reshape_plan, run_experiment, sample_mask,
                        synthetic_tr, tr_full)


def test_recovery_error_values():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((3, 4))
    assert recovery_error(x, x) == 0.0
    assert recovery_error(np.zeros_like(x), x) == pytest.approx(1.0, rel=1e-15)
    assert recovery_error(2 * x, x) == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(ValueError):
        recovery_error(x, np.zeros_like(x))


def test_recovery_error_unobserved_full_mask_is_nan():
    x = np.ones((2, 2))
    mask = sample_mask(x.shape, 1.0, 0)
    assert np.isnan(recovery_error_unobserved(x, x, mask))


def test_sample_mask_counts():
    assert sample_mask((4, 5), 1.0, 0).count == 20
    assert sample_mask((4, 5), 0.5, 0).count == 10
    assert sample_mask((6,), 0.25, 0).count == 2  # 1.5 rounds half up
    with pytest.raises(ValueError):
        sample_mask((4, 5), 0.0, 0)
    with pytest.raises(ValueError):
        sample_mask((4, 5), 1.2, 0)


def test_sample_mask_deterministic_per_seed():
    a = sample_mask((10, 10, 10), 0.3, 7)
    b = sample_mask((10, 10, 10), 0.3, 7)
    c = sample_mask((10, 10, 10), 0.3, 8)
    assert np.array_equal(a.linear, b.linear)
    assert not np.array_equal(a.linear, c.linear)


def test_synthetic_tr_degenerate_and_reproducible():
    x, chain = synthetic_tr((1, 1, 1), 1, seed=0)
    assert x.shape == (1, 1, 1)
    assert chain.ranks == (1, 1, 1, 1)

    a, ca = synthetic_tr((20, 20, 20, 20), 8, seed=3)
    b, cb = synthetic_tr((20, 20, 20, 20), 8, seed=3)
    assert a.shape == (20, 20, 20, 20)
    assert np.array_equal(a, b)
    assert all(np.array_equal(x0, x1) for x0, x1 in zip(ca.cores, cb.cores))


def test_synthetic_tr_has_the_configured_rank():
    x, _ = synthetic_tr((6, 6, 6), 2, seed=1)
    mask = sample_mask(x.shape, 1.0, 0)
    xhat, _, _ = complete(x, mask, SolverConfig(ranks=2, seed=2))
    assert recovery_error(xhat, x) <= 1e-8


def test_reshape_plan_published_layouts():
    assert reshape_plan((600, 600, 3), 7) == (6, 10, 10, 6, 10, 10, 3)
    assert reshape_plan((100, 260, 3, 85), 11) == (5, 2, 5, 2, 13, 2, 5, 2, 3, 5, 17)


def test_reshape_plan_trivial_and_general():
    assert reshape_plan((4, 9, 5), 3) == (4, 9, 5)
    assert reshape_plan((600,), 3) == (6, 10, 10)
    assert reshape_plan((64,), 3) == (4, 4, 4)
    plan = reshape_plan((48, 42), 5)
    assert np.prod(plan[:3]) * np.prod(plan[3:]) in (48 * 42,)
    assert reshape_plan((48, 42), 5) == plan  # deterministic


def test_reshape_plan_preserves_products():
    rng = np.random.default_rng(1)
    for _ in range(20):
        dims = tuple(int(d) for d in rng.integers(2, 120, size=3))
        target = len(dims) + int(rng.integers(0, 3))
        try:
            plan = reshape_plan(dims, target)
        except ValueError:
            continue  # not enough prime factors to split
        assert len(plan) == target
        assert np.prod(plan, dtype=np.int64) == np.prod(dims, dtype=np.int64)


def test_reshape_plan_errors():
    with pytest.raises(ValueError):
        reshape_plan((7, 5), 4)  # primes cannot split
    with pytest.raises(ValueError):
        reshape_plan((4, 4), 1)  # merging is out of scope


def test_experiment_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec.from_dict({"source": {}, "ratio": 0.5, "rank": 2})
    with pytest.raises(ValueError):
        ExperimentSpec.from_dict({
            "source": {"synthetic": {"dims": [4, 4], "rank": 1, "seed": 0}},
            "ratio": 0.5, "rank": 2, "bogus": 1})
    spec = ExperimentSpec.from_dict({
        "source": {"synthetic": {"dims": [4, 4, 4], "rank": 2, "seed": 0}},
        "ratio": 0.5, "rank": 2})
    assert spec.ranks == 2


def test_run_experiment_full_observation_sanity():
    spec = ExperimentSpec(
        source={"synthetic": {"dims": [6, 6, 6], "rank": 2, "seed": 5}},
        ratio=1.0, ranks=2, repeats=1, seed=9)
    record = run_experiment(spec)
    assert record.runs[0]["re"] <= 1e-8
    assert record.runs[0]["error"] is None


def test_run_experiment_aggregates_recomputable():
    spec = ExperimentSpec(
        source={"synthetic": {"dims": [5, 5, 5], "rank": 2, "seed": 2}},
        ratio=0.9, ranks=2, repeats=5, seed=4, maxiter=60)
    record = run_experiment(spec)
    res = [r["re"] for r in record.runs]
    agg = record.aggregates[0]
    assert agg["n_ok"] == 5
    assert agg["re_mean"] == pytest.approx(float(np.mean(res)), rel=0, abs=0)
    assert agg["re_std"] == pytest.approx(float(np.std(res)), rel=0, abs=0)
    assert agg["re_std"] >= 0.0


def test_run_experiment_is_reproducible():
    spec_dict = {
        "source": {"synthetic": {"dims": [5, 5, 5], "rank": 2, "seed": 2}},
        "ratio": 0.8, "rank": 2, "repeats": 2, "seed": 123, "maxiter": 40}
    a = run_experiment(ExperimentSpec.from_dict(spec_dict))
    b = run_experiment(ExperimentSpec.from_dict(spec_dict))
    for ra, rb in zip(a.runs, b.runs):
        assert ra["re"] == rb["re"]
        assert ra["mask_seed"] == rb["mask_seed"]


def test_run_experiment_records_per_repeat_failures():
    spec = ExperimentSpec(
        source={"synthetic": {"dims": [4, 4, 4], "rank": 1, "seed": 1}},
        ratio=0.9, repeats=2, seed=0, sweep={"rank": [0, 1]})
    record = run_experiment(spec)
    failed = [r for r in record.runs if r["rank"] == 0]
    assert all(r["error"] is not None for r in failed)
    assert record.aggregates[0]["re_mean"] is None
    assert record.aggregates[1]["re_mean"] is not None


def test_observed_residual_bounded_by_error_numerator():
    rng = np.random.default_rng(6)
    x, _ = synthetic_tr((5, 5, 5), 2, seed=8)
    mask = sample_mask(x.shape, 0.8, 3)
    xhat, _, _ = complete(x, mask, SolverConfig(ranks=2, seed=1, maxiter=80))
    observed = np.linalg.norm(mask.to_dense() * (xhat - x))
    assert observed <= np.linalg.norm(xhat - x) + 1e-12
    gen = recovery_error_unobserved(xhat, x, mask)
    assert np.isfinite(gen)
