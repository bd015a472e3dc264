"""Solver contracts: design-row construction, core updates, full completion."""

import numpy as np
import pytest

from trcomplete import (ObservationMask, SolverConfig, TRChain, build_rows,
                        complete, recovery_error, sample_mask, tr_full,
                        tt_complete, update_core, vectorize)

from oracles import masked_residual


def test_trace_as_inner_product_identity():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((3, 2))
    b = rng.standard_normal((2, 3))
    got = b.T.ravel(order="F") @ a.ravel(order="F")
    assert got == pytest.approx(np.trace(a @ b), rel=1e-13)


def test_build_rows_scalar_ring_recovers_factor():
    rng = np.random.default_rng(1)
    chain = TRChain([rng.standard_normal((1, 4, 1)), rng.standard_normal((1, 5, 1))])
    x = tr_full(chain)
    mask = sample_mask(x.shape, 1.0, 0)
    for row in range(4):
        design, rhs = build_rows(chain, 0, mask, x, row)
        assert design.shape == (5, 1)
        assert np.allclose(design.ravel(), chain.cores[1][0, :, 0], rtol=1e-14)
        z = np.linalg.lstsq(design, rhs, rcond=None)[0]
        assert z[0] == pytest.approx(chain.cores[0][0, row, 0], rel=1e-12)


def test_build_rows_consistent_with_true_chain():
    rng = np.random.default_rng(2)
    chain = TRChain.random((4, 3, 5), 2, rng)
    x = tr_full(chain)
    mask = sample_mask(x.shape, 0.55, 3)
    scale = np.abs(x).max()
    for k in range(3):
        rk, rk1 = chain.cores[k].shape[0], chain.cores[k].shape[2]
        for row in range(chain.dims[k]):
            design, rhs = build_rows(chain, k, mask, x, row)
            assert design.shape[1] == rk * rk1
            z = chain.cores[k][:, row, :].ravel(order="F")
            assert np.allclose(design @ z, rhs, rtol=0, atol=1e-12 * scale)


def test_build_rows_empty_row_gives_empty_system():
    rng = np.random.default_rng(3)
    chain = TRChain.random((3, 4), 2, rng)
    x = tr_full(chain)
    mask = ObservationMask(x.shape, [1, 2, 5])  # row 0 of mode 0 unobserved
    design, rhs = build_rows(chain, 0, mask, x, 0)
    assert design.shape[0] == 0 and rhs.size == 0


def test_update_core_fixed_point_on_exact_data():
    rng = np.random.default_rng(4)
    chain = TRChain.random((4, 3, 4), 2, rng)
    x = tr_full(chain)
    mask = sample_mask(x.shape, 0.7, 1)
    cfg = SolverConfig(ranks=2)
    for k in range(3):
        updated = update_core(chain, k, mask, x, cfg)
        post = masked_residual(tr_full(updated), x, mask.to_dense())
        assert post <= 1e-12 * np.linalg.norm(x)
        assert np.allclose(tr_full(updated), x, rtol=1e-8, atol=1e-10)


def test_update_core_single_slice_matches_global_pinv():
    rng = np.random.default_rng(5)
    chain = TRChain.random((1, 4, 3), 2, rng)
    x = rng.standard_normal((1, 4, 3))
    mask = sample_mask(x.shape, 0.8, 2)
    design, rhs = build_rows(chain, 0, mask, x, 0)
    want = (np.linalg.pinv(design) @ rhs).reshape(2, 2, order="F")
    updated = update_core(chain, 0, mask, x, SolverConfig(ranks=2))
    assert np.allclose(updated.cores[0][:, 0, :], want, rtol=1e-9, atol=1e-11)


def test_update_core_never_increases_observed_residual():
    rng = np.random.default_rng(6)
    cfg = SolverConfig(ranks=2)
    for _ in range(20):
        n = int(rng.integers(3, 5))
        dims = tuple(int(d) for d in rng.integers(3, 6, size=n))
        chain = TRChain.random(dims, 2, rng)
        x = rng.standard_normal(dims)
        mask = sample_mask(dims, float(rng.uniform(0.3, 0.9)), int(rng.integers(1000)))
        k = int(rng.integers(n))
        dense = mask.to_dense()
        pre = masked_residual(tr_full(chain), x, dense)
        post = masked_residual(tr_full(update_core(chain, k, mask, x, cfg)), x, dense)
        assert post <= pre + 1e-12


def test_update_core_keeps_unobserved_slices():
    rng = np.random.default_rng(7)
    chain = TRChain.random((4, 3, 3), 2, rng)
    x = rng.standard_normal((4, 3, 3))
    multi = np.vstack(np.unravel_index(np.arange(x.size), x.shape, order="F"))
    keep = np.flatnonzero(multi[0] != 2)  # starve slice 2 of mode 0
    mask = ObservationMask(x.shape, keep[::2])
    updated = update_core(chain, 0, mask, x, SolverConfig(ranks=2))
    assert np.array_equal(updated.cores[0][:, 2, :], chain.cores[0][:, 2, :])
    assert not np.array_equal(updated.cores[0][:, 0, :], chain.cores[0][:, 0, :])


def test_update_core_slice_problems_are_independent():
    rng = np.random.default_rng(8)
    chain = TRChain.random((5, 4, 3), 2, rng)
    x = rng.standard_normal((5, 4, 3))
    mask = sample_mask(x.shape, 0.6, 4)
    cfg = SolverConfig(ranks=2)
    updated = update_core(chain, 1, mask, x, cfg)
    for row in range(4):
        design, rhs = build_rows(chain, 1, mask, x, row)
        if design.shape[0] == 0:
            want = chain.cores[1][:, row, :]
        else:
            want = np.linalg.lstsq(design, rhs, rcond=None)[0].reshape(2, 2, order="F")
        assert np.allclose(updated.cores[1][:, row, :], want, rtol=1e-12, atol=1e-13)


def test_complete_fully_observed_exact_ring():
    rng = np.random.default_rng(9)
    x = tr_full(TRChain.random((6, 6, 6), 2, rng))
    mask = sample_mask(x.shape, 1.0, 0)
    xhat, chain, report = complete(x, mask, SolverConfig(ranks=2, seed=1))
    assert recovery_error(xhat, x) <= 1e-8
    assert report.converged
    assert report.param_count == sum(c.size for c in chain.cores)


def test_complete_requires_observations():
    x = np.zeros((3, 3, 3))
    with pytest.raises(ValueError):
        complete(x, ObservationMask(x.shape, []), SolverConfig(ranks=2))


def test_complete_rejects_shape_mismatch_and_nonfinite():
    x = np.ones((3, 3))
    with pytest.raises(ValueError):
        complete(x, ObservationMask((3, 4), [0]), SolverConfig(ranks=2))
    bad = x.copy()
    bad[0, 0] = np.inf
    with pytest.raises(ValueError):
        complete(bad, ObservationMask((3, 3), [0, 1]), SolverConfig(ranks=2))


def test_complete_report_histories_consistent():
    rng = np.random.default_rng(10)
    x = tr_full(TRChain.random((5, 5, 5), 2, rng))
    mask = sample_mask(x.shape, 0.9, 2)
    _, _, report = complete(x, mask, SolverConfig(ranks=2, seed=3, maxiter=40))
    assert len(report.un_delta_history) == report.sweeps_run
    assert len(report.observed_residual_history) == 3 * report.sweeps_run
    if report.converged:
        assert report.un_delta_history[-1] <= 1e-10


def test_complete_strategies_agree():
    rng = np.random.default_rng(11)
    x = tr_full(TRChain.random((5, 4, 6), 2, rng))
    mask = sample_mask(x.shape, 0.8, 5)
    out = {}
    for strategy in ("materialize", "perentry"):
        cfg = SolverConfig(ranks=2, seed=7, maxiter=25, strategy=strategy)
        out[strategy], _, _ = complete(x, mask, cfg)
    assert np.allclose(out["materialize"], out["perentry"], rtol=1e-9, atol=1e-10)


def test_tt_complete_recovers_train_data():
    rng = np.random.default_rng(12)
    truth = TRChain.random((6, 6, 6, 6), [1, 2, 2, 2, 1], rng)
    x = tr_full(truth)
    mask = sample_mask(x.shape, 0.8, 3)
    xhat, chain, _ = tt_complete(x, mask, SolverConfig(ranks=[1, 2, 2, 2, 1], seed=5))
    assert chain.ranks == (1, 2, 2, 2, 1)
    assert recovery_error(xhat, x) <= 1e-6


def test_tt_complete_rank_one_separable():
    rng = np.random.default_rng(13)
    u, v, w = (rng.standard_normal(d) + 2.0 for d in (5, 4, 6))
    x = np.einsum("i,j,k->ijk", u, v, w)
    mask = sample_mask(x.shape, 0.7, 1)
    xhat, _, _ = tt_complete(x, mask, SolverConfig(ranks=[1, 1, 1, 1], seed=2))
    assert recovery_error(xhat, x) <= 1e-8


def test_tt_complete_rejects_non_unit_boundary():
    x = np.ones((3, 3, 3))
    mask = sample_mask(x.shape, 1.0, 0)
    with pytest.raises(ValueError):
        tt_complete(x, mask, SolverConfig(ranks=[2, 2, 2, 2]))


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(ranks=2, tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(ranks=2, maxiter=0)
    with pytest.raises(ValueError):
        SolverConfig(ranks=2, strategy="eager")


def test_ls_work_grows_with_fourth_power_of_rank():
    # per mode the design keeps one row per observed entry and R^2 columns,
    # so the dominant solve work (rows * cols^2) scales as P * R^4
    rng = np.random.default_rng(15)
    x = rng.standard_normal((6, 6, 6))
    mask = sample_mask(x.shape, 0.5, 1)
    work = {}
    for rank in (2, 4):
        chain = TRChain.random(x.shape, rank, rng)
        total = 0
        for k in range(3):
            for row in range(6):
                design, _ = build_rows(chain, k, mask, x, row)
                total += design.shape[0] * design.shape[1] ** 2
        work[rank] = total
    assert work[4] == 16 * work[2]


def test_objective_equals_permuted_objective():
    # swapping to the rotated formulation leaves the misfit unchanged
    from trcomplete import cyclic_shift, hadamard, tensor_permute

    rng = np.random.default_rng(14)
    for _ in range(10):
        chain = TRChain.random((3, 4, 3), 2, rng)
        x = rng.standard_normal((3, 4, 3))
        dense = (rng.random((3, 4, 3)) < 0.6).astype(float)
        k = int(rng.integers(3))
        cand = rng.standard_normal(chain.cores[k].shape)
        trial = chain.with_core(k, cand)
        direct = np.linalg.norm(hadamard(dense, tr_full(trial) - x))
        rotated = np.linalg.norm(hadamard(
            tensor_permute(dense, k),
            tr_full(cyclic_shift(trial, k)) - tensor_permute(x, k)))
        assert rotated == pytest.approx(direct, rel=1e-12)
