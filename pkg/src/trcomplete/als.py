"""Alternating least squares over the ring cores of a partially observed tensor.

Each sweep updates the cores in order 0..n-1, reusing cores already updated
within the sweep. Updating core k fixes all others and minimizes the observed
misfit; because each physical slice of the core touches a disjoint set of
observed entries, the update splits into I_k independent least-squares
problems. The design row for an observed entry is the flattened transpose of
the corresponding column slice of the merged complement chain, which turns
the closing trace into an inner product with the unknown slice.

Sweeping stops when the relative change of the last core drops below the
tolerance, or after ``maxiter`` sweeps.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .kernels import lstsq_minnorm
from .ring import TRChain, as_rank_vector, subchain, storage_params
from .tensors import ObservationMask, ensure_tensor, vectorize
from .tra import TraConfig, tra_init

__all__ = [
    "SolverConfig",
    "SolverReport",
    "build_rows",
    "update_core",
    "complete",
    "tt_complete",
]

STRATEGIES = ("auto", "materialize", "perentry")


@dataclass(frozen=True)
class SolverConfig:
    """Completion settings.

    ranks: scalar bond dimension or full rank vector [R_0..R_n]
    tol: stop when the last core's relative change per sweep drops below this
    maxiter: sweep cap
    sigma, seed: initializer noise level and RNG seed
    ridge: optional Tikhonov term for the per-slice least squares
    strategy: complement-chain handling per core update; ``materialize``
        builds it once, ``perentry`` multiplies per-core slices per observed
        entry, ``auto`` materializes while the element budget allows
    """

    ranks: object
    tol: float = 1e-10
    maxiter: int = 300
    sigma: float = 1e-2
    seed: int = 0
    ridge: float = 0.0
    strategy: str = "auto"
    materialize_budget: int = 50_000_000

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.maxiter < 1:
            raise ValueError(f"maxiter must be >= 1, got {self.maxiter}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")

    def tra_config(self, order: int) -> TraConfig:
        return TraConfig(rank=as_rank_vector(self.ranks, order),
                         sigma=self.sigma, seed=self.seed)


@dataclass
class SolverReport:
    """Per-run diagnostics.

    ``un_delta_history`` holds one relative last-core change per sweep;
    ``observed_residual_history`` one observed-entry residual norm per core
    update (order modes, so n entries per sweep).
    """

    sweeps_run: int = 0
    un_delta_history: list = field(default_factory=list)
    observed_residual_history: list = field(default_factory=list)
    converged: bool = False
    wall_time: float = 0.0
    param_count: int = 0

    def to_dict(self) -> dict:
        return {
            "sweeps_run": self.sweeps_run,
            "converged": self.converged,
            "wall_time_s": self.wall_time,
            "param_count": self.param_count,
            "un_delta_history": [float(v) for v in self.un_delta_history],
            "observed_residual_history": [float(v) for v in self.observed_residual_history],
        }


class _ModeSystem:
    """Observed entries of one mode's unfolding, grouped by row.

    Rows follow the mode's own index; columns linearize the remaining modes
    in cyclic order (mode k+1 fastest), matching the complement chain's
    middle index. Entries are sorted by row so each row's slice is
    contiguous.
    """

    def __init__(self, mask: ObservationMask, x, k: int):
        dims = mask.shape
        n = len(dims)
        multi = mask.multi_indices()
        rows = multi[k]
        cyclic = [(k + t) % n for t in range(1, n)]
        cols = np.zeros(mask.count, dtype=np.intp)
        stride = 1
        for m in cyclic:
            cols += multi[m] * stride
            stride *= dims[m]
        vals = mask.values(x)
        order = np.argsort(rows, kind="stable")
        self.k = k
        self.cyclic = cyclic
        self.cols = cols[order]
        self.vals = vals[order]
        self.cyc_multi = multi[cyclic][:, order]
        self.bounds = np.searchsorted(rows[order], np.arange(dims[k] + 1))

    def row_slice(self, i: int) -> slice:
        return slice(int(self.bounds[i]), int(self.bounds[i + 1]))


def _entry_slices(chain: TRChain, sys: _ModeSystem, sel=slice(None)) -> np.ndarray:
    """Stack of complement-chain column slices for the selected entries."""
    modes = sys.cyclic
    idx = sys.cyc_multi[:, sel]
    out = chain.cores[modes[0]][:, idx[0], :].transpose(1, 0, 2)
    for t in range(1, len(modes)):
        out = out @ chain.cores[modes[t]][:, idx[t], :].transpose(1, 0, 2)
    return out


def _design_from_slices(slices: np.ndarray) -> np.ndarray:
    # slices: (count, right bond of core k, left bond of core k); row m of the
    # design is vec(slice_m^T) in canonical order, matching vec of the unknown.
    count, l, r = slices.shape
    return slices.reshape(count, l * r)


def _design_matrix(chain: TRChain, k: int, sys: _ModeSystem, cfg: SolverConfig) -> np.ndarray:
    n = chain.order
    rk = chain.cores[k].shape[0]
    rk1 = chain.cores[(k + 1) % n].shape[0]
    cols_total = math.prod(chain.dims) // chain.dims[k]
    materialize = cfg.strategy == "materialize" or (
        cfg.strategy == "auto" and cols_total * rk * rk1 <= cfg.materialize_budget
    )
    if materialize:
        b = subchain(chain, k)
        return _design_from_slices(b[:, sys.cols, :].transpose(1, 0, 2))
    return _design_from_slices(_entry_slices(chain, sys))


def _update_mode(chain: TRChain, k: int, sys: _ModeSystem, cfg: SolverConfig):
    """One core update; returns the new chain and the observed residual norm."""
    n = chain.order
    rk = chain.cores[k].shape[0]
    rk1 = chain.cores[(k + 1) % n].shape[0]
    design = _design_matrix(chain, k, sys, cfg)
    core = chain.cores[k].copy()
    res_sq = 0.0
    for i in range(chain.dims[k]):
        span = sys.row_slice(i)
        if span.start == span.stop:
            continue  # no observations: keep the current slice
        d = design[span]
        b = sys.vals[span]
        z = lstsq_minnorm(d, b, cfg.ridge)
        core[:, i, :] = z.reshape(rk, rk1, order="F")
        r = d @ z - b
        res_sq += float(r @ r)
    return chain.with_core(k, core), math.sqrt(res_sq)


def build_rows(chain: TRChain, k: int, mask: ObservationMask, x, row: int):
    """Design matrix and right-hand side for one slice of core ``k``.

    One design row per observed entry whose mode-k index equals ``row``; the
    unknown is the flattened core slice (left bond fastest). The design has
    R_k * R_{k+1} columns.
    """
    x = ensure_tensor(x)
    if not 0 <= row < chain.dims[k]:
        raise ValueError(f"row {row} out of range for mode {k}")
    sys = _ModeSystem(mask, x, k)
    span = sys.row_slice(row)
    design = _design_from_slices(_entry_slices(chain, sys, span))
    return design, sys.vals[span].copy()


def update_core(chain: TRChain, k: int, mask: ObservationMask, x,
                cfg: SolverConfig) -> TRChain:
    """Replace core ``k`` by its exact least-squares update, others fixed."""
    x = ensure_tensor(x)
    if not 0 <= k < chain.order:
        raise ValueError(f"mode {k} out of range")
    new_chain, _ = _update_mode(chain, k, _ModeSystem(mask, x, k), cfg)
    return new_chain


def _validate_problem(x, mask: ObservationMask):
    x = ensure_tensor(x)
    if mask.shape != x.shape:
        raise ValueError(f"mask shape {mask.shape} does not match data shape {x.shape}")
    if mask.count == 0:
        raise ValueError("mask has no observed entries")
    if not np.all(np.isfinite(mask.values(x))):
        raise ValueError("observed entries contain non-finite values")
    return x


def complete(x, mask: ObservationMask, cfg: SolverConfig):
    """Complete ``x`` from its observed entries under the ring model.

    Unobserved entries of ``x`` are ignored. Returns the reconstructed
    tensor, the final chain, and a report.
    """
    x = _validate_problem(x, mask)
    n = x.ndim
    start = time.perf_counter()

    xz = mask.zero_fill(x)
    chain = tra_init(xz, cfg.tra_config(n))
    systems = [_ModeSystem(mask, xz, k) for k in range(n)]

    report = SolverReport()
    for _ in range(cfg.maxiter):
        prev_last = chain.cores[-1]
        for k in range(n):
            chain, res = _update_mode(chain, k, systems[k], cfg)
            report.observed_residual_history.append(res)
        report.sweeps_run += 1
        denom = float(np.linalg.norm(prev_last))
        num = float(np.linalg.norm(chain.cores[-1] - prev_last))
        delta = num / denom if denom > 0 else (0.0 if num == 0 else math.inf)
        report.un_delta_history.append(delta)
        if delta <= cfg.tol:
            report.converged = True
            break

    from .ring import tr_full

    xhat = tr_full(chain)
    report.wall_time = time.perf_counter() - start
    report.param_count = storage_params(chain)
    return xhat, chain, report


def tt_complete(x, mask: ObservationMask, cfg: SolverConfig):
    """Completion restricted to the tensor-train submodel (boundary bond 1).

    A scalar rank R is expanded to the vector [1, R, ..., R, 1]; an explicit
    rank vector must have unit boundary ranks. Same machinery as ``complete``.
    """
    x = ensure_tensor(x)
    n = x.ndim
    if np.isscalar(cfg.ranks):
        vec = (1,) + (int(cfg.ranks),) * (n - 1) + (1,)
    else:
        vec = as_rank_vector(cfg.ranks, n)
        if vec[0] != 1 or vec[-1] != 1:
            raise ValueError(f"tensor-train ranks need unit boundaries, got {vec}")
    return complete(x, mask, replace(cfg, ranks=vec))
