"""Chain initialization by sequential truncated SVD with noise padding.

The zero-filled data is peeled into cores left to right: at each step the
current matrix is factored, the orthogonal factor becomes the exact sub-block
of the next core, and the rest is carried forward. Each core is then extended
to its target bond dimensions by filling the margins with small Gaussian
noise. With zero noise the result is a plain sequential-SVD train whose
boundary bonds carry a single nonzero path, so the ring trace collapses to
the train value. The nonzero margins let the alternating solver start from
full bond dimension instead of being pinned at boundary rank 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import truncated_svd
from .ring import TRChain, as_rank_vector
from .tensors import ensure_tensor

__all__ = ["TraConfig", "tra_init"]


@dataclass(frozen=True)
class TraConfig:
    """Initializer settings: target bond dimension(s), noise level, RNG seed.

    ``rank`` may be a scalar bond dimension or a full rank vector; a vector
    with unit boundary ranks yields a pure tensor-train initialization.
    """

    rank: object
    sigma: float = 1e-2
    seed: int = 0


def _padded_core(block, shape, rng, sigma) -> np.ndarray:
    core = rng.normal(0.0, sigma, size=shape)
    core[: block.shape[0], :, : block.shape[2]] = block
    return core


def tra_init(x, cfg: TraConfig) -> TRChain:
    """Build an initial chain for ``x`` (missing entries already zero-filled).

    Deterministic given the input and seed. Truncation at step i keeps
    min(target bond, carried rows, remaining columns) singular triples; the
    exact SVD sub-blocks survive verbatim inside the padded cores.
    """
    x = ensure_tensor(x)
    n = x.ndim
    if n < 2:
        raise ValueError(f"initializer needs order >= 2, got {n}")
    if cfg.sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {cfg.sigma}")
    ranks = as_rank_vector(cfg.rank, n)
    rng = np.random.default_rng(cfg.seed)
    dims = x.shape

    cores = []
    t_prev = 1
    mat = x.reshape(1, -1, order="F")
    for i in range(n - 1):
        mat = mat.reshape(t_prev * dims[i], -1, order="F")
        fac = truncated_svd(mat, ranks[i + 1])
        block = fac.u.reshape(t_prev, dims[i], fac.kept, order="F")
        cores.append(_padded_core(block, (ranks[i], dims[i], ranks[i + 1]), rng, cfg.sigma))
        mat = fac.s[:, None] * fac.v.T
        t_prev = fac.kept
    block = mat.reshape(t_prev, dims[-1], 1, order="F")
    cores.append(_padded_core(block, (ranks[-2], dims[-1], ranks[-1]), rng, cfg.sigma))
    return TRChain(cores)
