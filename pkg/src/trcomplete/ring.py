"""Tensor ring chains built from order-3 cores.

Core axis order is [left bond, physical, right bond]:

        physical
           |
    left --*-- right

A chain of n cores closes on itself: the right bond of core n-1 equals the
left bond of core 0, and adjacent bonds match along the chain. The rank
vector [R_0, ..., R_n] lists the bond left of core i at position i, with
R_0 = R_n by the ring condition. A chain whose boundary bond is 1 is a
tensor train: its entries are plain matrix products and the closing trace
is trivial.

Entry (i_0, ..., i_{n-1}) of the represented tensor is the trace of the
ordered product of the per-mode slices cores[0][:, i_0, :] x ... x
cores[n-1][:, i_{n-1}, :].
"""

from __future__ import annotations

import math

import numpy as np

from .tensors import validate_shape

__all__ = [
    "TRChain",
    "as_rank_vector",
    "left_unfold",
    "right_unfold",
    "connect_product",
    "subchain",
    "subchain_slice",
    "tr_entry",
    "tr_full",
    "cyclic_shift",
    "left_orthogonalize",
    "storage_params",
]


def as_rank_vector(ranks, order: int) -> tuple[int, ...]:
    """Normalize a scalar bond dimension or full rank vector to [R_0..R_n]."""
    if np.isscalar(ranks):
        r = int(ranks)
        if r < 1:
            raise ValueError(f"rank must be >= 1, got {r}")
        return (r,) * (order + 1)
    vec = tuple(int(r) for r in ranks)
    if len(vec) != order + 1:
        raise ValueError(
            f"rank vector must have {order + 1} entries for order {order}, got {len(vec)}"
        )
    if any(r < 1 for r in vec):
        raise ValueError(f"all ranks must be >= 1, got {vec}")
    if vec[0] != vec[-1]:
        raise ValueError(f"ring closure requires R_0 == R_n, got {vec[0]} and {vec[-1]}")
    return vec


class TRChain:
    """Ordered list of order-3 cores with matching bonds and a closed ring.

    Cores are copied on construction and marked read-only; use ``with_core``
    to swap one out.
    """

    def __init__(self, cores):
        cores = [np.array(c, dtype=np.float64, copy=True) for c in cores]
        if not cores:
            raise ValueError("chain needs at least one core")
        for i, c in enumerate(cores):
            if c.ndim != 3:
                raise ValueError(f"core {i} must be order 3, got order {c.ndim}")
            if min(c.shape) < 1:
                raise ValueError(f"core {i} has an empty axis: {c.shape}")
        for i, c in enumerate(cores):
            nxt = cores[(i + 1) % len(cores)]
            if c.shape[2] != nxt.shape[0]:
                raise ValueError(
                    f"bond mismatch between cores {i} and {(i + 1) % len(cores)}: "
                    f"{c.shape[2]} vs {nxt.shape[0]}"
                )
        for c in cores:
            c.setflags(write=False)
        self.cores = cores

    @classmethod
    def random(cls, dims, ranks, rng) -> "TRChain":
        """Chain with i.i.d. standard normal core entries."""
        dims = validate_shape(dims)
        vec = as_rank_vector(ranks, len(dims))
        return cls([rng.standard_normal((vec[i], d, vec[i + 1]))
                    for i, d in enumerate(dims)])

    def __len__(self) -> int:
        return len(self.cores)

    def __repr__(self) -> str:
        return f"TRChain(dims={self.dims}, ranks={self.ranks})"

    @property
    def order(self) -> int:
        return len(self.cores)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(c.shape[0] for c in self.cores) + (self.cores[-1].shape[2],)

    def with_core(self, k: int, core) -> "TRChain":
        """New chain with core ``k`` replaced (bonds revalidated)."""
        cores = list(self.cores)
        cores[k] = core
        return TRChain(cores)


def left_unfold(core) -> np.ndarray:
    """(left*physical) x right matrix, left bond index fastest along rows."""
    core = np.asarray(core)
    l, p, r = core.shape
    return core.reshape(l * p, r, order="F")


def right_unfold(core) -> np.ndarray:
    """left x (physical*right) matrix, physical index fastest along columns."""
    core = np.asarray(core)
    l, p, r = core.shape
    return core.reshape(l, p * r, order="F")


def connect_product(a, b) -> np.ndarray:
    """Merge two adjacent cores into one, combining their physical modes.

    The combined physical index runs with ``a``'s physical index fastest, so
    chaining products left to right linearizes the physical indices in the
    canonical order. For bond-1 boundary cores this reduces to a vectorized
    matrix product.
    """
    a, b = np.asarray(a), np.asarray(b)
    if a.shape[2] != b.shape[0]:
        raise ValueError(f"bond mismatch: {a.shape[2]} vs {b.shape[0]}")
    merged = left_unfold(a) @ right_unfold(b)
    return merged.reshape(a.shape[0], a.shape[1] * b.shape[1], b.shape[2], order="F")


def _cyclic_modes(order: int, k: int) -> list[int]:
    return [(k + t) % order for t in range(1, order)]


def subchain(chain: TRChain, k: int) -> np.ndarray:
    """Connect product of every core except ``k``, in cyclic order k+1, ..., k-1.

    The middle index enumerates the physical indices of the other modes with
    mode k+1 fastest; the result bonds are (bond right of core k, bond left
    of core k).
    """
    n = chain.order
    if n < 2:
        raise ValueError("subchain needs a chain of order >= 2")
    if not 0 <= k < n:
        raise ValueError(f"mode {k} out of range")
    modes = _cyclic_modes(n, k)
    out = chain.cores[modes[0]]
    for m in modes[1:]:
        out = connect_product(out, chain.cores[m])
    return out


def subchain_slice(chain: TRChain, k: int, j: int) -> np.ndarray:
    """Column ``j`` of subchain(chain, k) as a matrix, without materializing it.

    ``j`` is decoded over the cyclic mode order (mode k+1 fastest) and the
    selected per-core slices are multiplied left to right.
    """
    n = chain.order
    if n < 2:
        raise ValueError("subchain_slice needs a chain of order >= 2")
    modes = _cyclic_modes(n, k)
    dims = [chain.cores[m].shape[1] for m in modes]
    total = math.prod(dims)
    if not 0 <= j < total:
        raise ValueError(f"column {j} out of range for {total} columns")
    idx = np.unravel_index(j, dims, order="F")
    out = chain.cores[modes[0]][:, idx[0], :]
    for m, i in zip(modes[1:], idx[1:]):
        out = out @ chain.cores[m][:, i, :]
    return out


def tr_entry(chain: TRChain, idx) -> float:
    """Single tensor entry: trace of the ordered product of per-mode slices."""
    idx = tuple(int(i) for i in idx)
    dims = chain.dims
    if len(idx) != len(dims) or any(not 0 <= i < d for i, d in zip(idx, dims)):
        raise ValueError(f"index {idx} out of range for dims {dims}")
    out = chain.cores[0][:, idx[0], :]
    for core, i in zip(chain.cores[1:], idx[1:]):
        out = out @ core[:, i, :]
    return float(np.trace(out))


def tr_full(chain: TRChain) -> np.ndarray:
    """Materialize the full tensor represented by the chain.

    Accumulates the connect product of all cores into a single
    R_0 x (prod of dims) x R_n core, then closes the ring by tracing the
    bond pair; the traced vector is already in canonical linear order.
    """
    out = chain.cores[0]
    for core in chain.cores[1:]:
        out = connect_product(out, core)
    vec = np.trace(out, axis1=0, axis2=2)
    return vec.reshape(chain.dims, order="F")


def cyclic_shift(chain: TRChain, k: int) -> TRChain:
    """Rotate the chain so core ``k`` comes first; reconstruction commutes
    with the matching cyclic mode rotation of the full tensor."""
    n = chain.order
    if not 0 <= k < n:
        raise ValueError(f"mode {k} out of range")
    return TRChain(chain.cores[k:] + chain.cores[:k])


def left_orthogonalize(chain: TRChain) -> TRChain:
    """Sweep left to right making cores 0..n-2 left-orthonormal.

    Each core's left unfolding is replaced by the orthogonal factor of its
    thin QR decomposition and the triangular factor is absorbed into the
    next core, so the represented tensor is unchanged. Bonds may shrink to
    min(left*physical, right).
    """
    cores = [c.copy() for c in chain.cores]
    for i in range(len(cores) - 1):
        l, p, _ = cores[i].shape
        q, t = np.linalg.qr(left_unfold(cores[i]))
        k = q.shape[1]
        cores[i] = q.reshape(l, p, k, order="F")
        nxt = cores[i + 1]
        cores[i + 1] = (t @ right_unfold(nxt)).reshape(
            k, nxt.shape[1], nxt.shape[2], order="F")
    return TRChain(cores)


def storage_params(chain: TRChain, orthonormal: bool = False) -> int:
    """Number of parameters held by the chain.

    Raw count is the sum of core sizes. With ``orthonormal`` set, returns the
    free-parameter count R^2 * (sum of dims - n + 1) after the
    orthogonalization sweep; only defined for uniform-rank chains.
    """
    if not orthonormal:
        return int(sum(c.size for c in chain.cores))
    ranks = set(chain.ranks)
    if len(ranks) != 1:
        raise ValueError("orthonormal parameter count requires uniform ranks")
    r = ranks.pop()
    n = chain.order
    return int(r * r * (sum(chain.dims) - n + 1))
