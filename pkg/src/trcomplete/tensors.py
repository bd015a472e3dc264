"""Dense tensor primitives over a fixed first-index-fastest linearization.

Every tensor handled by this package is a float64 numpy array. Its canonical
linear order is Fortran order: entry (i_0, ..., i_{n-1}) sits at position

    i_0 + i_1*I_0 + i_2*I_0*I_1 + ... + i_{n-1}*I_0*...*I_{n-2}

of the flattened vector. All unfoldings and matricizations below are index
maps over this single layout; in particular the canonical matricization is a
pure reshape that never moves data. Modes are 0-based throughout.

Arrays are treated as read-only once handed to these functions; every
operation is pure and safe to call concurrently.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "validate_shape",
    "ensure_tensor",
    "vectorize",
    "reshape",
    "mode_unfold",
    "canonical_matricize",
    "tensor_permute",
    "hadamard",
    "frobenius_norm",
    "multi_indices",
    "ObservationMask",
]


def validate_shape(dims) -> tuple[int, ...]:
    """Normalize ``dims`` to a tuple of positive ints, rejecting bad shapes."""
    dims = tuple(int(d) for d in np.atleast_1d(np.asarray(dims, dtype=object)))
    if len(dims) == 0:
        raise ValueError("tensor order must be at least 1")
    if any(d < 1 for d in dims):
        raise ValueError(f"all dimensions must be >= 1, got {dims}")
    if math.prod(dims) > np.iinfo(np.intp).max:
        raise ValueError(f"element count of shape {dims} exceeds addressable range")
    return dims


def ensure_tensor(t) -> np.ndarray:
    """Coerce ``t`` to a float64 array of order >= 1."""
    arr = np.asarray(t, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    validate_shape(arr.shape)
    return arr


def vectorize(t) -> np.ndarray:
    """Flatten ``t`` into its canonical (first-index-fastest) linear order."""
    return ensure_tensor(t).reshape(-1, order="F")


def reshape(t, new_shape) -> np.ndarray:
    """Reshape ``t`` without changing its canonical linear order."""
    arr = ensure_tensor(t)
    new_shape = validate_shape(new_shape)
    if math.prod(new_shape) != arr.size:
        raise ValueError(
            f"cannot reshape {arr.size} elements into shape {new_shape}"
        )
    return arr.reshape(new_shape, order="F")


def mode_unfold(t, mode: int) -> np.ndarray:
    """Matrix with ``mode`` as rows and the remaining modes, in original
    order with the earliest one fastest, as columns."""
    arr = ensure_tensor(t)
    if not 0 <= mode < arr.ndim:
        raise ValueError(f"mode {mode} out of range for order-{arr.ndim} tensor")
    return np.moveaxis(arr, mode, 0).reshape(arr.shape[mode], -1, order="F")


def canonical_matricize(t, split: int) -> np.ndarray:
    """Split the first ``split`` modes against the rest into a matrix.

    A pure reshape under the fixed linearization: the row index linearizes
    modes 0..split-1 and the column index the remaining modes.
    """
    arr = ensure_tensor(t)
    if not 1 <= split <= arr.ndim - 1:
        raise ValueError(f"split {split} out of range for order-{arr.ndim} tensor")
    rows = math.prod(arr.shape[:split])
    return arr.reshape(rows, -1, order="F")


def tensor_permute(t, mode: int) -> np.ndarray:
    """Cyclic mode rotation so that ``mode`` leads; ``mode = 0`` is the identity.

    result(j_k, ..., j_{n-1}, j_0, ..., j_{k-1}) = t(j_0, ..., j_{n-1})
    """
    arr = ensure_tensor(t)
    if not 0 <= mode < arr.ndim:
        raise ValueError(f"mode {mode} out of range for order-{arr.ndim} tensor")
    axes = tuple(range(mode, arr.ndim)) + tuple(range(mode))
    return np.transpose(arr, axes)


def hadamard(a, b) -> np.ndarray:
    """Entry-wise product of two same-shape tensors."""
    a, b = ensure_tensor(a), ensure_tensor(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b


def frobenius_norm(t) -> float:
    """sqrt of the sum of squared entries; the l2 norm of vectorize(t)."""
    return float(np.linalg.norm(vectorize(t)))


def multi_indices(dims, linear) -> np.ndarray:
    """Decode canonical linear indices into an (order, count) index array."""
    dims = validate_shape(dims)
    return np.vstack(np.unravel_index(np.asarray(linear, dtype=np.intp), dims, order="F"))


class ObservationMask:
    """Observed entries of a fixed-shape tensor, as sorted linear indices.

    Indices refer to the canonical first-index-fastest order. The sorted,
    deduplicated index list is the primary representation; the 0/1 tensor is
    derived on demand and always agrees with it entry for entry.
    """

    def __init__(self, shape, linear):
        self.shape = validate_shape(shape)
        lin = np.unique(np.asarray(linear, dtype=np.intp).ravel())
        size = math.prod(self.shape)
        if lin.size and (lin[0] < 0 or lin[-1] >= size):
            raise ValueError(f"mask index out of range for {size} elements")
        lin.setflags(write=False)
        self.linear = lin

    @classmethod
    def from_dense(cls, t) -> "ObservationMask":
        """Build a mask from any tensor, observing its nonzero entries."""
        arr = ensure_tensor(t)
        return cls(arr.shape, np.flatnonzero(vectorize(arr)))

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def count(self) -> int:
        return int(self.linear.size)

    @property
    def ratio(self) -> float:
        return self.count / self.size

    def __len__(self) -> int:
        return self.count

    def __repr__(self) -> str:
        return f"ObservationMask(shape={self.shape}, count={self.count})"

    def to_dense(self) -> np.ndarray:
        """Materialize the 0/1 indicator tensor."""
        flat = np.zeros(self.size)
        flat[self.linear] = 1.0
        return flat.reshape(self.shape, order="F")

    def multi_indices(self) -> np.ndarray:
        """(order, count) array of per-mode indices of the observed entries."""
        return multi_indices(self.shape, self.linear)

    def values(self, t) -> np.ndarray:
        """Observed entries of ``t`` in index order."""
        arr = ensure_tensor(t)
        if arr.shape != self.shape:
            raise ValueError(f"shape mismatch {arr.shape} vs mask {self.shape}")
        return vectorize(arr)[self.linear]

    def zero_fill(self, t) -> np.ndarray:
        """Copy of ``t`` with every unobserved entry set to zero."""
        flat = np.zeros(self.size)
        flat[self.linear] = self.values(t)
        return flat.reshape(self.shape, order="F")

    def unobserved_linear(self) -> np.ndarray:
        """Sorted linear indices of the entries not in the mask."""
        return np.setdiff1d(np.arange(self.size, dtype=np.intp), self.linear,
                            assume_unique=True)
