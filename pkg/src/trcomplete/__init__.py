"""Low-rank tensor completion under the tensor ring model.

The package provides the dense-tensor index machinery, ring chains of
order-3 cores, a sequential-SVD initializer, an alternating least-squares
completion solver (with a tensor-train submodel as baseline), and an
experiment harness with a CLI.
"""

from .tensors import (ObservationMask, canonical_matricize, ensure_tensor,
                      frobenius_norm, hadamard, mode_unfold, multi_indices,
                      reshape, tensor_permute, validate_shape, vectorize)
from .ring import (TRChain, as_rank_vector, connect_product, cyclic_shift,
                   left_orthogonalize, left_unfold, right_unfold,
                   storage_params, subchain, subchain_slice, tr_entry, tr_full)
from .kernels import SvdResult, lstsq_minnorm, truncated_svd
from .tra import TraConfig, tra_init
from .als import (SolverConfig, SolverReport, build_rows, complete,
                  tt_complete, update_core)
from .harness import (ExperimentRecord, ExperimentSpec, recovery_error,
                      recovery_error_unobserved, reshape_plan, run_experiment,
                      sample_mask, synthetic_tr)
from .dataio import (DataFormatError, load_any, load_chain, load_image,
                     load_tensor, save_chain, save_image, save_tensor)

__version__ = "0.1.0"

__all__ = [
    "ObservationMask", "canonical_matricize", "ensure_tensor", "frobenius_norm",
    "hadamard", "mode_unfold", "multi_indices", "reshape", "tensor_permute",
    "validate_shape", "vectorize",
    "TRChain", "as_rank_vector", "connect_product", "cyclic_shift",
    "left_orthogonalize", "left_unfold", "right_unfold", "storage_params",
    "subchain", "subchain_slice", "tr_entry", "tr_full",
    "SvdResult", "lstsq_minnorm", "truncated_svd",
    "TraConfig", "tra_init",
    "SolverConfig", "SolverReport", "build_rows", "complete", "tt_complete",
    "update_core",
    "ExperimentRecord", "ExperimentSpec", "recovery_error",
    "recovery_error_unobserved", "reshape_plan", "run_experiment",
    "sample_mask", "synthetic_tr",
    "DataFormatError", "load_any", "load_chain", "load_image", "load_tensor",
    "save_chain", "save_image", "save_tensor",
]
