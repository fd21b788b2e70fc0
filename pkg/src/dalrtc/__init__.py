"""Discrete-aware low-rank tensor completion.

A dense tensor completion toolkit built around an accelerated
proximal-gradient solver that couples a weighted sum-of-nuclear-norms
low-rank prior with a smoothed discreteness penalty pulling the recovered
entries onto a finite alphabet, plus classic baselines (per-mode
thresholding, per-mode factorization, and matrix soft-imputation), an
image/mask data pipeline, and an NMSE benchmark runner.
"""

from .bench import (
    ExperimentPlan,
    NmseRow,
    SweepResult,
    derive_seed,
    nmse,
    run_completion,
    run_sweep,
    write_report_csv,
    write_trace_csv,
)
from .data import (
    FileFormatError,
    MaskSpec,
    load_image,
    mask_load,
    mask_save,
    quantize_to_alphabet,
    sample_mask,
    save_image,
    synthesize_discrete_lowrank,
    tensor_load,
    tensor_save,
)
from .linalg import SvdFactors, frob_norm, least_squares_xy, nuclear_norm, svd, svt
from .regularizer import (
    Alphabet,
    FPAuxiliaries,
    grad_h,
    h_value,
    l0_approx,
    lipschitz_step,
    update_auxiliaries,
)
from .solvers import (
    ConvergenceTrace,
    SolverConfig,
    SolverNumericalError,
    TMacConfig,
    TraceRecord,
    dalrtc,
    default_lambda,
    mean_fill,
    momentum_weight,
    silrtc,
    snn_prox,
    soft_impute,
    tmac,
)
from .tensor import (
    ObservationMask,
    fold,
    mask_project,
    scatter_complement,
    unfold,
    vec_complement,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # tensor
    "ObservationMask", "unfold", "fold", "mask_project",
    "vec_complement", "scatter_complement",
    # linalg
    "SvdFactors", "svd", "svt", "least_squares_xy", "frob_norm", "nuclear_norm",
    # regularizer
    "Alphabet", "FPAuxiliaries", "l0_approx", "update_auxiliaries",
    "h_value", "grad_h", "lipschitz_step",
    # solvers
    "SolverConfig", "TMacConfig", "ConvergenceTrace", "TraceRecord",
    "SolverNumericalError", "mean_fill", "momentum_weight", "snn_prox",
    "dalrtc", "silrtc", "tmac", "soft_impute", "default_lambda",
    # data
    "FileFormatError", "MaskSpec", "load_image", "save_image", "sample_mask",
    "quantize_to_alphabet", "tensor_save", "tensor_load", "mask_save",
    "mask_load", "synthesize_discrete_lowrank",
    # bench
    "nmse", "derive_seed", "ExperimentPlan", "NmseRow", "SweepResult",
    "run_completion", "run_sweep", "write_report_csv", "write_trace_csv",
]
