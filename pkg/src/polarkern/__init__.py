"""polarkern: shortening, analysis and simulation of polarization kernels."""

from .gf2 import (
    BitMatrix,
    IndexPermutation,
    arikan,
    coset_min_weight,
    digit_reversal,
    kron,
    load_kernel,
    mat_mul,
    rank,
    save_kernel,
)
from .analysis import (
    ErasureProfile,
    ExponentReport,
    Kernel,
    compute_pdp,
    erasure_profile,
    error_exponent,
    min_weight_form,
    scaling_exponent,
)
from .shortening import (
    SearchOutcome,
    ShorteningPattern,
    ShorteningResult,
    find_optimal_shortening,
    parse_hex,
    pattern_to_hex,
    pd_bounds,
    shorten,
    shorten_single,
    verify_order_invariance,
)
from .processing import (
    EmbeddingPlan,
    InconsistentLLRError,
    UnsupportedKernelError,
    WindowPlan,
    arikan_layer_llrs,
    build_embedding,
    build_window_plan,
    exact_kernel_llr,
    exact_kernel_prob,
    shortened_kernel_llr,
    window_llr,
)
from .code import (
    CodeSpec,
    KernelEntry,
    build_generator,
    construct_frozen,
    encode,
    encode_u,
    load_code_spec,
    sc_decode,
    scl_decode,
    shortened_entry,
)
from .sim import (
    ExperimentConfig,
    ResultRow,
    awgn_llrs,
    read_results,
    run_experiment,
)

__all__ = [
    "BitMatrix",
    "IndexPermutation",
    "arikan",
    "coset_min_weight",
    "digit_reversal",
    "kron",
    "load_kernel",
    "mat_mul",
    "rank",
    "save_kernel",
    "ErasureProfile",
    "ExponentReport",
    "Kernel",
    "compute_pdp",
    "erasure_profile",
    "error_exponent",
    "min_weight_form",
    "scaling_exponent",
    "SearchOutcome",
    "ShorteningPattern",
    "ShorteningResult",
    "find_optimal_shortening",
    "parse_hex",
    "pattern_to_hex",
    "pd_bounds",
    "shorten",
    "shorten_single",
    "verify_order_invariance",
    "EmbeddingPlan",
    "InconsistentLLRError",
    "UnsupportedKernelError",
    "WindowPlan",
    "arikan_layer_llrs",
    "build_embedding",
    "build_window_plan",
    "exact_kernel_llr",
    "exact_kernel_prob",
    "shortened_kernel_llr",
    "window_llr",
    "CodeSpec",
    "KernelEntry",
    "build_generator",
    "construct_frozen",
    "encode",
    "encode_u",
    "load_code_spec",
    "sc_decode",
    "scl_decode",
    "shortened_entry",
    "ExperimentConfig",
    "ResultRow",
    "awgn_llrs",
    "read_results",
    "run_experiment",
]
