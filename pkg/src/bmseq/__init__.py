"""Discrete Bourgain-Morrey sequence spaces on the integers.

Norm evaluation with certified tails, block-space (predual) estimates with
dual certificates, and convolution-type solvers.
"""

__version__ = "0.1.0"

from .core import (
    INF,
    CenteredInterval,
    DyadicInterval,
    Params,
    SparseSeq,
    conjugate,
    intersecting_dyadic,
    load_seq,
    local_lp,
    lp_norm,
    save_seq,
)
from .norms import (
    NormResult,
    c_pq_constant,
    centered_norm,
    dnorm,
    dyadic_length_norm,
    dyadic_norm,
    embedding_constant_K,
    q_infty_constants,
    q_infty_norm,
    truncate_to_tolerance,
)
from .blocks import (
    Block,
    BlockRepresentation,
    block_norm_upper,
    canonical_representation,
    extremal_block,
    is_block,
    single_block_bound,
)
from .duality import (
    DualCertificate,
    block_norm_lower_certificate,
    bm_norm_lower_certificate,
    holder_chain_check,
    lr_duality_extremal,
    pairing,
)
from .operators import (
    Kernel,
    PreconditionError,
    SymbolGrid,
    ToleranceError,
    convolve,
    diag_multiply,
    geometric_kernel,
    neumann_solve,
    nonlinear_solve,
    project,
    symbol,
    translate,
    translation_constant,
    wiener_solve,
)

__all__ = [name for name in dir() if not name.startswith("_")]
