"""Exact-arithmetic and Monte-Carlo toolkit for the geometric side of the
GL(n) Kuznetsov formula: Kloosterman sums and admissibility over the
rationals, numerically certified support collapse, orbital integrals in
explicit cell coordinates, microlocal test functions, and Satake density
arithmetic on synthetic families."""

from .admissibility import (
    CharacterSpec,
    character_phase,
    character_value,
    corner_weyl_moduli_family,
    is_admissible_modulus,
)
from .groups import (
    BlockWeylElement,
    BoxNeighborhood,
    ModulusAndIndex,
    all_block_weyls,
    block_antidiagonal_composition,
    bruhat_decompose,
    conjugation_jacobian,
    corner_weyl,
    identity_weyl,
    in_box,
    index_diagonal,
    long_weyl,
    modulus_diagonal,
    scale_diagonal,
    unipotent_box_volume,
    weyl_from_composition,
)
from .hecke import (
    SatakeParams,
    SyntheticFamily,
    consecutive_hecke_bound,
    hecke_eigenvalue,
    rankin_count,
    temperedness_defect,
    trivial_satake,
)
from .kloosterman import (
    KloostermanResult,
    canonical_double_coset,
    classical_kloosterman,
    kloosterman_sum,
    trivial_bound_margin,
)
from .matrices import ExactMatrix
from .montecarlo import McConfig, McEstimate
from .orbital import (
    BoxIndicatorF,
    CornerCoordinates,
    GeometricSideReport,
    assemble_geometric_side,
    corner_orbital_envelope,
    corner_orbital_integral,
    corner_torus_factor,
    verify_corner_identity,
    whittaker_transform_at_identity,
    y_integral_closed_form,
    zprime_change_of_vars,
)
from .testfn import (
    CutoffSpec,
    SymbolSpec,
    TestFunctionHandle,
    build_test_function,
    self_convolution_value,
    symbol_fourier,
    verify_test_function_properties,
)

__version__ = "0.1.0"
