"""Discrete gradient fields from lower stars, merged exactly across covering patches."""
from .complex import (
    Ambient,
    Cell,
    CubicalGrid,
    DomainError,
    Subcomplex,
    Tree,
    antithetic_witness,
    closure,
    complement_closure,
    directional_enlarge,
    full,
    is_antithetic,
    k_border,
    neighborhood,
)
from .distributed import partition, run_distributed
from .merge import (
    MergePlan,
    NotAntitheticError,
    merge_2d,
    merge_cor_antithetic,
    merge_cor_intersection,
    merge_thm_2d,
    merge_thm_general,
    naive_merge,
    recover_critical,
    run_algorithm1,
)
from .pls import ProcessLowerStars, field_problems, is_matching, process_lower_stars, uniquify
from .trees import build_jet_cover, merge_on_tree, product_cover

__version__ = "0.1.0"
