"""Fractional Dirichlet spectral shape-optimization lab."""

from ._core import (
    Grid,
    StiffnessOperator,
    assemble_stiffness,
    ball_mask,
    build_grid,
    classify_family,
    eigenpairs,
    eval_functional,
    fourier_seminorm_sq,
    gagliardo_sq,
    gamma_distance,
    lieb_translation_search,
    list_checks,
    minimize_shape,
    normalization_constant,
    resolvent_norm_diff,
    run_experiment,
    solve_torsion,
    two_ball_experiment,
)

__all__ = [
    "Grid",
    "StiffnessOperator",
    "assemble_stiffness",
    "ball_mask",
    "build_grid",
    "classify_family",
    "eigenpairs",
    "eval_functional",
    "fourier_seminorm_sq",
    "gagliardo_sq",
    "gamma_distance",
    "lieb_translation_search",
    "list_checks",
    "minimize_shape",
    "normalization_constant",
    "resolvent_norm_diff",
    "run_experiment",
    "solve_torsion",
    "two_ball_experiment",
]
