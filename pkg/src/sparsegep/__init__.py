"""Sparse estimation of the leading eigenspace of a symmetric-definite
generalized eigenvalue problem ``A u = lambda B u`` by penalized orthogonal
iteration (POI) and Fast POI."""
from ._kernels import BACKEND
from .applications import LabeledData, cca_pairs, lda_pair, pca_pair, sir_pair
from .core import (FASTPOI, POI, GepPair, OuterConfig, SubspaceEstimate,
                   eigenvalues_ls, fast_poi, fit, lambda_max, poi,
                   rayleigh_eigenvalues, recover_pair, regularize_b)
from .errors import (DefinitenessError, InvalidInputError, OverPenalizationError,
                     RankDeficiencyError, SparseGepError, TuningError)
from .linalg import projection_distance, qr_thin, small_gep, sym_eig
from .penalties import (GROUP, LASSO, InnerSolveConfig, PenaltySpec,
                        kkt_residual, penalized_objective, soft_threshold,
                        solve_group_rows, solve_lasso_column, solve_penalized)
from .tuning import CvReport, cv_score, lambda_grid, one_se_select, select_lambda

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "LabeledData", "cca_pairs", "lda_pair", "pca_pair", "sir_pair",
    "FASTPOI", "POI", "GepPair", "OuterConfig", "SubspaceEstimate",
    "eigenvalues_ls", "fast_poi", "fit", "lambda_max", "poi",
    "rayleigh_eigenvalues", "recover_pair", "regularize_b",
    "DefinitenessError", "InvalidInputError", "OverPenalizationError",
    "RankDeficiencyError", "SparseGepError", "TuningError",
    "projection_distance", "qr_thin", "small_gep", "sym_eig",
    "GROUP", "LASSO", "InnerSolveConfig", "PenaltySpec", "kkt_residual",
    "penalized_objective", "soft_threshold", "solve_group_rows",
    "solve_lasso_column", "solve_penalized",
    "CvReport", "cv_score", "lambda_grid", "one_se_select", "select_lambda",
]
