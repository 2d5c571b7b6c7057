"""Exact lasso paths, exact leave-one-out CV curves, and Monte-Carlo checks of
CV risk consistency for the lasso."""
from .cv import (CvCurve, LooPathSet, argmin_cv, cv_curve, kfold_curve, loo_ols_rank_one,
                 loo_paths, loo_stability)
from .design import (BoundedBall, Dataset, DesignMatrix, DesignSpec, GroundTruth, NoiseFamily,
                     NoiseKind, ReplicatedBlock, ScaledOrthogonal, generate_design, gram_matrix,
                     realize, sample_noise)
from .errors import (BadBlockSize, DegenerateTie, DimensionMismatch, IoFailure, LassoLabError,
                     NoConvergence, RankDeficient, RankDeficientFold, SingularDowndate)
from .lasso import (KktReport, LassoPath, PathSegment, compute_path, eval_path, kkt_residual,
                    lipschitz_diagnostic, solve_lasso_at)
from .risk import RiskCurve, risk_at, risk_curve, risk_gap

__version__ = "0.1.0"
