"""Close-in path loss models with terrain diffraction, and their fitting."""

from .core import (
    CI,
    DB_FIXED,
    DB_REGRESSED,
    SKE_FIXED,
    SKE_REGRESSED,
    AlphaMode,
    ModelKind,
    ModelParams,
    Variant,
    ci_diff_predict,
    ci_predict,
    fspl,
    sample_shadowed,
)
from .errors import CollinearityError, DomainError, ValidationError
from .regression import (
    FitResult,
    RegressionData,
    RegressionSample,
    fit_ci,
    fit_ci_diffraction_fixed_alpha,
    fit_ci_diffraction_joint,
    residual_stats,
)
from .terrain import (
    EffectiveEarth,
    LosClass,
    TerrainProfile,
    bullington_loss,
    classify_los,
    delta_bullington,
    knife_edge_loss,
    knife_edge_nu,
    ske_diffraction,
    spherical_earth_loss,
)

__version__ = "0.1.0"
