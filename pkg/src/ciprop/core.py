"""Close-in (CI) path loss models, optionally extended by a diffraction term.

All predictions use the 1 m free-space reference distance. The intercept is
written with the rounded constant 32.4 dB, so for a carrier ``f`` in GHz::

    PL(f, d)      = 32.4 + 20 log10(f) + 10 n log10(d)
    PL(f, d, phi) = PL(f, d) + alpha * phi

Shadow fading is a residual distribution and never enters these functions;
use :func:`sample_shadowed` to draw from it.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

SPEED_OF_LIGHT = 299_792_458.0  # m/s
INTERCEPT_CONSTANT_DB = 32.4
REFERENCE_DISTANCE_M = 1.0

_FREQ_VALID_GHZ = (0.5, 100.0)


class Variant(str, enum.Enum):
    CI = "CI"
    CI_DIFF_SKE = "CI_DIFF_SKE"
    CI_DIFF_DB = "CI_DIFF_DB"


class AlphaMode(str, enum.Enum):
    FIXED_ONE = "FIXED_ONE"
    REGRESSED = "REGRESSED"
    NOT_APPLICABLE = "NOT_APPLICABLE"


@dataclass(frozen=True)
class ModelKind:
    variant: Variant
    alpha_mode: AlphaMode

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "alpha_mode", AlphaMode(self.alpha_mode))
        is_ci = self.variant is Variant.CI
        if is_ci != (self.alpha_mode is AlphaMode.NOT_APPLICABLE):
            raise DomainError(
                f"alpha mode {self.alpha_mode.value} is not valid for {self.variant.value}"
            )

    @property
    def label(self) -> str:
        if self.variant is Variant.CI:
            return "CI"
        return f"{self.variant.value}:{self.alpha_mode.value}"


CI = ModelKind(Variant.CI, AlphaMode.NOT_APPLICABLE)
SKE_FIXED = ModelKind(Variant.CI_DIFF_SKE, AlphaMode.FIXED_ONE)
SKE_REGRESSED = ModelKind(Variant.CI_DIFF_SKE, AlphaMode.REGRESSED)
DB_FIXED = ModelKind(Variant.CI_DIFF_DB, AlphaMode.FIXED_ONE)
DB_REGRESSED = ModelKind(Variant.CI_DIFF_DB, AlphaMode.REGRESSED)


@dataclass(frozen=True)
class ModelParams:
    """Fitted or assumed CI model parameters.

    Attributes:
        ple: path loss exponent.
        alpha: weight applied to the diffraction loss.
        sigma_db: shadow-fading standard deviation in dB.
    """

    ple: float
    alpha: float = 0.0
    sigma_db: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.ple):
            raise DomainError(f"ple must be finite, got {self.ple}")
        if not math.isfinite(self.alpha):
            raise DomainError(f"alpha must be finite, got {self.alpha}")
        if not (self.sigma_db >= 0 and math.isfinite(self.sigma_db)):
            raise DomainError(f"sigma_db must be finite and >= 0, got {self.sigma_db}")
        if self.alpha < 0:
            # least squares may legitimately land here on degenerate data
            warnings.warn(
                f"negative diffraction coefficient alpha={self.alpha:.4g}",
                RuntimeWarning,
                stacklevel=3,
            )


def check_frequency(f_ghz: float) -> float:
    f_ghz = float(f_ghz)
    if not (f_ghz > 0 and math.isfinite(f_ghz)):
        raise DomainError(f"frequency must be positive, got {f_ghz} GHz")
    lo, hi = _FREQ_VALID_GHZ
    if not lo <= f_ghz <= hi:
        warnings.warn(
            f"frequency {f_ghz} GHz is outside the {lo}-{hi} GHz validity range",
            stacklevel=3,
        )
    return f_ghz


def check_distance(d_m: float) -> float:
    d_m = float(d_m)
    if not (d_m >= REFERENCE_DISTANCE_M and math.isfinite(d_m)):
        raise DomainError(
            f"distance {d_m} m is below the {REFERENCE_DISTANCE_M:g} m reference distance"
        )
    return d_m


def fspl(f_ghz: float, d0_m: float = REFERENCE_DISTANCE_M) -> float:
    """Exact free-space path loss 20 log10(4 pi f d0 / c) in dB."""
    f_ghz = check_frequency(f_ghz)
    d0_m = float(d0_m)
    if not d0_m > 0:
        raise DomainError(f"reference distance must be positive, got {d0_m}")
    return 20.0 * math.log10(4.0 * math.pi * f_ghz * 1e9 * d0_m / SPEED_OF_LIGHT)


def intercept_db(f_ghz):
    """Fixed CI intercept 32.4 + 20 log10(f_GHz); accepts scalars or arrays."""
    return INTERCEPT_CONSTANT_DB + 20.0 * np.log10(f_ghz)


def ci_predict(f_ghz: float, d_m: float, params: ModelParams) -> float:
    f_ghz = check_frequency(f_ghz)
    d_m = check_distance(d_m)
    return (
        INTERCEPT_CONSTANT_DB
        + 20.0 * math.log10(f_ghz)
        + 10.0 * params.ple * math.log10(d_m)
    )


def ci_diff_predict(f_ghz: float, d_m: float, phi_db: float, params: ModelParams) -> float:
    """CI prediction plus ``params.alpha`` times the diffraction loss ``phi_db``."""
    phi_db = float(phi_db)
    if not phi_db >= 0:
        raise DomainError(f"diffraction loss must be >= 0 dB, got {phi_db}")
    return ci_predict(f_ghz, d_m, params) + params.alpha * phi_db


def sample_shadowed(mean_pl: float, sigma_db: float, rng_seed: int, size=None):
    """Add zero-mean Gaussian shadow fading to ``mean_pl``.

    Returns a float when ``size`` is None, otherwise an array of ``size``
    independent draws. The same seed always yields the same output.
    """
    if not sigma_db >= 0:
        raise DomainError(f"sigma_db must be >= 0, got {sigma_db}")
    z = np.random.default_rng(rng_seed).standard_normal(size)
    if size is None:
        return float(mean_pl) + float(sigma_db) * float(z)
    return mean_pl + sigma_db * z
