"""Fixed-intercept least squares for the CI model family.

The intercept ``a_n = 32.4 + 20 log10(f_n)`` is known per sample and is not
regressed. With ``x1 = 10 log10(d)`` and ``x2 = phi`` the model is::

    y_n = a_n + B x1_n + C x2_n

and (B, C) solve the 2x2 normal equations

    [S11 S12] [B]   [sum x1 (y_hat - a)]
    [S12 S22] [C] = [sum x2 (y_hat - a)]

All sums are correctly rounded (``math.fsum``), so results do not depend on
sample order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .core import CI, AlphaMode, ModelKind, ModelParams, Variant, intercept_db
from .errors import CollinearityError, DomainError

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class RegressionSample:
    x1: float
    x2: float
    y_hat: float
    a: float


@dataclass(frozen=True, eq=False)
class RegressionData:
    """Column-oriented regression samples (one entry per measurement)."""

    x1: np.ndarray
    x2: np.ndarray
    y_hat: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        cols = [np.array(getattr(self, k), dtype=float).ravel() for k in ("x1", "x2", "y_hat", "a")]
        if len({c.size for c in cols}) != 1:
            raise DomainError("regression columns must have equal length")
        if not all(np.all(np.isfinite(c)) for c in cols):
            raise DomainError("regression samples must be finite")
        if np.any(cols[0] < 0):
            raise DomainError("x1 = 10 log10(d) must be >= 0 (d >= 1 m)")
        if np.any(cols[1] < 0):
            raise DomainError("diffraction loss x2 must be >= 0")
        for k, c in zip(("x1", "x2", "y_hat", "a"), cols):
            c.flags.writeable = False
            object.__setattr__(self, k, c)

    def __len__(self):
        return self.x1.size

    @classmethod
    def from_samples(cls, samples: Sequence[RegressionSample]) -> "RegressionData":
        return cls(
            [s.x1 for s in samples],
            [s.x2 for s in samples],
            [s.y_hat for s in samples],
            [s.a for s in samples],
        )

    @classmethod
    def from_measurements(cls, distance_m, path_loss_db, freq_ghz, phi_db=None) -> "RegressionData":
        distance_m = np.asarray(distance_m, dtype=float)
        if np.any(distance_m < 1.0):
            raise DomainError("distances must be >= 1 m")
        x2 = np.zeros_like(distance_m) if phi_db is None else phi_db
        a = np.broadcast_to(intercept_db(np.asarray(freq_ghz, dtype=float)), distance_m.shape)
        return cls(10.0 * np.log10(distance_m), x2, path_loss_db, a)


Samples = Union[RegressionData, Sequence[RegressionSample]]


@dataclass(frozen=True, eq=False)
class FitResult:
    kind: ModelKind
    params: ModelParams
    n_samples: int
    sse: float
    residuals: np.ndarray = field(repr=False)
    residual_mean: float = 0.0
    max_abs_residual: float = 0.0


def _as_data(samples: Samples) -> RegressionData:
    if isinstance(samples, RegressionData):
        return samples
    return RegressionData.from_samples(list(samples))


def _dot(u, v) -> float:
    return math.fsum(np.multiply(u, v))


def residual_stats(samples: Samples, params: ModelParams, kind: ModelKind) -> FitResult:
    """Residuals ``y_hat - model`` and their RMS (no mean removal, divide by N)."""
    data = _as_data(samples)
    n = len(data)
    if n == 0:
        raise DomainError("no samples")
    alpha = 0.0 if kind.variant is Variant.CI else params.alpha
    r = data.y_hat - (data.a + params.ple * data.x1 + alpha * data.x2)
    sse = math.fsum(r * r)
    return FitResult(
        kind=kind,
        params=ModelParams(params.ple, params.alpha, math.sqrt(sse / n)),
        n_samples=n,
        sse=sse,
        residuals=r,
        residual_mean=math.fsum(r) / n,
        max_abs_residual=float(np.max(np.abs(r))),
    )


def _fit_slope(data: RegressionData, offset) -> float:
    s11 = _dot(data.x1, data.x1)
    if s11 == 0.0:
        raise CollinearityError("all samples sit at the 1 m reference distance; the PLE is undetermined")
    return _dot(data.x1, data.y_hat - data.a - offset) / s11


def fit_ci(samples: Samples) -> FitResult:
    data = _as_data(samples)
    if len(data) == 0:
        raise DomainError("no samples")
    ple = _fit_slope(data, 0.0)
    return residual_stats(data, ModelParams(ple, 0.0), CI)


def fit_ci_diffraction_fixed_alpha(
    samples: Samples, alpha_fixed: float = 1.0, variant: Variant = Variant.CI_DIFF_SKE
) -> FitResult:
    """Fit the PLE with the diffraction term held at ``alpha_fixed * phi``."""
    data = _as_data(samples)
    if len(data) == 0:
        raise DomainError("no samples")
    ple = _fit_slope(data, alpha_fixed * data.x2)
    kind = ModelKind(variant, AlphaMode.FIXED_ONE)
    return residual_stats(data, ModelParams(ple, alpha_fixed), kind)


def gram_matrix(data: RegressionData) -> np.ndarray:
    s12 = _dot(data.x1, data.x2)
    return np.array([[_dot(data.x1, data.x1), s12], [s12, _dot(data.x2, data.x2)]])


def fit_ci_diffraction_joint(samples: Samples, variant: Variant = Variant.CI_DIFF_SKE) -> FitResult:
    """Regress the PLE and the diffraction coefficient together."""
    data = _as_data(samples)
    if len(data) < 2:
        raise DomainError("the joint fit needs at least 2 samples")
    if not np.any(data.x2 != 0):
        raise CollinearityError(
            "every diffraction loss is zero so alpha is undetermined; use fit_ci instead"
        )
    g = gram_matrix(data)
    cond = np.linalg.cond(g)
    if not cond <= CONDITION_LIMIT:
        raise CollinearityError(
            f"distance and diffraction regressors are collinear (condition number {cond:.3g});"
            " use fit_ci instead"
        )
    z = data.y_hat - data.a
    b1, b2 = _dot(data.x1, z), _dot(data.x2, z)
    (s11, s12), (_, s22) = g.tolist()
    det = s11 * s22 - s12 * s12
    ple = (s22 * b1 - s12 * b2) / det
    alpha = (s11 * b2 - s12 * b1) / det
    kind = ModelKind(variant, AlphaMode.REGRESSED)
    return residual_stats(data, ModelParams(ple, alpha), kind)


def fit(samples: Samples, kind: ModelKind) -> FitResult:
    """Dispatch to the estimator matching ``kind``."""
    if kind.variant is Variant.CI:
        return fit_ci(samples)
    if kind.alpha_mode is AlphaMode.FIXED_ONE:
        return fit_ci_diffraction_fixed_alpha(samples, 1.0, kind.variant)
    return fit_ci_diffraction_joint(samples, kind.variant)
