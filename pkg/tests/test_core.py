import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ciprop import core
from ciprop.core import (
    AlphaMode,
    ModelKind,
    ModelParams,
    Variant,
    ci_diff_predict,
    ci_predict,
    fspl,
    sample_shadowed,
)
from ciprop.errors import DomainError

freqs = st.floats(0.5, 100.0)
dists = st.floats(1.0, 1e5)
ples = st.floats(0.5, 6.0)


def test_fspl_exact_and_intercept_convention():
    assert fspl(1.0, 1.0) == pytest.approx(32.44778322188338, abs=1e-12)
    assert fspl(1.0) == pytest.approx(32.448, abs=5e-4)
    assert abs(fspl(1.0) - 32.4) < 0.05
    assert core.intercept_db(1.0) == pytest.approx(32.4)
    assert core.intercept_db(2.25) == pytest.approx(32.4 + 20 * math.log10(2.25))
    assert core.intercept_db(2.25) == pytest.approx(39.444, abs=5e-4)


def test_fspl_scales_with_distance():
    assert fspl(1.4, 10.0) - fspl(1.4, 1.0) == pytest.approx(20.0)


@pytest.mark.parametrize("f, d0", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, -3.0)])
def test_fspl_rejects_non_positive(f, d0):
    with pytest.raises(DomainError):
        fspl(f, d0)


@pytest.mark.parametrize(
    "f, d, ple, expected",
    [
        (1.4, 1.0, 2.16, 32.4 + 20 * math.log10(1.4)),
        (1.4, 1000.0, 2.16, 100.12256071356477),
        (2.25, 10_000.0, 2.16, 125.84365036222725),
    ],
)
def test_ci_predict_examples(f, d, ple, expected):
    assert ci_predict(f, d, ModelParams(ple)) == pytest.approx(expected, abs=1e-9)


def test_ci_predict_reference_value():
    assert ci_predict(1.4, 1.0, ModelParams(2.16)) == pytest.approx(35.322, abs=1e-3)


def test_ci_predict_below_reference_distance():
    with pytest.raises(DomainError):
        ci_predict(1.4, 0.5, ModelParams(2.0))


def test_frequency_outside_validity_range_warns():
    with pytest.warns(UserWarning):
        ci_predict(200.0, 10.0, ModelParams(2.0))


@pytest.mark.parametrize(
    "f, d, ple, alpha, phi, expected",
    [
        (1.4, 1000.0, 2.28, 0.87, 20.0, 121.12256071356475),
        (2.25, 1000.0, 2.26, 0.66, 10.0, 113.84365036222725),
    ],
)
def test_ci_diff_predict_examples(f, d, ple, alpha, phi, expected):
    assert ci_diff_predict(f, d, phi, ModelParams(ple, alpha)) == pytest.approx(expected, abs=1e-9)


def test_ci_diff_predict_rejects_negative_phi():
    with pytest.raises(DomainError):
        ci_diff_predict(1.4, 100.0, -1.0, ModelParams(2.0, 1.0))


@given(freqs, dists, ples, st.floats(0.0, 2.0))
def test_zero_diffraction_matches_ci(f, d, ple, alpha):
    p = ModelParams(ple, alpha)
    assert ci_diff_predict(f, d, 0.0, p) == ci_predict(f, d, p)


@given(freqs, ples, dists, dists)
def test_monotone_in_distance(f, ple, d1, d2):
    lo, hi = sorted((d1, d2))
    if hi <= lo * (1 + 1e-9):
        return
    assert ci_predict(f, lo, ModelParams(ple)) < ci_predict(f, hi, ModelParams(ple))


@given(st.floats(0.5, 50.0), dists, ples)
def test_frequency_shift(f, d, ple):
    p = ModelParams(ple)
    assert ci_predict(2 * f, d, p) - ci_predict(f, d, p) == pytest.approx(20 * math.log10(2), abs=1e-9)


@given(freqs, dists, ples, st.floats(0.0, 2.0), st.floats(0.0, 60.0), st.floats(0.0, 60.0))
def test_linear_in_phi(f, d, ple, alpha, phi1, phi2):
    p = ModelParams(ple, alpha)
    delta = ci_diff_predict(f, d, phi1 + phi2, p) - ci_diff_predict(f, d, phi1, p)
    assert delta == pytest.approx(alpha * phi2, abs=1e-9)


@given(freqs, ples)
def test_reference_anchor_independent_of_ple(f, ple):
    assert ci_predict(f, 1.0, ModelParams(ple)) == pytest.approx(32.4 + 20 * math.log10(f), abs=1e-12)


def test_sample_shadowed_degenerate_and_deterministic():
    assert sample_shadowed(120.5, 0.0, 7) == 120.5
    assert sample_shadowed(120.5, 4.6, 42) == sample_shadowed(120.5, 4.6, 42)
    assert sample_shadowed(120.5, 4.6, 42) != sample_shadowed(120.5, 4.6, 43)


def test_sample_shadowed_statistics():
    draws = sample_shadowed(0.0, 11.40, 2024, size=1_000_000)
    assert 11.37 <= np.std(draws) <= 11.43
    assert abs(np.mean(draws)) < 0.05


def test_sample_shadowed_rejects_negative_sigma():
    with pytest.raises(DomainError):
        sample_shadowed(0.0, -1.0, 1)


def test_model_kind_invariant():
    ModelKind(Variant.CI, AlphaMode.NOT_APPLICABLE)
    ModelKind("CI_DIFF_DB", "REGRESSED")
    with pytest.raises(DomainError):
        ModelKind(Variant.CI, AlphaMode.REGRESSED)
    with pytest.raises(DomainError):
        ModelKind(Variant.CI_DIFF_SKE, AlphaMode.NOT_APPLICABLE)


def test_model_params_validation():
    with pytest.raises(DomainError):
        ModelParams(float("nan"))
    with pytest.raises(DomainError):
        ModelParams(2.0, 0.5, -1.0)
    with pytest.warns(RuntimeWarning):
        ModelParams(2.0, -0.1)
