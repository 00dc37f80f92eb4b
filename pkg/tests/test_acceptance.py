"""Acceptance suite: one test per primary criterion, each logged as PASS/FAIL."""

import csv
import json
import math
import time

import numpy as np
import pytest

import itu_oracle
from conftest import FLAT_EARTH, random_profile, record_criterion, ridge_profile
from grid_oracle import grid_search_2d
from ciprop.campaign import save_campaign, synth_campaign
from ciprop.cli import main
from ciprop.core import CI, DB_REGRESSED, ModelParams, SKE_REGRESSED, Variant, ci_predict
from ciprop.regression import (
    RegressionData,
    fit_ci,
    fit_ci_diffraction_fixed_alpha,
    fit_ci_diffraction_joint,
)
from ciprop.report import build_report, reports_to_json
from ciprop.terrain import LosClass, delta_bullington_parts, knife_edge_loss, knife_edge_nu


def nlos_data(campaign, variant):
    return campaign.select(los=LosClass.NLOS).regression_data(variant)


def test_closed_form_vs_brute_force():
    rng = np.random.default_rng(1001)
    worst_b = worst_c = 0.0
    start = time.perf_counter()
    for _ in range(100):
        n = int(rng.integers(5, 51))
        d = np.exp(rng.uniform(math.log(10.0), math.log(12_500.0), n))
        phi = np.clip(rng.normal(5.0, 10.0, n) + 1.5 * np.log(d / 10.0), 0.0, None)
        b, c, sigma = rng.uniform(1.6, 3.4), rng.uniform(0.2, 1.6), rng.uniform(0.0, 4.0)
        y = 32.4 + 20 * math.log10(1.4) + 10 * b * np.log10(d) + c * phi + sigma * rng.standard_normal(n)
        data = RegressionData.from_measurements(d, y, 1.4, phi)
        res = fit_ci_diffraction_joint(data)
        gb, gc = grid_search_2d(data.x1, data.x2, data.y_hat, data.a, (1.0, 4.0), (0.0, 2.0))
        worst_b = max(worst_b, abs(res.params.ple - gb))
        worst_c = max(worst_c, abs(res.params.alpha - gc))
    elapsed = time.perf_counter() - start
    ok = worst_b <= 1e-3 and worst_c <= 1e-3 and elapsed < 10.0
    detail = f"max |dple|={worst_b:.1e} max |dalpha|={worst_c:.1e} t={elapsed:.2f}s"
    assert record_criterion("closed form matches 2-D grid search on 100 campaigns", ok, detail)


def test_parameter_recovery():
    start = time.perf_counter()
    c = synth_campaign(ModelParams(2.28, 0.87, 4.6), SKE_REGRESSED, n_samples=5000,
                       terrain_style="rolling", seed=2024)
    res = fit_ci_diffraction_joint(c.regression_data(Variant.CI_DIFF_SKE))
    elapsed = time.perf_counter() - start
    p = res.params
    ok = (abs(p.ple - 2.28) <= 0.05 and abs(p.alpha - 0.87) <= 0.05
          and 4.4 <= p.sigma_db <= 4.8 and elapsed < 5.0)
    detail = f"ple={p.ple:.4f} alpha={p.alpha:.4f} sigma={p.sigma_db:.3f} t={elapsed:.2f}s"
    assert record_criterion("joint fit recovers (2.28, 0.87, 4.6) at N=5000", ok, detail)


def test_los_recovery():
    c = synth_campaign(ModelParams(2.16, 0.0, 3.07), CI, n_samples=1262, terrain_style="flat",
                       seed=1262)
    p = fit_ci(c.regression_data()).params
    ok = abs(p.ple - 2.16) <= 0.05 and abs(p.sigma_db - 3.07) <= 0.3
    detail = f"ple={p.ple:.4f} sigma={p.sigma_db:.3f}"
    assert record_criterion("CI fit recovers LOS truth (2.16, 3.07) at N=1262", ok, detail)


def test_std_reduction_ordering():
    ordering_ok, checked = True, 0
    for seed in range(6):
        for kind, truth in ((DB_REGRESSED, ModelParams(2.22, 0.71, 4.02)),
                            (SKE_REGRESSED, ModelParams(2.28, 0.87, 4.6))):
            c = synth_campaign(truth, kind, n_samples=1500, seed=300 + seed)
            for data in (c.regression_data(kind.variant), nlos_data(c, kind.variant)):
                s_joint = fit_ci_diffraction_joint(data, kind.variant).params.sigma_db
                s_fixed = fit_ci_diffraction_fixed_alpha(data, 1.0, kind.variant).params.sigma_db
                s_ci = fit_ci(data).params.sigma_db
                ordering_ok &= s_joint <= s_fixed <= s_ci
                checked += 1
    c = synth_campaign(ModelParams(2.22, 0.71, 4.02), DB_REGRESSED, n_samples=5000, seed=4020)
    data = nlos_data(c, Variant.CI_DIFF_DB)
    gap = fit_ci(data).params.sigma_db - fit_ci_diffraction_joint(data, Variant.CI_DIFF_DB).params.sigma_db
    ok = ordering_ok and gap >= 2.0
    detail = f"ordering held on {checked} fits: {ordering_ok}; DB NLOS sigma gap={gap:.2f} dB"
    assert record_criterion("sigma(joint) <= sigma(alpha=1) <= sigma(CI), gap >= 2 dB", ok, detail)


def test_ple_trend_toward_two():
    c = synth_campaign(ModelParams(2.2, 0.71, 4.02), DB_REGRESSED, n_samples=5000, seed=2200)
    data = nlos_data(c, Variant.CI_DIFF_DB)
    ci_ple = fit_ci(data).params.ple
    joint_ple = fit_ci_diffraction_joint(data, Variant.CI_DIFF_DB).params.ple
    ok = ci_ple >= 2.2 + 0.1 and abs(joint_ple - 2.2) <= 0.05
    detail = f"CI ple={ci_ple:.4f} joint ple={joint_ple:.4f} (N_nlos={len(data)})"
    assert record_criterion("CI-only PLE inflated, joint PLE at truth 2.2", ok, detail)


def test_diffraction_spot_values():
    j_neg = float(knife_edge_loss(-1.0))
    j_zero = float(knife_edge_loss(0.0))
    nu = knife_edge_nu(ridge_profile(20.0), 1, 1.4, FLAT_EARTH)
    rng = np.random.default_rng(777)
    worst_db = worst_sph = 0.0
    for _ in range(20):
        p = random_profile(rng)
        for f in (1.4, 2.25):
            want = itu_oracle.delta_bullington(
                list(p.distances_m), list(p.elevations_m), p.tx_height_m, p.rx_height_m, 4 / 3, f)
            got = delta_bullington_parts(p, f)
            worst_db = max(worst_db, abs(got.loss_db - want[0]))
            worst_sph = max(worst_sph, abs(got.spherical_db - want[3]))
    checks = {
        "J(-1)=0": j_neg == 0.0,
        "J(0)=6.02+-0.01": abs(j_zero - 6.02) <= 0.01,
        "nu=1.367": abs(nu - 1.367) <= 1e-3,
        "DB/spherical vs oracle": worst_db <= 0.01 and worst_sph <= 0.01,
    }
    for name, ok in checks.items():
        record_criterion(f"diffraction spot value {name}", ok,
                         {"J(-1)=0": f"J(-1)={j_neg}",
                          "J(0)=6.02+-0.01": f"J(0)={j_zero:.4f}",
                          "nu=1.367": f"nu={nu:.5f}",
                          "DB/spherical vs oracle": f"max diff {worst_db:.1e}/{worst_sph:.1e} dB"}[name])
    assert all(checks.values()), [k for k, v in checks.items() if not v]


def test_frequency_shift_anchor():
    rng = np.random.default_rng(6)
    worst_literal = worst_exact = 0.0
    for _ in range(2000):
        f, d, ple = rng.uniform(0.5, 50.0), 10 ** rng.uniform(0.0, 4.5), rng.uniform(1.0, 5.0)
        p = ModelParams(ple)
        shift = ci_predict(2 * f, d, p) - ci_predict(f, d, p)
        worst_literal = max(worst_literal, abs(shift - 6.0206))
        worst_exact = max(worst_exact, abs(shift - 20 * math.log10(2)))
    record_criterion("frequency doubling adds 20*log10(2) within 1e-9", worst_exact <= 1e-9,
                     f"max |shift-20log10(2)|={worst_exact:.1e}")
    ok = worst_literal <= 1e-9
    assert record_criterion("frequency doubling adds 6.0206 +- 1e-9 dB", ok,
                            f"max |shift-6.0206|={worst_literal:.2e}")


def test_determinism(tmp_path):
    outputs = []
    for run in range(2):
        c = synth_campaign(ModelParams(2.22, 0.71, 4.02), DB_REGRESSED, n_samples=500, seed=99)
        save_campaign(c, tmp_path / f"m{run}.csv", tmp_path / f"p{run}")
        fits = [fit_ci(c.regression_data()),
                fit_ci_diffraction_joint(c.regression_data(Variant.CI_DIFF_DB), Variant.CI_DIFF_DB)]
        outputs.append(((tmp_path / f"m{run}.csv").read_bytes(),
                        [f.params for f in fits],
                        reports_to_json([build_report(c, fits, 1.4)]).encode()))
    profiles_equal = all(
        (tmp_path / "p0" / q.name).read_bytes() == q.read_bytes() for q in (tmp_path / "p1").iterdir())
    ok = outputs[0] == outputs[1] and profiles_equal
    assert record_criterion("identical seeds give byte-identical campaigns, fits, reports", ok)


@pytest.mark.slow
def test_end_to_end_cli(tmp_path, capsys):
    start = time.perf_counter()
    codes = [main(["synth", "--truth-ple", "2.22", "--truth-alpha", "0.71", "--sigma", "4.02",
                   "--model", "ci+db", "--n", "10000", "--terrain", "rolling", "--seed", "10",
                   "--out", str(tmp_path / "c")])]
    codes.append(main(["fit", str(tmp_path / "c" / "measurements.csv"), str(tmp_path / "c" / "profiles"),
                       "--model", "all", "--split-los", "--out", str(tmp_path / "r.json")]))
    codes.append(main(["plotdata", str(tmp_path / "c" / "measurements.csv"), str(tmp_path / "r.json"),
                       "--out", str(tmp_path / "plot.csv")]))
    elapsed = time.perf_counter() - start
    capsys.readouterr()
    n_rows = sum(1 for _ in csv.reader((tmp_path / "plot.csv").open())) - 1 if codes[-1] == 0 else 0
    n_curves = sum(len(b["rows"]) for b in json.loads((tmp_path / "r.json").read_text())) if codes[1] == 0 else 0
    ok = codes == [0, 0, 0] and elapsed < 30.0 and n_rows == 10_000 + 50 * n_curves
    detail = f"exit codes {codes}, t={elapsed:.1f}s, plot rows={n_rows}"
    assert record_criterion("synth -> fit -> plotdata at N=10000 under 30 s", ok, detail)
