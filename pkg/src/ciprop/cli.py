"""Command-line interface: ``ciprop {fit,predict,synth,plotdata}``.

Exit codes: 0 success, 1 validation error, 2 numerical error (singular fit),
3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import core
from .campaign import (
    SystemParams,
    load_campaign,
    read_system,
    save_campaign,
    split_by,
    synth_campaign,
    write_system,
)
from .core import ModelParams
from .errors import CollinearityError, DomainError, ValidationError
from .regression import fit
from .report import build_report, plot_data, read_report, render_table, write_report
from .terrain import EffectiveEarth, delta_bullington, read_profile, ske_diffraction

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
SYSTEM_FILE = "system.cfg"
MEASUREMENTS_FILE = "measurements.csv"
PROFILES_DIR = "profiles"

_DIFF_VARIANT = {"ci+ske": core.Variant.CI_DIFF_SKE, "ci+db": core.Variant.CI_DIFF_DB}
_TERRAIN = {"flat": "flat", "hill": "single-hill", "rolling": "rolling"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _log(msg):
    print(msg, file=sys.stderr)


def _system_for(measurements: Path, system_path) -> SystemParams:
    if system_path:
        return read_system(system_path)
    sidecar = measurements.parent / SYSTEM_FILE
    if sidecar.is_file():
        _log(f"using system parameters from {sidecar}")
        return read_system(sidecar)
    return SystemParams()


def _model_kinds(model: str, alpha: str):
    if model == "ci":
        return [core.CI]
    if model == "all":
        return [core.CI, core.SKE_FIXED, core.DB_FIXED, core.SKE_REGRESSED, core.DB_REGRESSED]
    mode = core.AlphaMode.FIXED_ONE if alpha == "fixed1" else core.AlphaMode.REGRESSED
    return [core.ModelKind(_DIFF_VARIANT[model], mode)]


def fit_reports(campaign, model="all", alpha="regress", split_los=False, freq_mhz=None,
                pooled=False):
    """Run the requested fits on every frequency (and LOS) block of ``campaign``."""
    if freq_mhz is not None:
        campaign = campaign.select(freq_mhz=freq_mhz)
    kinds = _model_kinds(model, alpha)
    reports = []
    for f, los, block in split_by(campaign, by_los=split_los, pooled=pooled):
        fits = []
        for kind in kinds:
            data = block.regression_data(kind.variant)
            try:
                fits.append(fit(data, kind))
            except CollinearityError as exc:
                if model != "all":
                    raise
                _log(f"skipping {kind.label} for {f} MHz {getattr(los, 'value', 'ALL')}: {exc}")
        if fits:
            reports.append(build_report(block, fits, None if f is None else f / 1000.0, los))
    if not reports:
        raise CollinearityError("no model could be fitted")
    return reports


def cmd_fit(args) -> int:
    measurements = Path(args.measurements)
    system = _system_for(measurements, args.system)
    campaign = load_campaign(measurements, args.profiles, system, EffectiveEarth(args.k_factor))
    if campaign.censored:
        _log(f"censored {campaign.censored} samples below {system.effective_rx_level_dbm} dBm")
    reports = fit_reports(campaign, args.model, args.alpha, args.split_los, args.freq_mhz,
                          args.pooled)
    write_report(reports, args.out, "json")
    if args.table:
        write_report(reports, args.table, "text")
    sys.stdout.write(render_table(reports))
    return EXIT_OK


def cmd_predict(args) -> int:
    f, d = args.freq_ghz, args.dist_m
    core.check_distance(d)
    phi = args.phi_db
    if args.profile:
        if phi is not None:
            raise ValidationError("give either --phi-db or --profile, not both")
        profile = read_profile(args.profile)
        earth = EffectiveEarth(args.k_factor)
        compute = ske_diffraction if args.diffraction == "ske" else delta_bullington
        phi = compute(profile, f, earth)
    phi = 0.0 if phi is None else phi
    params = ModelParams(args.ple, args.alpha)
    total = core.ci_diff_predict(f, d, phi, params)
    intercept = float(core.intercept_db(f))
    terms = [
        ("intercept_db", intercept),
        ("distance_term_db", total - intercept - params.alpha * phi),
        ("diffraction_db", phi),
        ("diffraction_term_db", params.alpha * phi),
        ("path_loss_db", total),
    ]
    for name, value in terms:
        print(f"{name:<20} {value:.4f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.n < 1:
        raise ValidationError("--n must be >= 1")
    kind = core.CI if args.model == "ci" else core.ModelKind(
        _DIFF_VARIANT[args.model], core.AlphaMode.REGRESSED)
    truth = ModelParams(args.truth_ple, args.truth_alpha, args.sigma)
    campaign = synth_campaign(
        truth, kind, args.n, (args.dmin, args.dmax), args.freq_mhz / 1000.0,
        _TERRAIN[args.terrain], args.seed, EffectiveEarth(args.k_factor),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_campaign(campaign, out / MEASUREMENTS_FILE,
                  None if args.no_profiles else out / PROFILES_DIR)
    write_system(campaign.system, out / SYSTEM_FILE)
    _log(f"wrote {len(campaign)} samples to {out}")
    return EXIT_OK


def cmd_plotdata(args) -> int:
    measurements = Path(args.measurements)
    system = _system_for(measurements, args.system)
    campaign = load_campaign(measurements, args.profiles, system)
    text = plot_data(campaign, read_report(args.report))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ciprop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit CI models to a measurement campaign")
    p.add_argument("measurements")
    p.add_argument("profiles", nargs="?", help="directory of <id>.profile files")
    p.add_argument("--model", choices=["ci", "ci+ske", "ci+db", "all"], default="all")
    p.add_argument("--alpha", choices=["fixed1", "regress"], default="regress")
    p.add_argument("--split-los", action="store_true")
    p.add_argument("--freq-mhz", type=float)
    p.add_argument("--pooled", action="store_true",
                   help="fit all frequencies together with per-sample intercepts")
    p.add_argument("--system", help="key=value system parameter file")
    p.add_argument("--k-factor", type=float, default=4.0 / 3.0)
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--table", help="also write the text table here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="evaluate the CI(+diffraction) model")
    p.add_argument("--freq-ghz", type=float, required=True)
    p.add_argument("--dist-m", type=float, required=True)
    p.add_argument("--ple", type=float, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--phi-db", type=float)
    p.add_argument("--profile")
    p.add_argument("--diffraction", choices=["ske", "db"], default="ske")
    p.add_argument("--k-factor", type=float, default=4.0 / 3.0)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="generate a synthetic campaign")
    p.add_argument("--truth-ple", type=float, required=True)
    p.add_argument("--truth-alpha", type=float, default=0.0)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--model", choices=["ci", "ci+ske", "ci+db"], default="ci")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--terrain", choices=list(_TERRAIN), default="rolling")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--freq-mhz", type=float, default=1400.0)
    p.add_argument("--dmin", type=float, default=100.0)
    p.add_argument("--dmax", type=float, default=12_500.0)
    p.add_argument("--k-factor", type=float, default=4.0 / 3.0)
    p.add_argument("--no-profiles", action="store_true", help="skip writing profile files")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("plotdata", help="export scatter and model-curve data")
    p.add_argument("measurements")
    p.add_argument("report")
    p.add_argument("--profiles")
    p.add_argument("--system")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_VALIDATION
    try:
        return args.func(args)
    except CollinearityError as exc:
        _log(f"error: {exc}")
        return EXIT_NUMERICAL
    except (ValidationError, DomainError, ValueError) as exc:
        _log(f"error: {exc}")
        return EXIT_VALIDATION
    except OSError as exc:
        _log(f"error: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
