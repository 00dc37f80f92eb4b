"""Fit reports (JSON and aligned text) and plot-ready data export."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .campaign import Campaign
from .core import AlphaMode, ModelKind, ModelParams, Variant, intercept_db
from .errors import ValidationError
from .regression import FitResult
from .terrain import LosClass

CURVE_POINTS = 50
CURVE_RANGE_M = (1.0, 12_500.0)


@dataclass(frozen=True)
class ReportRow:
    model: str
    alpha_mode: str
    ple: float
    alpha: Optional[float]
    sigma_db: float
    n: int

    @classmethod
    def from_fit(cls, fit: FitResult) -> "ReportRow":
        is_ci = fit.kind.variant is Variant.CI
        return cls(
            model=fit.kind.variant.value,
            alpha_mode=fit.kind.alpha_mode.value,
            ple=fit.params.ple,
            alpha=None if is_ci else fit.params.alpha,
            sigma_db=fit.params.sigma_db,
            n=fit.n_samples,
        )

    @property
    def kind(self) -> ModelKind:
        return ModelKind(Variant(self.model), AlphaMode(self.alpha_mode))

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.ple, self.alpha or 0.0, self.sigma_db)

    @property
    def key(self) -> str:
        return self.kind.label


@dataclass(frozen=True)
class FitReport:
    """One block of fitted models for a campaign subset (one frequency and
    LOS class), laid out like a row group of a PLE/STD table."""

    campaign: dict
    frequency_ghz: Optional[float]
    los_class: str
    rows: List[ReportRow] = field(default_factory=list)

    def __post_init__(self):
        if not self.rows:
            raise ValidationError("a fit report needs at least one row")
        object.__setattr__(self, "rows", [
            r if isinstance(r, ReportRow) else ReportRow(**r) for r in self.rows
        ])


def campaign_digest(campaign: Campaign) -> dict:
    los = [s.los for s in campaign.samples]
    return {
        "provenance": campaign.provenance,
        "n": len(campaign),
        "n_los": sum(x is LosClass.LOS for x in los),
        "n_nlos": sum(x is LosClass.NLOS for x in los),
        "censored": campaign.censored,
    }


def build_report(campaign: Campaign, fits: Sequence[FitResult], frequency_ghz=None,
                 los: Optional[LosClass] = None) -> FitReport:
    return FitReport(
        campaign=campaign_digest(campaign),
        frequency_ghz=frequency_ghz,
        los_class="ALL" if los is None else LosClass(los).value,
        rows=[ReportRow.from_fit(f) for f in fits],
    )


def reports_to_json(reports: Sequence[FitReport]) -> str:
    return json.dumps([asdict(r) for r in reports], indent=2) + "\n"


def render_table(reports: Sequence[FitReport]) -> str:
    header = ("Model", "Alpha mode", "PLE", "STD [dB]", "alpha", "N")
    lines = []
    for rep in reports:
        freq = "pooled" if rep.frequency_ghz is None else f"{rep.frequency_ghz * 1000:g} MHz"
        lines.append(f"{freq}, {rep.los_class} ({rep.campaign['n']} samples)")
        body = [
            (r.model, r.alpha_mode, f"{r.ple:.2f}", f"{r.sigma_db:.2f}",
             "-" if r.alpha is None else f"{r.alpha:.2f}", str(r.n))
            for r in rep.rows
        ]
        widths = [max(len(x[i]) for x in [header] + body) for i in range(len(header))]
        fmt = lambda cols: "  ".join(c.ljust(w) if i < 2 else c.rjust(w)  # noqa: E731
                                     for i, (c, w) in enumerate(zip(cols, widths)))
        lines.append(fmt(header))
        lines.append("  ".join("-" * w for w in widths))
        lines.extend(fmt(b) for b in body)
        lines.append("")
    return "\n".join(lines)


def write_report(reports, path, format: str = "json") -> None:
    """Write one or more reports as a JSON array (``json``) or an aligned table (``text``)."""
    if isinstance(reports, FitReport):
        reports = [reports]
    if not reports:
        raise ValidationError("nothing to report")
    if format == "json":
        text = reports_to_json(reports)
    elif format == "text":
        text = render_table(reports)
    else:
        raise ValidationError(f"unknown report format {format!r}")
    Path(path).write_text(text, encoding="utf-8")


def read_report(path) -> List[FitReport]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not a JSON report: {exc}") from None
    if isinstance(data, dict):
        data = [data]
    try:
        return [FitReport(**block) for block in data]
    except TypeError as exc:
        raise ValidationError(f"{path}: malformed report: {exc}") from None


def _block_for(sample, reports):
    for rep in reports:
        if rep.frequency_ghz is not None and not math.isclose(rep.frequency_ghz, sample.freq_ghz):
            continue
        if rep.los_class != "ALL" and (sample.los is None or sample.los.value != rep.los_class):
            continue
        return rep
    return None


def plot_data(campaign: Campaign, reports: Sequence[FitReport]) -> str:
    """CSV with one row per sample and ``CURVE_POINTS`` rows per fitted model.

    Sample rows carry log10 distance, measured path loss and, for every model,
    the prediction and residual (measured - predicted). Curve rows sample each
    model at log-spaced distances with the diffraction term set to zero.
    """
    keys = []
    for rep in reports:
        for r in rep.rows:
            if r.key not in keys:
                keys.append(r.key)
    for rep in reports:
        freq_ok = rep.frequency_ghz is None or any(
            math.isclose(rep.frequency_ghz, s.freq_ghz) for s in campaign.samples)
        if not freq_ok:
            raise ValidationError(
                f"report block at {rep.frequency_ghz} GHz has no samples in the campaign")

    columns = ["record", "block", "model", "id", "distance_m", "log10_distance",
               "measured_pl_db"]
    for k in keys:
        columns += [f"pred_{k}", f"resid_{k}"]
    columns.append("curve_pl_db")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    fmt = lambda v: "" if v is None else repr(float(v))  # noqa: E731
    for s in campaign.samples:
        rep = _block_for(s, reports)
        if rep is None:
            raise ValidationError(f"sample {s.id} matches no report block")
        x1 = 10.0 * math.log10(s.distance_m)
        a = float(intercept_db(s.freq_ghz))
        preds = {}
        for r in rep.rows:
            preds[r.key] = a + r.ple * x1 + (r.alpha or 0.0) * s.phi(r.kind.variant)
        row = ["sample", _block_name(rep), "", s.id, fmt(s.distance_m),
               fmt(math.log10(s.distance_m)), fmt(s.path_loss_db)]
        for k in keys:
            p = preds.get(k)
            row += [fmt(p), fmt(None if p is None else s.path_loss_db - p)]
        row.append("")
        writer.writerow(row)

    grid = np.logspace(math.log10(CURVE_RANGE_M[0]), math.log10(CURVE_RANGE_M[1]), CURVE_POINTS)
    for rep in reports:
        freqs = ([rep.frequency_ghz] if rep.frequency_ghz is not None
                 else sorted({s.freq_ghz for s in campaign.samples}))
        for f in freqs:
            a = float(intercept_db(f))
            for r in rep.rows:
                for d in grid:
                    row = ["curve", _block_name(rep, f), r.key, "", fmt(d),
                           fmt(math.log10(d)), ""]
                    row += [""] * (2 * len(keys))
                    row.append(fmt(a + r.ple * 10.0 * math.log10(d)))
                    writer.writerow(row)
    return buf.getvalue()


def _block_name(rep: FitReport, freq_ghz=None) -> str:
    f = rep.frequency_ghz if rep.frequency_ghz is not None else freq_ghz
    freq = "pooled" if f is None else f"{f * 1000:g}MHz"
    return f"{freq}/{rep.los_class}"
