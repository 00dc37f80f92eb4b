"""Measurement campaigns: ingestion, link budget, terrain attachment, synthesis."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import CI, ModelKind, ModelParams, Variant, check_distance, intercept_db
from .errors import DomainError, ValidationError
from .regression import RegressionData
from .terrain import (
    DEFAULT_EARTH,
    EffectiveEarth,
    LosClass,
    TerrainProfile,
    classify_los,
    delta_bullington,
    dominant_edge,
    knife_edge_loss,
    read_profile,
    write_profile,
)

CSV_COLUMNS = (
    "id", "x_m", "y_m", "distance_m", "freq_mhz", "rx_power_dbm",
    "phi_ske_db", "phi_db_db", "los",
)
_OPTIONAL_COLUMNS = ("lat_deg", "lon_deg")
PROFILE_SUFFIX = ".profile"
MAX_SYNTH_DISTANCE_M = 12_500.0
SYNTH_SPACING_M = 30.0
TERRAIN_STYLES = ("flat", "single-hill", "rolling")


@dataclass(frozen=True)
class SystemParams:
    tx_power_dbm: float = 36.0
    lna_gain_db: float = 40.0
    noise_floor_dbm: float = -110.0
    effective_rx_level_dbm: float = -100.0
    frequencies_mhz: tuple = (1400.0, 2250.0)
    tx_height_m: float = 15.0
    rx_height_m: float = 2.0
    calibration_db: float = 0.0
    tx_lat_deg: Optional[float] = None
    tx_lon_deg: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "frequencies_mhz", tuple(float(f) for f in self.frequencies_mhz))
        if not math.isfinite(self.tx_power_dbm):
            raise ValidationError("tx_power_dbm must be finite")
        if not self.effective_rx_level_dbm > self.noise_floor_dbm:
            raise ValidationError("effective_rx_level_dbm must exceed noise_floor_dbm")
        if not self.frequencies_mhz or any(f <= 0 for f in self.frequencies_mhz):
            raise ValidationError("frequencies_mhz must be a non-empty list of positive values")


def read_system(path) -> SystemParams:
    """Read ``key=value`` lines (``#`` comments allowed) into SystemParams."""
    fields_ = {f.name: f for f in dataclasses.fields(SystemParams)}
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or key not in fields_:
            raise ValidationError(f"{path}:{lineno}: unknown setting {line!r}")
        try:
            if key == "frequencies_mhz":
                values[key] = tuple(float(v) for v in value.split(","))
            elif value.lower() == "none":
                values[key] = None
            else:
                values[key] = float(value)
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return SystemParams(**values)


def write_system(system: SystemParams, path) -> None:
    lines = []
    for f in dataclasses.fields(SystemParams):
        v = getattr(system, f.name)
        if f.name == "frequencies_mhz":
            v = ",".join(repr(x) for x in v)
        lines.append(f"{f.name}={v!r}" if isinstance(v, float) else f"{f.name}={v}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class MeasurementSample:
    id: str
    x_m: Optional[float]
    y_m: Optional[float]
    distance_m: float
    freq_ghz: float
    rx_power_dbm: float
    path_loss_db: float
    phi_ske_db: Optional[float] = None
    phi_db_db: Optional[float] = None
    los: Optional[LosClass] = None
    lat_deg: Optional[float] = None
    lon_deg: Optional[float] = None

    @property
    def freq_mhz(self) -> float:
        return round(self.freq_ghz * 1000.0, 9)

    def phi(self, variant: Variant) -> float:
        if variant is Variant.CI:
            return 0.0
        value = self.phi_ske_db if variant is Variant.CI_DIFF_SKE else self.phi_db_db
        if value is None:
            raise ValidationError(f"sample {self.id} has no diffraction loss attached")
        return value


@dataclass(frozen=True)
class Campaign:
    system: SystemParams
    samples: tuple
    provenance: str = ""
    censored: int = 0
    profiles: Mapping[str, TerrainProfile] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.samples:
            raise ValidationError("campaign has no samples")
        allowed = set(self.system.frequencies_mhz)
        for s in self.samples:
            if s.freq_mhz not in allowed:
                raise ValidationError(
                    f"sample {s.id}: frequency {s.freq_mhz} MHz is not one of the system frequencies"
                )

    def __len__(self):
        return len(self.samples)

    @property
    def frequencies_mhz(self):
        return sorted({s.freq_mhz for s in self.samples})

    def select(self, freq_mhz=None, los: Optional[LosClass] = None) -> "Campaign":
        keep = [
            s for s in self.samples
            if (freq_mhz is None or s.freq_mhz == float(freq_mhz))
            and (los is None or s.los is LosClass(los))
        ]
        if not keep:
            raise ValidationError(f"no samples at freq_mhz={freq_mhz} los={getattr(los, 'value', los)}")
        return dataclasses.replace(self, samples=keep)

    def regression_data(self, variant: Variant = Variant.CI) -> RegressionData:
        return RegressionData(
            10.0 * np.log10([s.distance_m for s in self.samples]),
            [s.phi(variant) for s in self.samples],
            [s.path_loss_db for s in self.samples],
            intercept_db(np.array([s.freq_ghz for s in self.samples])),
        )


def derive_path_loss(rx_power_dbm, system: SystemParams):
    """Path loss from received power; gains and losses live in ``calibration_db``."""
    return system.tx_power_dbm - rx_power_dbm + system.calibration_db


def _great_circle_m(lat1, lon1, lat2, lon2):
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp, dl = p2 - p1, math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * 6_371_000.0 * math.asin(math.sqrt(h))


def _optional_float(row, key, where):
    text = (row.get(key) or "").strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(f"{where}: column {key} is not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ValidationError(f"{where}: column {key} is not finite")
    return value


def _required_float(row, key, where):
    value = _optional_float(row, key, where)
    if value is None:
        raise ValidationError(f"{where}: missing value for {key}")
    return value


def _read_rows(path: Path):
    provenance = ""
    lines = []
    with path.open(encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.strip()
            if stripped.startswith("#"):
                text = stripped[1:].strip()
                if text.startswith("provenance:") and not provenance:
                    provenance = text[len("provenance:"):].strip()
                continue
            if stripped:
                lines.append((lineno, line))
    if not lines:
        raise ValidationError(f"{path}: no header row")
    reader = csv.DictReader(io.StringIO("".join(line for _, line in lines)))
    header = reader.fieldnames or []
    missing = [c for c in ("id", "freq_mhz", "rx_power_dbm") if c not in header]
    if missing:
        raise ValidationError(f"{path}:{lines[0][0]}: header lacks {', '.join(missing)}")
    rows = []
    for (lineno, _), row in zip(lines[1:], reader):
        if None in row or any(v is None for v in row.values()):
            raise ValidationError(f"{path}:{lineno}: wrong number of fields")
        rows.append((lineno, row))
    if not rows:
        raise ValidationError(f"{path}: no measurement rows")
    return rows, provenance


def _sample_distance(row, where, system: SystemParams):
    d = _optional_float(row, "distance_m", where)
    if d is not None:
        return d
    x, y = _optional_float(row, "x_m", where), _optional_float(row, "y_m", where)
    if x is not None and y is not None:
        horizontal = math.hypot(x, y)
    else:
        lat, lon = _optional_float(row, "lat_deg", where), _optional_float(row, "lon_deg", where)
        if None in (lat, lon, system.tx_lat_deg, system.tx_lon_deg):
            raise ValidationError(f"{where}: no distance_m and no usable position")
        horizontal = _great_circle_m(system.tx_lat_deg, system.tx_lon_deg, lat, lon)
    return math.hypot(horizontal, system.tx_height_m - system.rx_height_m)


def load_campaign(measurements_path, profiles_path=None, system: SystemParams = SystemParams(),
                  earth: EffectiveEarth = DEFAULT_EARTH) -> Campaign:
    """Load and validate a measurement CSV.

    Rows below the effective reception level are dropped and counted in
    ``Campaign.censored``. With ``profiles_path`` every sample's diffraction
    losses and LOS class are recomputed from ``<id>.profile``; otherwise the
    rows must carry ``phi_ske_db``, ``phi_db_db`` and ``los``.
    """
    path = Path(measurements_path)
    rows, provenance = _read_rows(path)
    samples, censored, seen = [], 0, set()
    for lineno, row in rows:
        where = f"{path}:{lineno}"
        sid = (row.get("id") or "").strip()
        if not sid:
            raise ValidationError(f"{where}: empty id")
        if sid in seen:
            raise ValidationError(f"{where}: duplicate sample id {sid}")
        seen.add(sid)
        rx = _required_float(row, "rx_power_dbm", where)
        freq_mhz = _required_float(row, "freq_mhz", where)
        distance = _sample_distance(row, where, system)
        try:
            check_distance(distance)
        except DomainError as exc:
            raise ValidationError(f"{where}: {exc}") from None
        los_text = (row.get("los") or "").strip().upper()
        if los_text and los_text not in LosClass.__members__:
            raise ValidationError(f"{where}: los must be LOS or NLOS, got {los_text!r}")
        phi_ske = _optional_float(row, "phi_ske_db", where)
        phi_db = _optional_float(row, "phi_db_db", where)
        if (phi_ske is not None and phi_ske < 0) or (phi_db is not None and phi_db < 0):
            raise ValidationError(f"{where}: diffraction losses must be >= 0")
        if rx < system.effective_rx_level_dbm:
            censored += 1
            continue
        samples.append(MeasurementSample(
            id=sid,
            x_m=_optional_float(row, "x_m", where),
            y_m=_optional_float(row, "y_m", where),
            distance_m=distance,
            freq_ghz=freq_mhz / 1000.0,
            rx_power_dbm=rx,
            path_loss_db=derive_path_loss(rx, system),
            phi_ske_db=phi_ske,
            phi_db_db=phi_db,
            los=LosClass(los_text) if los_text else None,
            lat_deg=_optional_float(row, "lat_deg", where),
            lon_deg=_optional_float(row, "lon_deg", where),
        ))
    if not samples:
        raise ValidationError(f"{path}: all {censored} rows fall below the effective reception level")
    campaign = Campaign(system, samples, provenance, censored)
    if profiles_path is not None:
        return attach_diffraction(campaign, Path(profiles_path), earth)
    for s in campaign.samples:
        if s.phi_ske_db is None or s.phi_db_db is None or s.los is None:
            raise ValidationError(
                f"sample {s.id}: no terrain profile given and phi_ske_db/phi_db_db/los not in the file"
            )
    return campaign


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, LosClass):
        return value.value
    return repr(float(value))


def save_campaign(campaign: Campaign, measurements_path, profiles_dir=None) -> None:
    """Write the campaign as CSV (and its profiles, if any, to ``profiles_dir``)."""
    columns = list(CSV_COLUMNS)
    if any(s.lat_deg is not None or s.lon_deg is not None for s in campaign.samples):
        columns += list(_OPTIONAL_COLUMNS)
    buf = io.StringIO()
    if campaign.provenance:
        buf.write(f"# provenance: {campaign.provenance}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for s in campaign.samples:
        record = {
            "id": s.id, "x_m": s.x_m, "y_m": s.y_m, "distance_m": s.distance_m,
            "freq_mhz": s.freq_mhz, "rx_power_dbm": s.rx_power_dbm,
            "phi_ske_db": s.phi_ske_db, "phi_db_db": s.phi_db_db, "los": s.los,
            "lat_deg": s.lat_deg, "lon_deg": s.lon_deg,
        }
        writer.writerow([s.id] + [_fmt(record[c]) for c in columns[1:]])
    Path(measurements_path).write_text(buf.getvalue(), encoding="utf-8")
    if profiles_dir is not None and campaign.profiles:
        profiles_dir = Path(profiles_dir)
        profiles_dir.mkdir(parents=True, exist_ok=True)
        for sid, profile in campaign.profiles.items():
            write_profile(profile, profiles_dir / f"{sid}{PROFILE_SUFFIX}")


def terrain_losses(profile: TerrainProfile, f_ghz: float, earth: EffectiveEarth = DEFAULT_EARTH):
    """(phi_sKE, phi_DB, LOS class) for one path."""
    edge = dominant_edge(profile, f_ghz, earth)
    ske = 0.0 if edge is None else knife_edge_loss(edge[1])
    return ske, delta_bullington(profile, f_ghz, earth), classify_los(profile, f_ghz, earth)


def _check_profile_matches(sample: MeasurementSample, profile: TerrainProfile):
    slack = 0.05 * sample.distance_m + 2 * SYNTH_SPACING_M
    if abs(profile.length_m - sample.distance_m) > slack:
        raise ValidationError(
            f"sample {sample.id}: profile length {profile.length_m:.1f} m does not match"
            f" distance {sample.distance_m:.1f} m"
        )


def attach_diffraction(campaign: Campaign, profiles, earth: EffectiveEarth = DEFAULT_EARTH) -> Campaign:
    """Fill phi_ske_db, phi_db_db and los of every sample from its profile.

    ``profiles`` is a mapping from sample id to TerrainProfile or a directory
    of ``<id>.profile`` files. Path loss values are left untouched.
    """
    if isinstance(profiles, (str, Path)):
        directory = Path(profiles)
        if not directory.is_dir():
            raise ValidationError(f"profile directory {directory} does not exist")
        loaded = {}
        for s in campaign.samples:
            p = directory / f"{s.id}{PROFILE_SUFFIX}"
            if not p.is_file():
                raise ValidationError(f"sample {s.id}: missing profile {p}")
            loaded[s.id] = read_profile(p)
        profiles = loaded
    out = []
    for s in campaign.samples:
        profile = profiles.get(s.id)
        if profile is None:
            raise ValidationError(f"sample {s.id}: no terrain profile")
        _check_profile_matches(s, profile)
        ske, db, los = terrain_losses(profile, s.freq_ghz, earth)
        out.append(dataclasses.replace(s, phi_ske_db=ske, phi_db_db=db, los=los))
    return dataclasses.replace(
        campaign, samples=out, profiles={s.id: profiles[s.id] for s in campaign.samples}
    )


def synth_terrain(length_m: float, style: str, rng: np.random.Generator,
                  tx_height_m: float = 15.0, rx_height_m: float = 2.0) -> TerrainProfile:
    """Synthetic profile with 30 m spacing; the transmitter sits on a hill
    except for ``flat`` terrain."""
    if style not in TERRAIN_STYLES:
        raise DomainError(f"unknown terrain style {style!r}; expected one of {TERRAIN_STYLES}")
    d = np.arange(0.0, length_m, SYNTH_SPACING_M)
    if length_m - d[-1] < 1e-6:
        d = d[:-1]
    d = np.append(d, length_m)
    if style == "flat":
        return TerrainProfile(d, np.zeros_like(d), tx_height_m, rx_height_m)
    tx_hill = rng.uniform(20.0, 60.0)
    h = tx_hill * np.exp(-((d / 600.0) ** 2))
    if style == "single-hill":
        centre = rng.uniform(0.25, 0.75) * length_m
        height = rng.uniform(0.0, 50.0)
        width = 0.04 * length_m + 60.0
        h += height * np.exp(-(((d - centre) / width) ** 2))
    else:
        amp = rng.uniform(3.0, 18.0, 4)
        wavelength = rng.uniform(500.0, 5000.0, 4)
        phase = rng.uniform(0.0, 2 * np.pi, 4)
        waves = amp[:, None] * np.sin(2 * np.pi * d[None, :] / wavelength[:, None] + phase[:, None])
        h += waves.sum(axis=0) - waves[:, 0].sum()
    return TerrainProfile(d, h, tx_height_m, rx_height_m)


def synthetic_system(freq_mhz: float) -> SystemParams:
    """An uncensored receiver: synthetic campaigns keep every sample."""
    return SystemParams(noise_floor_dbm=-400.0, effective_rx_level_dbm=-300.0,
                        frequencies_mhz=(freq_mhz,))


def synth_campaign(truth: ModelParams, kind: ModelKind = CI, n_samples: int = 1000,
                   distance_range_m=(100.0, MAX_SYNTH_DISTANCE_M), freq_ghz: float = 1.4,
                   terrain_style: str = "rolling", seed: int = 0,
                   earth: EffectiveEarth = DEFAULT_EARTH) -> Campaign:
    """Generate a campaign whose path loss follows ``kind`` with parameters ``truth``.

    Distances are log-uniform over ``distance_range_m``; each sample gets its
    own terrain profile and diffraction losses, and the measured path loss is
    the model mean plus Gaussian shadow fading with ``truth.sigma_db``.
    """
    n_samples = int(n_samples)
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    lo, hi = (float(v) for v in distance_range_m)
    if not 1.0 <= lo <= hi <= MAX_SYNTH_DISTANCE_M:
        raise DomainError(f"distance range must satisfy 1 <= lo <= hi <= {MAX_SYNTH_DISTANCE_M:g} m")
    if terrain_style not in TERRAIN_STYLES:
        raise DomainError(f"unknown terrain style {terrain_style!r}; expected one of {TERRAIN_STYLES}")

    system = synthetic_system(round(freq_ghz * 1000.0, 9))
    rng = np.random.default_rng(seed)
    distances = np.exp(rng.uniform(math.log(lo), math.log(hi), n_samples))
    azimuth = rng.uniform(0.0, 2 * np.pi, n_samples)
    terrain_rngs = rng.spawn(n_samples)
    shadow = truth.sigma_db * rng.standard_normal(n_samples)

    a = float(intercept_db(freq_ghz))
    samples, profiles = [], {}
    for i in range(n_samples):
        sid = f"S{i:05d}"
        dist = float(distances[i])
        profile = synth_terrain(dist, terrain_style, terrain_rngs[i],
                                system.tx_height_m, system.rx_height_m)
        ske, db, los = terrain_losses(profile, freq_ghz, earth)
        phi = {Variant.CI: 0.0, Variant.CI_DIFF_SKE: ske, Variant.CI_DIFF_DB: db}[kind.variant]
        alpha = 0.0 if kind.variant is Variant.CI else truth.alpha
        pl = a + 10.0 * truth.ple * math.log10(dist) + alpha * phi + float(shadow[i])
        rx = system.tx_power_dbm + system.calibration_db - pl
        samples.append(MeasurementSample(
            id=sid,
            x_m=dist * math.cos(azimuth[i]),
            y_m=dist * math.sin(azimuth[i]),
            distance_m=dist,
            freq_ghz=freq_ghz,
            rx_power_dbm=rx,
            path_loss_db=derive_path_loss(rx, system),
            phi_ske_db=ske,
            phi_db_db=db,
            los=los,
        ))
        profiles[sid] = profile
    provenance = (
        f"synthetic kind={kind.label} ple={truth.ple!r} alpha={truth.alpha!r}"
        f" sigma_db={truth.sigma_db!r} n={n_samples} terrain={terrain_style}"
        f" distance_m={lo!r}..{hi!r} freq_ghz={freq_ghz!r} seed={seed}"
    )
    return Campaign(system, samples, provenance, 0, profiles)


def split_by(campaign: Campaign, by_los: bool = False, pooled: bool = False) -> Sequence:
    """Partition into (freq_mhz or None, los or None, sub-campaign) blocks."""
    freqs = [None] if pooled else campaign.frequencies_mhz
    blocks = []
    for f in freqs:
        sub = campaign if f is None else campaign.select(freq_mhz=f)
        if not by_los:
            blocks.append((f, None, sub))
            continue
        for los in (LosClass.LOS, LosClass.NLOS):
            if any(s.los is los for s in sub.samples):
                blocks.append((f, los, sub.select(los=los)))
    return blocks
