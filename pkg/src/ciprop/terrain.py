"""Terrain diffraction: single knife-edge and delta-Bullington.

Profiles are handled in SI units (metres). The empirical constants of the ITU
procedures are stated per kilometre; the conversions are folded into the
expressions below, e.g. the Earth bulge ``500 C d (D - d)`` with distances in
km and ``C`` in 1/km becomes ``d (D - d) / (2 a)`` in metres.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .core import SPEED_OF_LIGHT, check_frequency
from .errors import DomainError, ValidationError

EARTH_RADIUS_M = 6_371_000.0
NU_THRESHOLD = -0.78

# "land, average ground" electrical constants, horizontal polarization
GROUND_PERMITTIVITY = 22.0
GROUND_CONDUCTIVITY = 0.003  # S/m

MIN_EFFECTIVE_HEIGHT_M = 1.0


class LosClass(str, enum.Enum):
    LOS = "LOS"
    NLOS = "NLOS"


class NoInteriorPointsWarning(UserWarning):
    pass


@dataclass(frozen=True)
class EffectiveEarth:
    """Effective Earth radius as a multiple of 6371 km; ``math.inf`` means flat Earth."""

    k_factor: float = 4.0 / 3.0

    def __post_init__(self):
        if not self.k_factor > 0:
            raise DomainError(f"k_factor must be positive, got {self.k_factor}")

    @property
    def radius_m(self) -> float:
        return self.k_factor * EARTH_RADIUS_M


DEFAULT_EARTH = EffectiveEarth()


@dataclass(frozen=True, eq=False)
class TerrainProfile:
    """Ground elevations sampled along the path from TX (distance 0) to RX.

    ``distances_m`` and ``elevations_m`` are read-only arrays; antenna heights
    are above local ground at the first and last sample respectively.
    """

    distances_m: np.ndarray
    elevations_m: np.ndarray
    tx_height_m: float
    rx_height_m: float

    def __post_init__(self):
        d = np.array(self.distances_m, dtype=float)
        h = np.array(self.elevations_m, dtype=float)
        if d.ndim != 1 or d.shape != h.shape:
            raise ValidationError("distances and elevations must be 1-D arrays of equal length")
        if d.size < 2:
            raise ValidationError("a terrain profile needs at least 2 points")
        if d[0] != 0.0:
            raise ValidationError(f"first profile distance must be 0, got {d[0]}")
        if not np.all(np.diff(d) > 0):
            raise ValidationError("profile distances must be strictly increasing")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(h))):
            raise ValidationError("profile contains non-finite values")
        for name in ("tx_height_m", "rx_height_m"):
            v = float(getattr(self, name))
            if not (v > 0 and math.isfinite(v)):
                raise ValidationError(f"{name} must be positive, got {v}")
            object.__setattr__(self, name, v)
        d.flags.writeable = False
        h.flags.writeable = False
        object.__setattr__(self, "distances_m", d)
        object.__setattr__(self, "elevations_m", h)

    @classmethod
    def from_points(cls, points, tx_height_m, rx_height_m):
        arr = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], tx_height_m, rx_height_m)

    @property
    def length_m(self) -> float:
        return float(self.distances_m[-1])

    @property
    def tx_amsl(self) -> float:
        return float(self.elevations_m[0]) + self.tx_height_m

    @property
    def rx_amsl(self) -> float:
        return float(self.elevations_m[-1]) + self.rx_height_m

    def __eq__(self, other):
        if not isinstance(other, TerrainProfile):
            return NotImplemented
        return (
            self.tx_height_m == other.tx_height_m
            and self.rx_height_m == other.rx_height_m
            and np.array_equal(self.distances_m, other.distances_m)
            and np.array_equal(self.elevations_m, other.elevations_m)
        )

    __hash__ = None


def _wavelength(f_ghz: float) -> float:
    return SPEED_OF_LIGHT / (check_frequency(f_ghz) * 1e9)


def _clearance(d, g, hts, hrs, radius_m):
    """Height of points (with Earth bulge) above the straight TX-RX antenna line."""
    total = d[-1]
    return g + d * (total - d) / (2.0 * radius_m) - (hts * (total - d) + hrs * d) / total


def _interior(profile: TerrainProfile):
    return profile.distances_m[1:-1], profile.elevations_m[1:-1]


def interior_nu(profile: TerrainProfile, f_ghz: float, earth: EffectiveEarth = DEFAULT_EARTH):
    """Fresnel-Kirchhoff parameter of every interior profile point."""
    lam = _wavelength(f_ghz)
    total = profile.length_m
    di, _ = _interior(profile)
    h = _clearance(profile.distances_m, profile.elevations_m, profile.tx_amsl,
                   profile.rx_amsl, earth.radius_m)[1:-1]
    return h * np.sqrt(2.0 * total / (lam * di * (total - di)))


def knife_edge_nu(
    profile: TerrainProfile, index: int, f_ghz: float, earth: EffectiveEarth = DEFAULT_EARTH
) -> float:
    n = profile.distances_m.size
    if not 0 < index < n - 1:
        raise DomainError(f"index {index} is not an interior point of a {n}-point profile")
    return float(interior_nu(profile, f_ghz, earth)[index - 1])


def knife_edge_loss(nu):
    """Knife-edge loss J(nu) in dB, zero for nu <= -0.78 and never negative."""
    nu_arr = np.asarray(nu, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        j = 6.9 + 20.0 * np.log10(np.sqrt((nu_arr - 0.1) ** 2 + 1.0) + nu_arr - 0.1)
    j = np.where(nu_arr > NU_THRESHOLD, np.maximum(j, 0.0), 0.0)
    return float(j) if j.ndim == 0 else j


def dominant_edge(profile: TerrainProfile, f_ghz: float, earth: EffectiveEarth = DEFAULT_EARTH):
    """Index and nu of the interior point with the largest nu, or None.

    Ties resolve to the point closest to the transmitter.
    """
    nus = interior_nu(profile, f_ghz, earth)
    if nus.size == 0:
        return None
    k = int(np.argmax(nus))
    return k + 1, float(nus[k])


def ske_diffraction(
    profile: TerrainProfile, f_ghz: float, earth: EffectiveEarth = DEFAULT_EARTH
) -> float:
    edge = dominant_edge(profile, f_ghz, earth)
    if edge is None:
        warnings.warn("profile has no interior points; diffraction taken as 0 dB",
                      NoInteriorPointsWarning, stacklevel=2)
        return 0.0
    return knife_edge_loss(edge[1])


def _bullington(d, g, hts, hrs, radius_m, lam):
    total = d[-1]
    di, gi = d[1:-1], g[1:-1]
    luc = 0.0
    if di.size:
        bulge = di * (total - di) / (2.0 * radius_m)
        s_tim = np.max((gi + bulge - hts) / di)
        s_tr = (hrs - hts) / total
        if s_tim < s_tr:
            nu = (gi + bulge - (hts * (total - di) + hrs * di) / total) * np.sqrt(
                2.0 * total / (lam * di * (total - di))
            )
            nu_b = np.max(nu)
        else:
            s_rim = np.max((gi + bulge - hrs) / (total - di))
            d_bp = (hrs - hts + s_rim * total) / (s_tim + s_rim)
            nu_b = (hts + s_tim * d_bp - (hts * (total - d_bp) + hrs * d_bp) / total) * math.sqrt(
                2.0 * total / (lam * d_bp * (total - d_bp))
            )
        luc = knife_edge_loss(nu_b)
    return float(luc + (1.0 - math.exp(-luc / 6.0)) * (10.0 + 0.02 * total / 1000.0))


def bullington_loss(
    profile: TerrainProfile, f_ghz: float, earth: EffectiveEarth = DEFAULT_EARTH
) -> float:
    """Bullington diffraction loss over the profile, with the empirical
    distance-dependent extension applied to the single-edge loss."""
    return _bullington(
        profile.distances_m,
        profile.elevations_m,
        profile.tx_amsl,
        profile.rx_amsl,
        earth.radius_m,
        _wavelength(f_ghz),
    )


def _height_gain(b, k):
    if b > 2.0:
        g = 17.6 * math.sqrt(b - 1.1) - 5.0 * math.log10(b - 1.1) - 8.0
    else:
        g = 20.0 * math.log10(b + 0.1 * b**3)
    return max(g, 2.0 + 20.0 * math.log10(k))


def first_term_loss(d_km, h_te, h_re, radius_km, f_ghz):
    """First-term spherical-Earth diffraction loss (land, horizontal pol.)."""
    eps, sigma = GROUND_PERMITTIVITY, GROUND_CONDUCTIVITY
    k = 0.036 * (radius_km * f_ghz) ** (-1 / 3) * ((eps - 1) ** 2 + (18 * sigma / f_ghz) ** 2) ** -0.25
    beta = (1 + 1.6 * k**2 + 0.67 * k**4) / (1 + 4.5 * k**2 + 1.53 * k**4)
    x = 21.88 * beta * (f_ghz / radius_km**2) ** (1 / 3) * d_km
    y_scale = 0.9575 * beta * (f_ghz**2 / radius_km) ** (1 / 3)
    if x >= 1.6:
        fx = 11.0 + 10.0 * math.log10(x) - 17.6 * x
    else:
        fx = -20.0 * math.log10(x) - 5.6488 * x**1.425
    gt = _height_gain(beta * y_scale * h_te, k)
    gr = _height_gain(beta * y_scale * h_re, k)
    return -fx - gt - gr


def marginal_los_distance_m(h_te, h_re, earth: EffectiveEarth = DEFAULT_EARTH) -> float:
    return math.sqrt(2.0 * earth.radius_m) * (math.sqrt(h_te) + math.sqrt(h_re))


def spherical_earth_loss(
    d_m: float, f_ghz: float, h_te: float, h_re: float, earth: EffectiveEarth = DEFAULT_EARTH
) -> float:
    """Smooth spherical-Earth diffraction loss; 0 dB up to the radio horizon."""
    if not (h_te > 0 and h_re > 0):
        raise DomainError(f"effective antenna heights must be positive, got {h_te}, {h_re}")
    f_ghz = check_frequency(f_ghz)
    if d_m <= marginal_los_distance_m(h_te, h_re, earth):
        return 0.0
    loss = first_term_loss(d_m / 1000.0, h_te, h_re, earth.radius_m / 1000.0, f_ghz)
    return max(loss, 0.0)


def smooth_surface_heights(profile: TerrainProfile):
    """Heights (amsl) of the least-squares smooth surface at TX and RX, as
    used by the diffraction model: lowered under significant obstructions and
    never above the ground at either terminal."""
    d, h = profile.distances_m, profile.elevations_m
    total = profile.length_m
    dd = np.diff(d)
    v1 = float(np.sum(dd * (h[1:] + h[:-1])))
    v2 = float(np.sum(dd * (h[1:] * (2 * d[1:] + d[:-1]) + h[:-1] * (d[1:] + 2 * d[:-1]))))
    hst = (2 * v1 * total - v2) / total**2
    hsr = (v2 - v1 * total) / total**2

    di, hi = _interior(profile)
    if di.size:
        excess = hi - (profile.tx_amsl * (total - di) + profile.rx_amsl * di) / total
        h_obs = float(np.max(excess))
    else:
        h_obs = 0.0
    if h_obs > 0:
        a_t = float(np.max(excess / di))
        a_r = float(np.max(excess / (total - di)))
        hst -= h_obs * a_t / (a_t + a_r)
        hsr -= h_obs * a_r / (a_t + a_r)
    return min(hst, float(h[0])), min(hsr, float(h[-1]))


def effective_heights(profile: TerrainProfile):
    """Antenna heights above the smooth surface, clamped to >= 1 m."""
    hstd, hsrd = smooth_surface_heights(profile)
    return (
        max(profile.tx_amsl - hstd, MIN_EFFECTIVE_HEIGHT_M),
        max(profile.rx_amsl - hsrd, MIN_EFFECTIVE_HEIGHT_M),
    )


class DeltaBullington(NamedTuple):
    loss_db: float
    bull_actual_db: float
    bull_smooth_db: float
    spherical_db: float


def delta_bullington_parts(
    profile: TerrainProfile, f_ghz: float, earth: EffectiveEarth = DEFAULT_EARTH
) -> DeltaBullington:
    lam = _wavelength(f_ghz)
    d = profile.distances_m
    actual = _bullington(d, profile.elevations_m, profile.tx_amsl, profile.rx_amsl,
                         earth.radius_m, lam)
    h_te, h_re = effective_heights(profile)
    smooth = _bullington(d, np.zeros_like(d), h_te, h_re, earth.radius_m, lam)
    sph = spherical_earth_loss(profile.length_m, f_ghz, h_te, h_re, earth)
    return DeltaBullington(actual + max(sph - smooth, 0.0), actual, smooth, sph)


def delta_bullington(
    profile: TerrainProfile, f_ghz: float, earth: EffectiveEarth = DEFAULT_EARTH
) -> float:
    return delta_bullington_parts(profile, f_ghz, earth).loss_db


def classify_los(
    profile: TerrainProfile,
    f_ghz: float,
    earth: EffectiveEarth = DEFAULT_EARTH,
    criterion: str = "geometric",
) -> LosClass:
    """LOS/NLOS class of a path.

    ``"geometric"``: NLOS when any interior point (with Earth bulge) rises
    strictly above the direct antenna-to-antenna line.
    ``"fresnel60"``: NLOS when any interior point intrudes into 60 % of the
    first Fresnel zone radius around that line.
    """
    di, _ = _interior(profile)
    if di.size == 0:
        return LosClass.LOS
    d = profile.distances_m
    h = _clearance(d, profile.elevations_m, profile.tx_amsl, profile.rx_amsl, earth.radius_m)[1:-1]
    if criterion == "geometric":
        blocked = h > 0
    elif criterion == "fresnel60":
        total = profile.length_m
        f1 = np.sqrt(_wavelength(f_ghz) * di * (total - di) / total)
        blocked = h > -0.6 * f1
    else:
        raise DomainError(f"unknown LOS criterion {criterion!r}")
    return LosClass.NLOS if bool(np.any(blocked)) else LosClass.LOS


def read_profile(path) -> TerrainProfile:
    """Read a profile file: a ``# tx_height_m=.. rx_height_m=..`` header, then
    tab-separated ``distance_m elevation_m`` lines."""
    path = Path(path)
    heights = {}
    points = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    key, sep, value = token.partition("=")
                    if sep and key in ("tx_height_m", "rx_height_m"):
                        heights[key] = _parse_float(value, path, lineno)
                continue
            fields = line.split("\t") if "\t" in line else line.split()
            if len(fields) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 2 fields, got {len(fields)}")
            points.append((_parse_float(fields[0], path, lineno), _parse_float(fields[1], path, lineno)))
    missing = {"tx_height_m", "rx_height_m"} - heights.keys()
    if missing:
        raise ValidationError(f"{path}: header lacks {', '.join(sorted(missing))}")
    try:
        return TerrainProfile.from_points(points, heights["tx_height_m"], heights["rx_height_m"])
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def write_profile(profile: TerrainProfile, path) -> None:
    lines = [f"# tx_height_m={profile.tx_height_m!r} rx_height_m={profile.rx_height_m!r}"]
    lines.extend(
        f"{float(d)!r}\t{float(h)!r}"
        for d, h in zip(profile.distances_m, profile.elevations_m)
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_float(text, path, lineno):
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(f"{path}:{lineno}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ValidationError(f"{path}:{lineno}: non-finite value {text!r}")
    return value
