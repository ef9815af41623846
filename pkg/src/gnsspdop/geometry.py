"""Coordinate handling and construction of the line-of-sight design matrix.

All public functions take and return angles in degrees; radians are used
internally only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateGeometry, InsufficientSatellites, ValidationError

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_B = WGS84_A * (1.0 - WGS84_F)
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)

DEFAULT_MASK_ELEVATION = 5.0
MIN_SEPARATION = 1.0  # m

_GEODETIC_MAX_ITER = 10
_GEODETIC_TOL = 1e-12  # rad


@dataclass(frozen=True)
class EcefPosition:
    """Earth-centered earth-fixed position in meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValidationError(f"EcefPosition.{name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, xyz) -> "EcefPosition":
        x, y, z = np.asarray(xyz, dtype=float).reshape(3)
        return cls(float(x), float(y), float(z))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class GeodeticPosition:
    """WGS-84 latitude/longitude in degrees and ellipsoidal height in meters."""

    latitude: float
    longitude: float
    height: float = 0.0

    def __post_init__(self):
        lat, lon, h = float(self.latitude), float(self.longitude), float(self.height)
        if not -90.0 <= lat <= 90.0:
            raise ValidationError(f"latitude must lie in [-90, 90], got {lat}")
        if not -180.0 < lon <= 180.0:
            raise ValidationError(f"longitude must lie in (-180, 180], got {lon}")
        if not math.isfinite(h):
            raise ValidationError(f"height must be finite, got {h}")
        object.__setattr__(self, "latitude", lat)
        object.__setattr__(self, "longitude", lon)
        object.__setattr__(self, "height", h)


@dataclass(frozen=True, eq=False)
class LosVector:
    """Unit line-of-sight vector from receiver to satellite (ECEF components)."""

    n: np.ndarray
    elevation: float
    azimuth: float


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """S x 3 matrix of unit line-of-sight rows for the visible satellites.

    ``indices`` maps each row back to its position in the candidate satellite
    list that was passed to :func:`build_design_matrix`; per-satellite
    covariance inputs are subset with it.  ``elevation`` and ``azimuth`` are
    NaN for matrices assembled directly from rows.
    """

    matrix: np.ndarray
    satellite_ids: tuple
    elevation: np.ndarray
    azimuth: np.ndarray
    indices: tuple
    receiver: EcefPosition | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[1] != 3:
            raise ValidationError(f"design matrix must be S x 3, got shape {m.shape}")
        if len(self.satellite_ids) != m.shape[0]:
            raise ValidationError("satellite_ids length does not match the number of rows")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def S(self) -> int:
        return self.matrix.shape[0]

    @property
    def rows(self) -> list[LosVector]:
        return [
            LosVector(self.matrix[i].copy(), float(self.elevation[i]), float(self.azimuth[i]))
            for i in range(self.S)
        ]

    @classmethod
    def from_rows(cls, rows, satellite_ids: Sequence | None = None, normalize: bool = False):
        """Wrap an explicit S x 3 array (e.g. analytic test geometries)."""
        m = np.atleast_2d(np.asarray(rows, dtype=float))
        norms = np.linalg.norm(m, axis=1)
        if normalize:
            if np.any(norms == 0):
                raise DegenerateGeometry("zero-length row in design matrix")
            m = m / norms[:, None]
        elif np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValidationError("design matrix rows must be unit vectors")
        ids = tuple(satellite_ids) if satellite_ids is not None else tuple(range(len(m)))
        nan = np.full(len(m), np.nan)
        return cls(m, ids, nan, nan.copy(), tuple(range(len(m))))


def _xyz(p) -> np.ndarray:
    if isinstance(p, EcefPosition):
        return p.as_array()
    return np.asarray(p, dtype=float).reshape(3)


def as_matrix(A) -> np.ndarray:
    """Return the S x 3 array behind a DesignMatrix or array-like."""
    if isinstance(A, DesignMatrix):
        return A.matrix
    m = np.atleast_2d(np.asarray(A, dtype=float))
    if m.ndim != 2 or m.shape[1] != 3:
        raise ValidationError(f"design matrix must be S x 3, got shape {m.shape}")
    return m


def geodetic_to_ecef(p: GeodeticPosition) -> EcefPosition:
    lat = math.radians(p.latitude)
    lon = math.radians(p.longitude)
    sin_lat = math.sin(lat)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    x = (n + p.height) * math.cos(lat) * math.cos(lon)
    y = (n + p.height) * math.cos(lat) * math.sin(lon)
    z = (n * (1.0 - WGS84_E2) + p.height) * sin_lat
    return EcefPosition(x, y, z)


def ecef_to_geodetic(p) -> GeodeticPosition:
    """Iterative inverse of :func:`geodetic_to_ecef`.

    Iterates tan(lat) = (z + e^2 N sin(lat)) / p from the spherical guess; the
    height uses the form that stays well conditioned near the poles.
    """
    x, y, z = _xyz(p)
    rho = math.hypot(x, y)
    lon = math.atan2(y, x) if rho > 0 else 0.0
    lat = math.atan2(z, rho * (1.0 - WGS84_E2))
    for _ in range(_GEODETIC_MAX_ITER):
        sin_lat = math.sin(lat)
        n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
        new_lat = math.atan2(z + WGS84_E2 * n * sin_lat, rho)
        converged = abs(new_lat - lat) < _GEODETIC_TOL
        lat = new_lat
        if converged:
            break
    sin_lat, cos_lat = math.sin(lat), math.cos(lat)
    h = rho * cos_lat + z * sin_lat - WGS84_A * math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    lon_deg = math.degrees(lon)
    if lon_deg <= -180.0:
        lon_deg += 360.0
    return GeodeticPosition(math.degrees(lat), lon_deg, h)


def enu_rotation(latitude: float, longitude: float) -> np.ndarray:
    """Rows are the east, north and up unit vectors (ECEF) at a geodetic point.

    Angles in degrees.
    """
    lat, lon = math.radians(latitude), math.radians(longitude)
    sl, cl = math.sin(lat), math.cos(lat)
    so, co = math.sin(lon), math.cos(lon)
    return np.array([
        [-so, co, 0.0],
        [-sl * co, -sl * so, cl],
        [cl * co, cl * so, sl],
    ])


def ecef_to_enu(origin, target) -> np.ndarray:
    o, t = _xyz(origin), _xyz(target)
    d = t - o
    if not np.any(d):
        raise DegenerateGeometry("ENU conversion requires origin != target")
    g = ecef_to_geodetic(o)
    return enu_rotation(g.latitude, g.longitude) @ d


def _elev_azim(enu_unit: np.ndarray) -> tuple[float, float]:
    e, n, u = enu_unit
    elev = math.degrees(math.atan2(u, math.hypot(e, n)))
    azim = math.degrees(math.atan2(e, n)) % 360.0
    if azim >= 360.0:  # -0.0 % 360 and tiny negatives round up
        azim = 0.0
    return elev, azim


def line_of_sight(receiver, satellite) -> LosVector:
    r, s = _xyz(receiver), _xyz(satellite)
    d = s - r
    dist = float(np.linalg.norm(d))
    if dist < MIN_SEPARATION:
        raise DegenerateGeometry(f"receiver and satellite are {dist:.3g} m apart (< {MIN_SEPARATION} m)")
    n = d / dist
    g = ecef_to_geodetic(r)
    elev, azim = _elev_azim(enu_rotation(g.latitude, g.longitude) @ n)
    return LosVector(n, elev, azim)


def build_design_matrix(
    receiver,
    satellites: Iterable[tuple],
    mask_elevation: float = DEFAULT_MASK_ELEVATION,
) -> DesignMatrix:
    """Assemble A from the satellites at or above the elevation mask.

    Parameters
    ----------
    receiver : EcefPosition or array-like
        Modeled receiver position; the design matrix is evaluated here.
    satellites : iterable of (id, EcefPosition)
        Candidate satellites, in the order rows should appear.
    mask_elevation : float
        Elevation cutoff in degrees (inclusive).

    Raises
    ------
    InsufficientSatellites
        If fewer than three satellites pass the mask.
    """
    satellites = list(satellites)
    if not satellites:
        raise InsufficientSatellites("no satellites supplied")
    rows, ids, elev, azim, idx = [], [], [], [], []
    for i, (sat_id, pos) in enumerate(satellites):
        los = line_of_sight(receiver, pos)
        if los.elevation >= mask_elevation:
            rows.append(los.n)
            ids.append(sat_id)
            elev.append(los.elevation)
            azim.append(los.azimuth)
            idx.append(i)
    if len(rows) < 3:
        raise InsufficientSatellites(
            f"{len(rows)} of {len(satellites)} satellites at or above "
            f"the {mask_elevation} deg mask; at least 3 are required"
        )
    rec = receiver if isinstance(receiver, EcefPosition) else EcefPosition.from_array(receiver)
    return DesignMatrix(
        np.vstack(rows), tuple(ids), np.array(elev), np.array(azim), tuple(idx), rec
    )
