"""Satellite geometries and scenario files.

A scenario is a JSON document (``schema_version`` 1) describing a receiver,
its candidate satellites, the modeled and true error covariance, an optional
observation bias and Monte Carlo settings.  The full schema is documented in
``docs/scenario_schema.md``.
"""

from __future__ import annotations

import copy
import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import covmodel
from .covmodel import CovarianceModel
from .errors import ConfigError, NotPsd, ParseError, ValidationError
from .geometry import (
    DEFAULT_MASK_ELEVATION,
    WGS84_A,
    DesignMatrix,
    EcefPosition,
    GeodeticPosition,
    build_design_matrix,
    enu_rotation,
    geodetic_to_ecef,
)

SCHEMA_VERSION = 1
DEFAULT_RANGE = 20_200_000.0  # m
MAX_SEED = 2**64 - 1

OVERRIDE_ALIASES = {
    "gamma": "error_model.gamma",
    "true_gamma": "true_error_model.gamma",
    "seed": "mc.seed",
    "n_samples": "mc.n_samples",
    "samples": "mc.n_samples",
    "workers": "mc.workers",
}


@dataclass(frozen=True)
class WalkerSpec:
    """Walker-delta constellation ``i: t/p/f`` on circular orbits."""

    total_satellites: int
    planes: int
    phasing: int = 0
    inclination: float = 55.0
    altitude: float = 20_200_000.0
    epoch_angle: float = 0.0

    def __post_init__(self):
        if self.total_satellites < 1 or self.planes < 1:
            raise ValidationError("walker: total_satellites and planes must be positive")
        if self.total_satellites % self.planes:
            raise ValidationError(
                f"walker: total_satellites ({self.total_satellites}) must be divisible by planes ({self.planes})"
            )
        if not 0 <= self.phasing < max(self.planes, 1):
            raise ValidationError(f"walker: phasing must lie in [0, planes), got {self.phasing}")
        if self.altitude <= -WGS84_A:
            raise ValidationError("walker: orbit radius must be positive")


@dataclass(frozen=True, eq=False)
class CovarianceSpec:
    """Covariance configuration over the full candidate satellite list.

    ``known`` (or the full covariance when ``gamma`` is None) is stored at
    candidate size and restricted to the visible satellites by :meth:`build`.
    """

    gamma: float | None
    known: np.ndarray | None = None
    kind: str = "scaled_identity"

    def build(self, indices: Sequence[int] | None = None, n: int | None = None) -> CovarianceModel:
        if self.known is None:
            size = len(indices) if indices is not None else n
            return covmodel.scaled_identity(self.gamma, size)
        k = self.known
        if indices is not None:
            idx = np.asarray(indices, dtype=int)
            k = k[np.ix_(idx, idx)]
        if self.gamma is None:
            return covmodel.full_matrix(k)
        return covmodel.composite(self.gamma, k)


@dataclass(frozen=True)
class McSettings:
    n_samples: int
    seed: int
    offset: tuple = (0.0, 0.0, 0.0)
    workers: int = 1


@dataclass(frozen=True, eq=False)
class Scenario:
    receiver: GeodeticPosition
    satellites: tuple  # ((id, EcefPosition), ...)
    error_model: CovarianceSpec
    mask_elevation: float = DEFAULT_MASK_ELEVATION
    true_error_model: CovarianceSpec | None = None
    mc: McSettings | None = None
    bias: np.ndarray | None = None
    name: str = "scenario"
    source: dict = field(default_factory=dict)

    @property
    def satellite_ids(self) -> tuple:
        return tuple(s for s, _ in self.satellites)

    @property
    def receiver_ecef(self) -> EcefPosition:
        return geodetic_to_ecef(self.receiver)

    def design_matrix(self) -> DesignMatrix:
        return build_design_matrix(self.receiver_ecef, self.satellites, self.mask_elevation)

    def resolve(self, A: DesignMatrix | None = None):
        """Design matrix plus modeled/true models and bias restricted to visible satellites."""
        A = self.design_matrix() if A is None else A
        model = self.error_model.build(A.indices)
        true_model = self.true_error_model.build(A.indices) if self.true_error_model else model
        bias = None if self.bias is None else self.bias[list(A.indices)]
        return A, model, true_model, bias


# --- geometry generators ------------------------------------------------------


def from_azel(receiver: GeodeticPosition, entries) -> list[tuple[Any, EcefPosition]]:
    """Place satellites at given azimuth/elevation (deg) and range (m) from the receiver."""
    r0 = geodetic_to_ecef(receiver).as_array()
    R = enu_rotation(receiver.latitude, receiver.longitude)
    out = []
    for entry in entries:
        sat_id, az, el, *rest = entry
        rng = float(rest[0]) if rest and rest[0] is not None else DEFAULT_RANGE
        if not -90.0 <= el <= 90.0:
            raise ValidationError(f"satellite {sat_id}: elevation must lie in [-90, 90], got {el}")
        if not rng > 0:
            raise ValidationError(f"satellite {sat_id}: range must be positive, got {rng}")
        a, e = math.radians(az), math.radians(el)
        enu = np.array([math.cos(e) * math.sin(a), math.cos(e) * math.cos(a), math.sin(e)])
        out.append((sat_id, EcefPosition.from_array(r0 + rng * (R.T @ enu))))
    return out


def walker_constellation(spec: WalkerSpec) -> list[tuple[str, EcefPosition]]:
    """Positions of a Walker-delta constellation at one epoch.

    Plane ``j`` has right ascension ``360 j / p``; satellite ``k`` in it sits at
    argument of latitude ``360 k / s + 360 f j / t + epoch_angle`` with
    ``s = t / p``.  The inertial and Earth-fixed frames are taken to coincide
    at the epoch.
    """
    t, p, f = spec.total_satellites, spec.planes, spec.phasing
    s = t // p
    radius = WGS84_A + spec.altitude
    inc = math.radians(spec.inclination)
    ci, si = math.cos(inc), math.sin(inc)
    out = []
    for j in range(p):
        raan = 2.0 * math.pi * j / p
        co, so = math.cos(raan), math.sin(raan)
        for k in range(s):
            u = 2.0 * math.pi * k / s + 2.0 * math.pi * f * j / t + math.radians(spec.epoch_angle)
            cu, su = math.cos(u), math.sin(u)
            pos = radius * np.array([cu * co - su * ci * so, cu * so + su * ci * co, su * si])
            out.append((f"P{j + 1}S{k + 1}", EcefPosition.from_array(pos)))
    return out


# --- scenario parsing ---------------------------------------------------------


class _Fields:
    """Typed access to a JSON object with dotted-path error messages."""

    def __init__(self, data, where: str, origin: str):
        if not isinstance(data, Mapping):
            raise ParseError(f"{origin}: {where or 'document'}: expected an object")
        self.data = data
        self.where = where
        self.origin = origin

    def path(self, key) -> str:
        return f"{self.where}.{key}" if self.where else str(key)

    def fail(self, key, msg, cls=ValidationError):
        raise cls(f"{self.origin}: {self.path(key)}: {msg}")

    def check_keys(self, allowed):
        for k in self.data:
            if k not in allowed:
                self.fail(k, f"unknown field (allowed: {', '.join(sorted(allowed))})", ParseError)

    def number(self, key, default=None, required=False):
        if key not in self.data:
            if required:
                self.fail(key, "required field is missing", ParseError)
            return default
        v = self.data[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(key, f"expected a number, got {type(v).__name__}", ParseError)
        if not math.isfinite(v):
            self.fail(key, "must be finite")
        return float(v)

    def integer(self, key, default=None, required=False):
        if key not in self.data:
            if required:
                self.fail(key, "required field is missing", ParseError)
            return default
        v = self.data[key]
        if isinstance(v, bool) or not isinstance(v, int):
            if isinstance(v, float) and v.is_integer():
                return int(v)
            self.fail(key, f"expected an integer, got {v!r}", ParseError)
        return v

    def sub(self, key):
        return _Fields(self.data[key], self.path(key), self.origin)


def _matrix(value, where: str, origin: str, n: int) -> np.ndarray:
    try:
        m = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{origin}: {where}: expected a numeric matrix")
    if m.shape != (n, n):
        raise ValidationError(f"{origin}: {where}: expected a {n} x {n} matrix, got shape {m.shape}")
    return m


def read_matrix_csv(path) -> np.ndarray:
    """Read a square matrix stored row-major as comma-separated values, no header."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    except OSError as exc:
        raise ParseError(f"{path}: cannot read matrix file ({exc.strerror})") from exc
    out = []
    for lineno, row in enumerate(rows, 1):
        try:
            out.append([float(x) for x in row])
        except ValueError:
            raise ParseError(f"{path}: row {lineno}: non-numeric entry")
    if len({len(r) for r in out}) > 1:
        raise ParseError(f"{path}: rows have differing lengths")
    return np.array(out, dtype=float)


def _per_satellite(value, where: str, origin: str, ids: Sequence, width: int | None = None) -> np.ndarray:
    """List aligned with the candidate satellites, or an {id: value} object (missing ids -> 0)."""
    shape = (len(ids),) if width is None else (len(ids), width)
    if isinstance(value, Mapping):
        out = np.zeros(shape)
        lookup = {str(i): n for n, i in enumerate(ids)}
        for key, v in value.items():
            if str(key) not in lookup:
                raise ValidationError(f"{origin}: {where}.{key}: unknown satellite id")
            try:
                out[lookup[str(key)]] = np.asarray(v, dtype=float)
            except (TypeError, ValueError):
                raise ParseError(f"{origin}: {where}.{key}: expected numeric value(s)")
        return out
    try:
        out = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{origin}: {where}: expected numeric value(s)")
    if out.shape != shape:
        raise ValidationError(f"{origin}: {where}: expected shape {shape} (one entry per satellite), got {out.shape}")
    return out


def _covariance_spec(f: _Fields, ids: Sequence, base: Path | None) -> CovarianceSpec:
    n = len(ids)
    f.check_keys({"gamma", "known_diagonal", "known_matrix", "known_csv", "scintillation",
                  "full_matrix", "full_csv", "description"})
    sources = [k for k in ("known_diagonal", "known_matrix", "known_csv", "scintillation",
                           "full_matrix", "full_csv") if k in f.data]
    if len(sources) > 1:
        f.fail(sources[1], f"conflicts with {sources[0]}; give one covariance component")
    full = bool(sources) and sources[0].startswith("full")
    gamma = f.number("gamma", required=not full)
    if full and gamma is not None:
        f.fail("gamma", "cannot be combined with a full covariance matrix")
    if gamma is not None and not gamma > 0:
        f.fail("gamma", f"must be > 0, got {gamma}")
    if not sources:
        return CovarianceSpec(gamma)

    key = sources[0]
    where = f.path(key)
    value = f.data[key]
    if key == "known_diagonal":
        d = _per_satellite(value, where, f.origin, ids)
        if np.any(d < 0):
            f.fail(key, "diagonal variances must be non-negative", NotPsd)
        m = np.diag(d)
    elif key in ("known_matrix", "full_matrix"):
        m = _matrix(value, where, f.origin, n)
    elif key in ("known_csv", "full_csv"):
        if not isinstance(value, str):
            f.fail(key, "expected a file path", ParseError)
        p = Path(value)
        if not p.is_absolute() and base is not None:
            p = base / p
        m = _matrix(read_matrix_csv(p), where, f.origin, n)
    else:  # scintillation
        sf = f.sub(key)
        sf.check_keys({"c1", "c2", "indices"})
        c1 = sf.number("c1", 1.0)
        c2 = sf.number("c2", 1.0)
        if c1 < 0 or c2 < 0:
            sf.fail("c1" if c1 < 0 else "c2", "coefficients must be non-negative")
        if "indices" not in sf.data:
            sf.fail("indices", "required field is missing", ParseError)
        entries = _per_satellite(sf.data["indices"], sf.path("indices"), f.origin, ids, width=2)
        if np.any(entries < 0):
            sf.fail("indices", "S4 and sigma_phi must be non-negative")
        m = covmodel.scintillation_diagonal(entries, c1, c2)
    try:
        m = covmodel.check_psd(m, where)
    except ConfigError as exc:
        raise type(exc)(f"{f.origin}: {exc}") from exc
    if full:
        if np.linalg.eigvalsh(m)[0] <= 0:
            f.fail(key, "a full error covariance must be positive definite", NotPsd)
        return CovarianceSpec(None, m, "full")
    return CovarianceSpec(gamma, m, key)


def _satellites(doc: _Fields, receiver: GeodeticPosition):
    has_list = "satellites" in doc.data
    has_walker = "walker" in doc.data
    if has_list == has_walker:
        doc.fail("satellites", "give exactly one of 'satellites' or 'walker'", ParseError)
    if has_walker:
        w = doc.sub("walker")
        w.check_keys({"total_satellites", "planes", "phasing", "inclination", "altitude", "epoch_angle"})
        try:
            spec = WalkerSpec(
                total_satellites=w.integer("total_satellites", required=True),
                planes=w.integer("planes", required=True),
                phasing=w.integer("phasing", 0),
                inclination=w.number("inclination", 55.0),
                altitude=w.number("altitude", 20_200_000.0),
                epoch_angle=w.number("epoch_angle", 0.0),
            )
        except ValidationError as exc:
            raise ValidationError(f"{doc.origin}: {exc}") from exc
        return walker_constellation(spec)

    entries = doc.data["satellites"]
    if not isinstance(entries, list) or not entries:
        doc.fail("satellites", "expected a non-empty list", ParseError)
    out, seen = [], set()
    for i, raw in enumerate(entries):
        s = _Fields(raw, f"satellites[{i}]", doc.origin)
        s.check_keys({"id", "az", "el", "range", "x", "y", "z"})
        if "id" not in s.data:
            s.fail("id", "required field is missing", ParseError)
        sat_id = s.data["id"]
        if not isinstance(sat_id, (str, int)) or isinstance(sat_id, bool):
            s.fail("id", "expected a string or integer", ParseError)
        sat_id = str(sat_id)
        if sat_id in seen:
            s.fail("id", f"duplicate satellite id {sat_id!r}; ids must be unique")
        seen.add(sat_id)
        if "el" in s.data or "az" in s.data:
            if any(k in s.data for k in "xyz"):
                s.fail("az", "give either az/el/range or x/y/z, not both", ParseError)
            az = s.number("az", required=True)
            el = s.number("el", required=True)
            rng = s.number("range", DEFAULT_RANGE)
            if not -90.0 <= el <= 90.0:
                s.fail("el", f"elevation must lie in [-90, 90], got {el}")
            if not 0.0 <= az < 360.0:
                s.fail("az", f"azimuth must lie in [0, 360), got {az}")
            if not rng > 0:
                s.fail("range", f"range must be > 0, got {rng}")
            out.extend(from_azel(receiver, [(sat_id, az, el, rng)]))
        else:
            out.append((sat_id, EcefPosition(
                s.number("x", required=True), s.number("y", required=True), s.number("z", required=True))))
    return out


def parse_scenario(data: Mapping, origin: str = "<scenario>", base: Path | None = None) -> Scenario:
    """Validate a decoded scenario document and build a :class:`Scenario`."""
    doc = _Fields(data, "", origin)
    doc.check_keys({"schema_version", "name", "description", "receiver", "satellites", "walker",
                    "mask_elevation", "error_model", "true_error_model", "bias", "mc"})
    version = doc.integer("schema_version", required=True)
    if version != SCHEMA_VERSION:
        doc.fail("schema_version", f"unsupported schema version {version} (expected {SCHEMA_VERSION})")
    name = data.get("name", Path(origin).stem if origin else "scenario")
    if not isinstance(name, str):
        doc.fail("name", "expected a string", ParseError)

    if "receiver" not in data:
        doc.fail("receiver", "required field is missing", ParseError)
    r = doc.sub("receiver")
    r.check_keys({"latitude", "longitude", "height"})
    lat = r.number("latitude", required=True)
    lon = r.number("longitude", required=True)
    h = r.number("height", 0.0)
    if not -90.0 <= lat <= 90.0:
        r.fail("latitude", f"latitude must lie in [-90, 90], got {lat}")
    if not -180.0 < lon <= 180.0:
        r.fail("longitude", f"longitude must lie in (-180, 180], got {lon}")
    receiver = GeodeticPosition(lat, lon, h)

    mask = doc.number("mask_elevation", DEFAULT_MASK_ELEVATION)
    if not -90.0 <= mask <= 90.0:
        doc.fail("mask_elevation", f"must lie in [-90, 90], got {mask}")
    satellites = _satellites(doc, receiver)
    ids = [s for s, _ in satellites]

    if "error_model" not in data:
        doc.fail("error_model", "required field is missing", ParseError)
    error_model = _covariance_spec(doc.sub("error_model"), ids, base)
    true_model = None
    if data.get("true_error_model") is not None:
        true_model = _covariance_spec(doc.sub("true_error_model"), ids, base)

    bias = None
    if data.get("bias") is not None:
        bias = _per_satellite(data["bias"], "bias", origin, ids)
        if not np.all(np.isfinite(bias)):
            doc.fail("bias", "entries must be finite")

    mc = None
    if data.get("mc") is not None:
        m = doc.sub("mc")
        m.check_keys({"n_samples", "seed", "offset", "workers"})
        n = m.integer("n_samples", required=True)
        if n < 1:
            m.fail("n_samples", f"must be >= 1, got {n}")
        seed = m.integer("seed", 0)
        if not 0 <= seed <= MAX_SEED:
            m.fail("seed", "must be a 64-bit unsigned integer")
        workers = m.integer("workers", 1)
        if workers < 1:
            m.fail("workers", f"must be >= 1, got {workers}")
        offset = m.data.get("offset", [0.0, 0.0, 0.0])
        try:
            offset = tuple(float(v) for v in np.asarray(offset, dtype=float).reshape(3))
        except (TypeError, ValueError):
            m.fail("offset", "expected three numbers (meters)", ParseError)
        mc = McSettings(n, seed, offset, workers)

    return Scenario(receiver, tuple(satellites), error_model, mask, true_model, mc, bias, name,
                    copy.deepcopy(dict(data)))


def _coerce(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict, overrides: Mapping[str, Any] | Sequence[str] | None) -> dict:
    """Return a copy of a raw scenario document with dotted-path overrides applied.

    ``overrides`` is a mapping or a list of ``key=value`` strings.  String
    values are decoded as JSON when possible (``gamma=4`` sets a number).
    Short aliases such as ``gamma`` or ``seed`` map to their schema paths.
    """
    out = copy.deepcopy(dict(data))
    if not overrides:
        return out
    if not isinstance(overrides, Mapping):
        pairs = {}
        for item in overrides:
            if "=" not in item:
                raise ValidationError(f"override {item!r} is not of the form key=value")
            k, v = item.split("=", 1)
            pairs[k.strip()] = v
        overrides = pairs
    for key, value in overrides.items():
        value = _coerce(value) if isinstance(value, str) else value
        parts = OVERRIDE_ALIASES.get(key, key).split(".")
        node = out
        for p in parts[:-1]:
            if p not in node or node[p] is None:
                node[p] = {}
            node = node[p]
            if not isinstance(node, dict):
                raise ValidationError(f"override {key!r}: {p!r} is not an object")
        node[parts[-1]] = value
    return out


def read_scenario_document(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read scenario ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def load_scenario(path, overrides=None) -> Scenario:
    """Read, override and validate a scenario file.

    Raises
    ------
    ParseError
        Malformed JSON (with line and column), wrong field types, unknown fields.
    ValidationError
        A documented invariant is violated; the message names the field.
    """
    path = Path(path)
    data = apply_overrides(read_scenario_document(path), overrides)
    return parse_scenario(data, str(path), path.parent)
