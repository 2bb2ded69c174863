"""Geodetic and local-metric geometry primitives.

Everything downstream works in a small equirectangular tangent frame around a
single road intersection. At that scale (under 100 m) the frame error stays
below a centimeter, which spares us a projection-library dependency.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

M_PER_DEG_LAT = 111320.0
# Spherical radius consistent with M_PER_DEG_LAT (R * pi / 180 = 111319.49).
EARTH_RADIUS_M = 6378137.0
# Half-width of a tangent frame's validity window, degrees on both axes.
FRAME_SPAN_DEG = 0.05


@dataclass(frozen=True)
class GeoPoint:
    """WGS84 coordinate in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class LocalPoint:
    """Meters east (x) and north (y) of a frame origin."""

    x: float
    y: float


@dataclass(frozen=True)
class LocalFrame:
    origin: GeoPoint
    m_per_deg_lat: float
    m_per_deg_lon: float


@dataclass(frozen=True)
class Footprint:
    """Building outline: closed vertex ring, first vertex repeated last."""

    id: str
    ring: tuple[GeoPoint, ...]

    def __post_init__(self) -> None:
        if len(self.ring) < 4:
            raise ValueError(
                f"footprint {self.id}: ring needs >= 4 vertices, got {len(self.ring)}"
            )
        if self.ring[0] != self.ring[-1]:
            raise ValueError(f"footprint {self.id}: ring is not closed")


def make_frame(center: GeoPoint) -> LocalFrame:
    """Local tangent frame centered on an intersection."""
    if abs(center.lat) > 89.0:
        raise ValueError(f"frame degenerate near the poles (lat={center.lat})")
    return LocalFrame(
        origin=center,
        m_per_deg_lat=M_PER_DEG_LAT,
        m_per_deg_lon=M_PER_DEG_LAT * math.cos(math.radians(center.lat)),
    )


def project(frame: LocalFrame, p: GeoPoint) -> LocalPoint:
    dlat = p.lat - frame.origin.lat
    dlon = p.lon - frame.origin.lon
    if abs(dlat) >= FRAME_SPAN_DEG or abs(dlon) >= FRAME_SPAN_DEG:
        raise ValueError(
            f"point ({p.lat}, {p.lon}) outside the {FRAME_SPAN_DEG} deg validity "
            f"span of the frame at ({frame.origin.lat}, {frame.origin.lon})"
        )
    return LocalPoint(x=dlon * frame.m_per_deg_lon, y=dlat * frame.m_per_deg_lat)


def unproject(frame: LocalFrame, q: LocalPoint) -> GeoPoint:
    dlat = q.y / frame.m_per_deg_lat
    dlon = q.x / frame.m_per_deg_lon
    if abs(dlat) >= FRAME_SPAN_DEG or abs(dlon) >= FRAME_SPAN_DEG:
        raise ValueError("local point outside the frame validity span")
    return GeoPoint(lat=frame.origin.lat + dlat, lon=frame.origin.lon + dlon)


def dist(a: LocalPoint, b: LocalPoint) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance on the sphere the local frames assume."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = phi2 - phi1
    dlam = math.radians(b.lon - a.lon)
    s = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(s))


def heading_vector(heading_deg: float) -> tuple[float, float]:
    """Unit (east, north) vector of a compass heading, degrees clockwise from north."""
    r = math.radians(heading_deg)
    return math.sin(r), math.cos(r)


def nearest_vertex(fp: Footprint, frame: LocalFrame, q: LocalPoint) -> tuple[LocalPoint, float]:
    """Ring vertex closest to q; ties go to the lowest vertex index."""
    best: tuple[float, int, LocalPoint] | None = None
    for i, v in enumerate(fp.ring[:-1]):
        pv = project(frame, v)
        d = dist(pv, q)
        if best is None or d < best[0]:
            best = (d, i, pv)
    if best is None:  # unreachable for validated footprints
        raise ValueError(f"footprint {fp.id}: empty ring")
    return best[2], best[0]


def footprint_centroid(fp: Footprint, frame: LocalFrame) -> LocalPoint:
    """Area-weighted (shoelace) centroid of the outer ring."""
    pts = [project(frame, v) for v in fp.ring[:-1]]
    twice_area = 0.0
    cx = 0.0
    cy = 0.0
    for i, p in enumerate(pts):
        nxt = pts[(i + 1) % len(pts)]
        w = p.x * nxt.y - nxt.x * p.y
        twice_area += w
        cx += (p.x + nxt.x) * w
        cy += (p.y + nxt.y) * w
    if abs(twice_area) < 1e-12:
        raise ValueError(f"footprint {fp.id}: zero-area ring")
    return LocalPoint(cx / (3.0 * twice_area), cy / (3.0 * twice_area))


def _ring_area_deg(ring: tuple[GeoPoint, ...]) -> float:
    total = 0.0
    for i in range(len(ring) - 1):
        a, b = ring[i], ring[i + 1]
        total += a.lon * b.lat - b.lon * a.lat
    return total / 2.0


def load_footprints(path: str) -> list[Footprint]:
    """Read building footprints from a GeoJSON FeatureCollection.

    Only Polygon geometries are accepted; the outer ring is used and holes
    are ignored.
    """
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("type") != "FeatureCollection":
        raise ValueError(f"{path}: expected a FeatureCollection, got {doc.get('type')!r}")
    out: list[Footprint] = []
    for i, feat in enumerate(doc.get("features", [])):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "Polygon":
            raise ValueError(f"{path}: features[{i}].geometry.type must be Polygon")
        props = feat.get("properties") or {}
        fid = props.get("id", feat.get("id"))
        if fid is None:
            raise ValueError(f"{path}: features[{i}] is missing the 'id' property")
        rings = geom.get("coordinates") or []
        if not rings:
            raise ValueError(f"{path}: features[{i}].geometry.coordinates is empty")
        try:
            ring = tuple(GeoPoint(lat=float(c[1]), lon=float(c[0])) for c in rings[0])
            fp = Footprint(id=str(fid), ring=ring)
        except (TypeError, IndexError, ValueError) as exc:
            raise ValueError(f"{path}: features[{i}]: {exc}") from exc
        if abs(_ring_area_deg(fp.ring)) < 1e-18:
            raise ValueError(f"{path}: features[{i}] ({fp.id}) has a zero-area ring")
        out.append(fp)
    return out
