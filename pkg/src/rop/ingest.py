"""Input bundle loading, intersection buffers, and track building.

A bundle is the on-disk contract of the pipeline: camera metadata (JSON),
per-image semantic label maps (binary PGM, one byte per pixel), object
detections (JSON Lines), building footprints (GeoJSON), and intersection
buffers (JSON).
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .geo import (
    FRAME_SPAN_DEG,
    Footprint,
    GeoPoint,
    LocalPoint,
    dist,
    load_footprints,
    make_frame,
    project,
    unproject,
)

log = logging.getLogger("rop.ingest")


class BundleError(ValueError):
    """Raised when bundle inputs violate the format contract."""


# ---------------------------------------------------------------------------
# Category registry.


@dataclass(frozen=True)
class CategoryRegistry:
    """Pixel-id assignment for semantic label maps."""

    ids: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        names = [n for n, _ in self.ids]
        vals = [v for _, v in self.ids]
        if len(set(names)) != len(names) or len(set(vals)) != len(vals):
            raise ValueError("category names and ids must be unique")
        if any(not 0 <= v <= 255 for v in vals):
            raise ValueError("category ids must fit one byte")

    def id_of(self, name: str) -> int:
        for n, v in self.ids:
            if n == name:
                return v
        raise KeyError(name)

    def name_of(self, cid: int) -> str:
        for n, v in self.ids:
            if v == cid:
                return n
        raise KeyError(cid)

    def names(self) -> list[str]:
        return [n for n, _ in self.ids]

    def by_id(self) -> dict[int, str]:
        return {v: n for n, v in self.ids}


DEFAULT_REGISTRY = CategoryRegistry(
    ids=(
        ("other", 0),
        ("road", 1),
        ("sidewalk", 2),
        ("building", 3),
        ("sky", 4),
        ("pedestrian", 5),
        ("traffic_light", 6),
        ("traffic_sign", 7),
        ("vehicle", 8),
    )
)


# ---------------------------------------------------------------------------
# Core records.


@dataclass
class ImageMeta:
    image_id: str
    position: GeoPoint
    heading_deg: float | None
    sequence_id: str
    captured_at: float | str | None
    width_px: int
    height_px: int


@dataclass(frozen=True)
class IntersectionBuffer:
    intersection_id: str
    center: GeoPoint
    radius_m: float = 50.0


@dataclass
class Track:
    track_id: str
    intersection_id: str
    direction: str  # WE, EW, SN, NS
    images: list[ImageMeta]
    corrected: bool = False
    mean_shift_m: float = 0.0


@dataclass
class Detection:
    image_id: str
    category: str
    subtype: str | None
    bbox: tuple[float, float, float, float]  # x, y, w, h in pixels
    score: float


@dataclass
class Bundle:
    images: list[ImageMeta]
    label_maps: Mapping[str, np.ndarray]
    detections: dict[str, list[Detection]]
    footprints: list[Footprint]
    buffers: list[IntersectionBuffer]
    registry: CategoryRegistry = field(default=DEFAULT_REGISTRY)


# ---------------------------------------------------------------------------
# PGM reading and writing (binary, 8-bit, P5).


def _pgm_header(data: bytes, path: str) -> tuple[int, int, int, int]:
    """Parse a P5 header: returns (width, height, maxval, raster offset)."""
    if data[:2] != b"P5":
        raise BundleError(f"{path}: not a binary PGM (bad magic {data[:2]!r})")
    tokens: list[bytes] = []
    i = 2
    n = len(data)
    while i < n and len(tokens) < 3:
        c = data[i : i + 1]
        if c in b" \t\r\n":
            i += 1
            continue
        if c == b"#":
            j = data.find(b"\n", i)
            i = n if j < 0 else j + 1
            continue
        j = i
        while j < n and data[j : j + 1] not in b" \t\r\n#":
            j += 1
        tokens.append(data[i:j])
        i = j
    if len(tokens) < 3 or i >= n:
        raise BundleError(f"{path}: truncated PGM header")
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise BundleError(f"{path}: malformed PGM header") from exc
    if w <= 0 or h <= 0:
        raise BundleError(f"{path}: bad PGM dimensions {w}x{h}")
    if maxval > 255:
        raise BundleError(f"{path}: 16-bit PGM not supported (maxval {maxval})")
    return w, h, maxval, i + 1  # one whitespace byte separates header and raster


def read_pgm(path: str) -> np.ndarray:
    data = Path(path).read_bytes()
    w, h, _, off = _pgm_header(data, path)
    need = w * h
    raster = data[off : off + need]
    if len(raster) < need:
        raise BundleError(f"{path}: truncated raster ({len(raster)} of {need} bytes)")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()


def read_pgm_size(path: str) -> tuple[int, int]:
    with open(path, "rb") as fh:
        head = fh.read(512)
    w, h, _, _ = _pgm_header(head, path)
    return w, h


def write_pgm(path: str, arr: np.ndarray) -> None:
    a = np.ascontiguousarray(arr, dtype=np.uint8)
    if a.ndim != 2:
        raise ValueError("label map must be 2-D")
    h, w = a.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(a.tobytes())


class PgmDirectory(Mapping):
    """Lazy image_id -> label map view over a directory of <image_id>.pgm files."""

    def __init__(self, directory: str):
        self._dir = Path(directory)
        if not self._dir.is_dir():
            raise BundleError(f"{directory}: not a directory")
        self._paths = {p.stem: p for p in sorted(self._dir.glob("*.pgm"))}

    def size_of(self, image_id: str) -> tuple[int, int]:
        return read_pgm_size(str(self._paths[image_id]))

    def __getitem__(self, image_id: str) -> np.ndarray:
        try:
            return read_pgm(str(self._paths[image_id]))
        except KeyError:
            raise KeyError(image_id) from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._paths)

    def __len__(self) -> int:
        return len(self._paths)


# ---------------------------------------------------------------------------
# JSON loaders.


def _require(record: dict, key: str, where: str):
    if key not in record:
        raise BundleError(f"{where}: missing field '{key}'")
    return record[key]


def load_images(path: str) -> list[ImageMeta]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, list):
        raise BundleError(f"{path}: expected a JSON array of image records")
    out: list[ImageMeta] = []
    seen: set[str] = set()
    for i, rec in enumerate(doc):
        where = f"{path}: images[{i}]"
        image_id = str(_require(rec, "image_id", where))
        if image_id in seen:
            raise BundleError(f"{where}: duplicate image_id '{image_id}'")
        seen.add(image_id)
        try:
            position = GeoPoint(float(_require(rec, "lat", where)), float(_require(rec, "lon", where)))
        except ValueError as exc:
            raise BundleError(f"{where}: {exc}") from exc
        heading = rec.get("heading_deg")
        if heading is not None:
            try:
                heading = float(heading) % 360.0
            except (TypeError, ValueError) as exc:
                raise BundleError(f"{where}: heading_deg must be a number or null") from exc
            if not math.isfinite(heading):
                raise BundleError(f"{where}: heading_deg must be finite")
        width = int(_require(rec, "width_px", where))
        height = int(_require(rec, "height_px", where))
        if width <= 0 or height <= 0:
            raise BundleError(f"{where}: width_px/height_px must be positive")
        out.append(
            ImageMeta(
                image_id=image_id,
                position=position,
                heading_deg=heading,
                sequence_id=str(_require(rec, "sequence_id", where)),
                captured_at=rec.get("captured_at"),
                width_px=width,
                height_px=height,
            )
        )
    return out


def load_detections(path: str, known_images: set[str] | None = None) -> dict[str, list[Detection]]:
    out: dict[str, list[Detection]] = {}
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            where = f"{path}: line {ln + 1}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BundleError(f"{where}: invalid JSON") from exc
            image_id = str(_require(rec, "image_id", where))
            if known_images is not None and image_id not in known_images:
                raise BundleError(f"{where}: detection references unknown image_id '{image_id}'")
            bbox = _require(rec, "bbox", where)
            if not (isinstance(bbox, (list, tuple)) and len(bbox) == 4):
                raise BundleError(f"{where}: bbox must be [x, y, w, h]")
            score = float(_require(rec, "score", where))
            if not 0.0 <= score <= 1.0:
                raise BundleError(f"{where}: score {score} outside [0, 1]")
            det = Detection(
                image_id=image_id,
                category=str(_require(rec, "category", where)),
                subtype=(None if rec.get("subtype") is None else str(rec["subtype"])),
                bbox=tuple(float(v) for v in bbox),
                score=score,
            )
            out.setdefault(image_id, []).append(det)
    return out


def load_buffers(path: str) -> list[IntersectionBuffer]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, list):
        raise BundleError(f"{path}: expected a JSON array of buffer records")
    out = []
    seen: set[str] = set()
    for i, rec in enumerate(doc):
        where = f"{path}: buffers[{i}]"
        iid = str(_require(rec, "intersection_id", where))
        if iid in seen:
            raise BundleError(f"{where}: duplicate intersection_id '{iid}'")
        seen.add(iid)
        radius = float(rec.get("radius_m", 50.0))
        if radius <= 0:
            raise BundleError(f"{where}: radius_m must be positive")
        try:
            center = GeoPoint(float(_require(rec, "lat", where)), float(_require(rec, "lon", where)))
        except ValueError as exc:
            raise BundleError(f"{where}: {exc}") from exc
        out.append(IntersectionBuffer(intersection_id=iid, center=center, radius_m=radius))
    return out


def load_inputs(
    images_path: str,
    masks_dir: str,
    detections_path: str,
    footprints_path: str,
    buffers_path: str,
    registry: CategoryRegistry = DEFAULT_REGISTRY,
) -> Bundle:
    """Load and cross-validate a full input bundle.

    Label maps stay lazy (header-validated only) so large bundles do not have
    to fit in memory at once.
    """
    images = load_images(images_path)
    label_maps = PgmDirectory(masks_dir)
    for im in images:
        if im.image_id not in label_maps:
            raise BundleError(f"{masks_dir}: missing label map for image '{im.image_id}'")
        w, h = label_maps.size_of(im.image_id)
        if (w, h) != (im.width_px, im.height_px):
            raise BundleError(
                f"label map for '{im.image_id}' is {w}x{h}, "
                f"image declares {im.width_px}x{im.height_px}"
            )
    extra = set(label_maps) - {im.image_id for im in images}
    if extra:
        log.warning("masks directory has %d label maps without image records", len(extra))
    detections = load_detections(detections_path, known_images={im.image_id for im in images})
    try:
        footprints = load_footprints(footprints_path)
    except ValueError as exc:
        raise BundleError(str(exc)) from exc
    buffers = load_buffers(buffers_path)
    return Bundle(
        images=images,
        label_maps=label_maps,
        detections=detections,
        footprints=footprints,
        buffers=buffers,
        registry=registry,
    )


# ---------------------------------------------------------------------------
# Buffers and tracks.


def images_in_buffer(images: list[ImageMeta], buffer: IntersectionBuffer) -> list[ImageMeta]:
    frame = make_frame(buffer.center)
    origin = LocalPoint(0.0, 0.0)
    out = []
    for im in images:
        if (
            abs(im.position.lat - buffer.center.lat) >= FRAME_SPAN_DEG
            or abs(im.position.lon - buffer.center.lon) >= FRAME_SPAN_DEG
        ):
            continue  # nowhere near this intersection
        if dist(project(frame, im.position), origin) <= buffer.radius_m:
            out.append(im)
    return out


# Heading bins, degrees clockwise from north. A track direction names where
# traffic comes from and goes to: WE drives eastward, SN drives northward.
def direction_of(heading_deg: float) -> str:
    h = heading_deg % 360.0
    if 45.0 <= h < 135.0:
        return "WE"
    if 135.0 <= h < 225.0:
        return "NS"
    if 225.0 <= h < 315.0:
        return "EW"
    return "SN"


_AXIS_KEY = {
    "WE": lambda p: p.x,
    "EW": lambda p: -p.x,
    "SN": lambda p: p.y,
    "NS": lambda p: -p.y,
}

_DIRECTIONS = ("WE", "EW", "SN", "NS")


def build_tracks(images: list[ImageMeta], buffer: IntersectionBuffer) -> list[Track]:
    """Group one intersection's images into per-direction tracks.

    Sequences sharing a heading bin are merged and re-ordered along the travel
    axis so the track progresses toward (and through) the intersection center.
    Images without a heading are excluded with a warning.
    """
    frame = make_frame(buffer.center)
    bins: dict[str, list[ImageMeta]] = {}
    for im in images:
        if im.heading_deg is None:
            log.warning(
                "image %s (intersection %s) has no heading; excluded from tracks",
                im.image_id,
                buffer.intersection_id,
            )
            continue
        bins.setdefault(direction_of(im.heading_deg), []).append(im)
    tracks = []
    for direction in _DIRECTIONS:
        members = bins.get(direction)
        if not members:
            continue
        key = _AXIS_KEY[direction]
        members.sort(key=lambda im: (key(project(frame, im.position)), im.image_id))
        tracks.append(
            Track(
                track_id=f"{buffer.intersection_id}:{direction}",
                intersection_id=buffer.intersection_id,
                direction=direction,
                images=members,
            )
        )
    return tracks


def correct_track(track: Track) -> Track:
    """Straighten GPS drift by projecting positions onto a total-least-squares line.

    Tracks with fewer than three images come back unchanged (corrected stays
    False). The correction is idempotent: collinear points project onto
    themselves.
    """
    if len(track.images) < 3:
        return track
    mean_lat = sum(im.position.lat for im in track.images) / len(track.images)
    mean_lon = sum(im.position.lon for im in track.images) / len(track.images)
    frame = make_frame(GeoPoint(mean_lat, mean_lon))
    pts = np.array(
        [[p.x, p.y] for p in (project(frame, im.position) for im in track.images)],
        dtype=float,
    )
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    # Principal axis = total-least-squares line direction.
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    direction = vt[0]
    along = centered @ direction
    projected = centroid + np.outer(along, direction)
    mean_shift = float(np.linalg.norm(pts - projected, axis=1).mean())
    corrected_images = [
        replace(im, position=unproject(frame, LocalPoint(float(x), float(y))))
        for im, (x, y) in zip(track.images, projected)
    ]
    key = _AXIS_KEY[track.direction]
    corrected_images.sort(key=lambda im: (key(project(frame, im.position)), im.image_id))
    return Track(
        track_id=track.track_id,
        intersection_id=track.intersection_id,
        direction=track.direction,
        images=corrected_images,
        corrected=True,
        mean_shift_m=mean_shift,
    )
