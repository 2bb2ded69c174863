"""Synthetic intersection scenes with exact ground truth.

A Layout declares an intersection in local meters: rectangular building
footprints, truth objects (lights, signs), pedestrians, and camera poses.
render_bundle rasterizes pinhole views of it into the exact input formats the
pipeline ingests, plus a truth GeoJSON. Geometry is deliberately simple
(extruded boxes, camera-facing billboards, flat ground): the downstream rules
consume category rasters and centroids, nothing finer.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geo import Footprint, GeoPoint, LocalPoint, heading_vector, make_frame, unproject
from .ingest import (
    DEFAULT_REGISTRY,
    Bundle,
    CategoryRegistry,
    Detection,
    ImageMeta,
    IntersectionBuffer,
    write_pgm,
)
from .placer import PlacedObject, to_geojson

_NEAR_M = 0.2


@dataclass(frozen=True)
class CameraModel:
    hfov_deg: float = 90.0
    width_px: int = 1024
    height_px: int = 768
    cam_height_m: float = 1.6

    @property
    def focal_px(self) -> float:
        return (self.width_px / 2.0) / math.tan(math.radians(self.hfov_deg) / 2.0)


@dataclass(frozen=True)
class RectFootprint:
    id: str
    x0: float
    y0: float
    x1: float
    y1: float
    height_m: float

    def expanded(self, margin: float) -> tuple[float, float, float, float]:
        return (self.x0 - margin, self.y0 - margin, self.x1 + margin, self.y1 + margin)

    def contains(self, x: float, y: float) -> bool:
        return self.x0 < x < self.x1 and self.y0 < y < self.y1

    def corners(self) -> list[tuple[float, float]]:
        return [(self.x0, self.y0), (self.x1, self.y0), (self.x1, self.y1), (self.x0, self.y1)]


@dataclass(frozen=True)
class TruthObject:
    category: str  # traffic_light | traffic_sign
    subtype: str | None
    light_kind: str | None  # high | low | None
    position: LocalPoint
    mount_m: float  # height of the object center above ground


@dataclass(frozen=True)
class PedestrianSpec:
    position: LocalPoint
    height_m: float


@dataclass(frozen=True)
class CameraPose:
    image_id: str
    sequence_id: str
    position: LocalPoint
    heading_deg: float


@dataclass
class Layout:
    intersection_id: str
    center: GeoPoint
    footprints: list[RectFootprint]
    truth_objects: list[TruthObject]
    pedestrians: list[PedestrianSpec] = field(default_factory=list)
    cameras: list[CameraPose] = field(default_factory=list)
    camera: CameraModel = field(default_factory=CameraModel)
    radius_m: float = 50.0
    kind: str = "crossroad"


_LIGHT_W, _LIGHT_H = 0.3, 0.9
_SIGN_W, _SIGN_H = 0.6, 0.6
_PED_W = 0.5
_APRON_M = 2.5


def validate_layout(layout: Layout) -> None:
    def check_reach(x, y, what):
        if math.hypot(x, y) > 100.0:
            raise ValueError(f"{layout.intersection_id}: {what} farther than 100 m from center")

    for fp in layout.footprints:
        for x, y in fp.corners():
            check_reach(x, y, f"footprint {fp.id}")
        if fp.x1 <= fp.x0 or fp.y1 <= fp.y0 or fp.height_m <= 0:
            raise ValueError(f"{layout.intersection_id}: footprint {fp.id} is degenerate")
    for t in layout.truth_objects:
        check_reach(t.position.x, t.position.y, f"truth {t.category}")
        if t.category == "traffic_light" and t.mount_m not in (4.0, 7.0):
            raise ValueError(
                f"{layout.intersection_id}: light mount {t.mount_m} not in {{4.0, 7.0}}"
            )
    for p in layout.pedestrians:
        check_reach(p.position.x, p.position.y, "pedestrian")
    seen = set()
    for pose in layout.cameras:
        check_reach(pose.position.x, pose.position.y, f"camera {pose.image_id}")
        if pose.image_id in seen:
            raise ValueError(f"{layout.intersection_id}: duplicate image id {pose.image_id}")
        seen.add(pose.image_id)
        for fp in layout.footprints:
            if fp.contains(pose.position.x, pose.position.y):
                raise ValueError(
                    f"{layout.intersection_id}: camera {pose.image_id} inside footprint {fp.id}"
                )


# ---------------------------------------------------------------------------
# Rasterization.


def _cam_basis(pose: CameraPose) -> tuple[float, float, float, float]:
    fx, fy = heading_vector(pose.heading_deg)
    return fx, fy, fy, -fx  # forward, right


def _to_cam(pose: CameraPose, cam: CameraModel, pts: list[tuple[float, float, float]]):
    fx, fy, rx, ry = _cam_basis(pose)
    out = []
    for x, y, z in pts:
        dx, dy = x - pose.position.x, y - pose.position.y
        out.append((rx * dx + ry * dy, cam.cam_height_m - z, fx * dx + fy * dy))
    return out


def _clip_near(poly: list[tuple[float, float, float]], near: float = _NEAR_M):
    out = []
    n = len(poly)
    for i in range(n):
        ax, ay, az = poly[i]
        bx, by, bz = poly[(i + 1) % n]
        a_in, b_in = az >= near, bz >= near
        if a_in:
            out.append((ax, ay, az))
        if a_in != b_in:
            t = (near - az) / (bz - az)
            out.append((ax + t * (bx - ax), ay + t * (by - ay), near))
    return out


def _project_poly(cam: CameraModel, poly_cam) -> list[tuple[float, float]]:
    f = cam.focal_px
    cx, cy = cam.width_px / 2.0, cam.height_px / 2.0
    return [(cx + f * x / z, cy + f * y / z) for x, y, z in poly_cam]


def _fill_convex(canvas: np.ndarray, uv: list[tuple[float, float]], value: int) -> None:
    if len(uv) < 3:
        return
    h, w = canvas.shape
    vs = np.asarray(uv, dtype=float)
    r_lo = max(0, int(math.ceil(vs[:, 1].min())))
    r_hi = min(h - 1, int(math.floor(vs[:, 1].max())))
    if r_hi < r_lo:
        return
    rows = np.arange(r_lo, r_hi + 1, dtype=float)
    umin = np.full(rows.shape, np.inf)
    umax = np.full(rows.shape, -np.inf)
    n = len(vs)
    for i in range(n):
        u0, v0 = vs[i]
        u1, v1 = vs[(i + 1) % n]
        if v0 == v1:
            sel = rows == v0
            if sel.any():
                umin[sel] = np.minimum(umin[sel], min(u0, u1))
                umax[sel] = np.maximum(umax[sel], max(u0, u1))
            continue
        t = (rows - v0) / (v1 - v0)
        sel = (t >= 0.0) & (t <= 1.0)
        if not sel.any():
            continue
        uu = u0 + t[sel] * (u1 - u0)
        umin[sel] = np.minimum(umin[sel], uu)
        umax[sel] = np.maximum(umax[sel], uu)
    c0 = np.maximum(np.ceil(umin), 0.0)
    c1 = np.minimum(np.floor(umax), float(w - 1))
    ok = np.isfinite(umin) & np.isfinite(umax) & (c1 >= c0)
    if not ok.any():
        return
    rr = rows[ok].astype(np.int64)
    c0i = c0[ok].astype(np.int64)
    lens = (c1[ok] - c0[ok]).astype(np.int64) + 1
    starts = rr * w + c0i
    total = int(lens.sum())
    offsets = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(lens) - lens, lens)
    canvas.reshape(-1)[np.repeat(starts, lens) + offsets] = value


def _billboard_rect(
    pose: CameraPose, cam: CameraModel, x: float, y: float, z: float, w_m: float, h_m: float
) -> tuple[int, int, int, int] | None:
    """Integer pixel rect (r0, r1, c0, c1 inclusive) of a camera-facing board."""
    (X, Y, Z) = _to_cam(pose, cam, [(x, y, z)])[0]
    if Z < _NEAR_M:
        return None
    f = cam.focal_px
    u = cam.width_px / 2.0 + f * X / Z
    v = cam.height_px / 2.0 + f * Y / Z
    pw = max(1.0, f * w_m / Z)
    ph = max(1.0, f * h_m / Z)
    c0 = int(round(u - pw / 2.0))
    c1 = max(c0, int(round(u + pw / 2.0)) - 1)
    r0 = int(round(v - ph / 2.0))
    r1 = max(r0, int(round(v + ph / 2.0)) - 1)
    if c1 < 0 or r1 < 0 or c0 >= cam.width_px or r0 >= cam.height_px:
        return None
    return (max(0, r0), min(cam.height_px - 1, r1), max(0, c0), min(cam.width_px - 1, c1))


def render_image(
    layout: Layout, pose: CameraPose, registry: CategoryRegistry = DEFAULT_REGISTRY
) -> tuple[np.ndarray, list[Detection]]:
    """One pinhole view: label map plus detector output for visible signs."""
    cam = layout.camera
    for fp in layout.footprints:
        if fp.contains(pose.position.x, pose.position.y):
            raise ValueError(f"camera {pose.image_id} inside footprint {fp.id}")
    ids = {name: registry.id_of(name) for name in registry.names()}
    canvas = np.full((cam.height_px, cam.width_px), ids["sky"], dtype=np.uint8)
    horizon = int(math.floor(cam.height_px / 2.0)) + 1
    canvas[horizon:, :] = ids["road"]

    # Ground-plane sidewalk aprons around every footprint; building boxes
    # drawn later reclaim the interiors, leaving the 2.5 m band.
    for fp in layout.footprints:
        ex0, ey0, ex1, ey1 = fp.expanded(_APRON_M)
        quad = [(ex0, ey0, 0.0), (ex1, ey0, 0.0), (ex1, ey1, 0.0), (ex0, ey1, 0.0)]
        clipped = _clip_near(_to_cam(pose, cam, quad))
        _fill_convex(canvas, _project_poly(cam, clipped), ids["sidewalk"])

    # Vertical geometry, painter's order by plan distance to the camera.
    px, py = pose.position.x, pose.position.y
    drawables: list[tuple[float, int, str, object]] = []
    seq = 0
    for fp in layout.footprints:
        corners = fp.corners()
        faces = [
            [corners[i], corners[(i + 1) % 4]] for i in range(4)
        ]
        for a, b in faces:
            quad = [(a[0], a[1], 0.0), (b[0], b[1], 0.0), (b[0], b[1], fp.height_m), (a[0], a[1], fp.height_m)]
            cx, cy = (a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0
            drawables.append((math.hypot(cx - px, cy - py), seq, "poly", (quad, ids["building"])))
            seq += 1
        roof = [(x, y, fp.height_m) for x, y in corners]
        rcx, rcy = (fp.x0 + fp.x1) / 2.0, (fp.y0 + fp.y1) / 2.0
        drawables.append((math.hypot(rcx - px, rcy - py), seq, "poly", (roof, ids["building"])))
        seq += 1

    board_specs: list[tuple[int | None, tuple]] = []  # (truth index if sign, board)
    for t_idx, t in enumerate(layout.truth_objects):
        if t.category == "traffic_light":
            w_m, h_m, label = _LIGHT_W, _LIGHT_H, ids["traffic_light"]
        else:
            w_m, h_m, label = _SIGN_W, _SIGN_H, ids["traffic_sign"]
        board = (t.position.x, t.position.y, t.mount_m, w_m, h_m, label)
        d = math.hypot(t.position.x - px, t.position.y - py)
        drawables.append((d, seq, "board", (t_idx if t.category == "traffic_sign" else None, board)))
        seq += 1
    for ped in layout.pedestrians:
        board = (ped.position.x, ped.position.y, ped.height_m / 2.0, _PED_W, ped.height_m, ids["pedestrian"])
        d = math.hypot(ped.position.x - px, ped.position.y - py)
        drawables.append((d, seq, "board", (None, board)))
        seq += 1

    drawables.sort(key=lambda d: (-d[0], d[1]))
    sign_rects: dict[int, tuple[int, int, int, int]] = {}
    for _, _, kind, payload in drawables:
        if kind == "poly":
            quad, label = payload
            clipped = _clip_near(_to_cam(pose, cam, quad))
            _fill_convex(canvas, _project_poly(cam, clipped), label)
        else:
            t_idx, (x, y, z, w_m, h_m, label) = payload
            rect = _billboard_rect(pose, cam, x, y, z, w_m, h_m)
            if rect is None:
                continue
            r0, r1, c0, c1 = rect
            canvas[r0 : r1 + 1, c0 : c1 + 1] = label
            if t_idx is not None:
                sign_rects[t_idx] = rect

    detections: list[Detection] = []
    sign_id = ids["traffic_sign"]
    for t_idx in sorted(sign_rects):
        r0, r1, c0, c1 = sign_rects[t_idx]
        area = (r1 - r0 + 1) * (c1 - c0 + 1)
        visible = int((canvas[r0 : r1 + 1, c0 : c1 + 1] == sign_id).sum())
        if visible < max(9, int(0.2 * area)):
            continue  # occluded or clipped away
        truth = layout.truth_objects[t_idx]
        detections.append(
            Detection(
                image_id=pose.image_id,
                category="traffic_sign",
                subtype=truth.subtype,
                bbox=(float(c0), float(r0), float(c1 - c0 + 1), float(r1 - r0 + 1)),
                score=1.0,
            )
        )
    return canvas, detections


def truth_as_placed(layout: Layout) -> list[PlacedObject]:
    frame = make_frame(layout.center)
    out = []
    for t in layout.truth_objects:
        out.append(
            PlacedObject(
                category=t.category,
                subtype=t.subtype,
                light_kind=t.light_kind,
                position=unproject(frame, t.position),
                height_m=t.mount_m if t.category == "traffic_light" else None,
                source_images=[],
                support=1,
                inferred_only=False,
                intersection_id=layout.intersection_id,
                confidence=1.0,
            )
        )
    return out


def render_bundle(
    layout: Layout, registry: CategoryRegistry = DEFAULT_REGISTRY
) -> tuple[Bundle, list[PlacedObject]]:
    """Rasterize every camera pose; returns (ingest bundle, truth objects)."""
    validate_layout(layout)
    frame = make_frame(layout.center)
    images: list[ImageMeta] = []
    label_maps: dict[str, np.ndarray] = {}
    detections: dict[str, list[Detection]] = {}
    for pose in layout.cameras:
        canvas, dets = render_image(layout, pose, registry)
        label_maps[pose.image_id] = canvas
        if dets:
            detections[pose.image_id] = dets
        images.append(
            ImageMeta(
                image_id=pose.image_id,
                position=unproject(frame, pose.position),
                heading_deg=pose.heading_deg,
                sequence_id=pose.sequence_id,
                captured_at=None,
                width_px=layout.camera.width_px,
                height_px=layout.camera.height_px,
            )
        )
    footprints = [_fp_to_geo(fp, frame) for fp in layout.footprints]
    bundle = Bundle(
        images=images,
        label_maps=label_maps,
        detections=detections,
        footprints=footprints,
        buffers=[
            IntersectionBuffer(
                intersection_id=layout.intersection_id,
                center=layout.center,
                radius_m=layout.radius_m,
            )
        ],
        registry=registry,
    )
    return bundle, truth_as_placed(layout)


def _fp_to_geo(fp: RectFootprint, frame) -> Footprint:
    ring = tuple(
        unproject(frame, LocalPoint(x, y))
        for x, y in fp.corners() + [fp.corners()[0]]
    )
    return Footprint(id=fp.id, ring=ring)


# ---------------------------------------------------------------------------
# Disk output in the ingest formats.


def write_bundle(bundle: Bundle, out_dir: str) -> dict[str, str]:
    out = Path(out_dir)
    masks = out / "masks"
    masks.mkdir(parents=True, exist_ok=True)
    for image_id, arr in bundle.label_maps.items():
        write_pgm(str(masks / f"{image_id}.pgm"), arr)
    images_doc = [
        {
            "image_id": im.image_id,
            "lat": im.position.lat,
            "lon": im.position.lon,
            "heading_deg": im.heading_deg,
            "sequence_id": im.sequence_id,
            "captured_at": im.captured_at,
            "width_px": im.width_px,
            "height_px": im.height_px,
        }
        for im in bundle.images
    ]
    (out / "images.json").write_text(json.dumps(images_doc, indent=2, sort_keys=True))
    lines = []
    for image_id in sorted(bundle.detections):
        for d in bundle.detections[image_id]:
            lines.append(
                json.dumps(
                    {
                        "image_id": d.image_id,
                        "category": d.category,
                        "subtype": d.subtype,
                        "bbox": list(d.bbox),
                        "score": d.score,
                    },
                    sort_keys=True,
                )
            )
    (out / "detections.jsonl").write_text("\n".join(lines) + ("\n" if lines else ""))
    fp_doc = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "properties": {"id": fp.id},
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[[v.lon, v.lat] for v in fp.ring]],
                },
            }
            for fp in bundle.footprints
        ],
    }
    (out / "footprints.geojson").write_text(json.dumps(fp_doc, indent=2, sort_keys=True))
    buf_doc = [
        {
            "intersection_id": b.intersection_id,
            "lat": b.center.lat,
            "lon": b.center.lon,
            "radius_m": b.radius_m,
        }
        for b in bundle.buffers
    ]
    (out / "buffers.json").write_text(json.dumps(buf_doc, indent=2, sort_keys=True))
    return {
        "images": str(out / "images.json"),
        "masks": str(masks),
        "detections": str(out / "detections.jsonl"),
        "footprints": str(out / "footprints.geojson"),
        "buffers": str(out / "buffers.json"),
    }


def write_truth(truth: list[PlacedObject], path: str) -> None:
    Path(path).write_text(json.dumps(to_geojson(truth), indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# Layout JSON I/O.


def layout_to_json(layout: Layout) -> dict:
    return {
        "intersection_id": layout.intersection_id,
        "kind": layout.kind,
        "center": {"lat": layout.center.lat, "lon": layout.center.lon},
        "radius_m": layout.radius_m,
        "camera": {
            "hfov_deg": layout.camera.hfov_deg,
            "width_px": layout.camera.width_px,
            "height_px": layout.camera.height_px,
            "cam_height_m": layout.camera.cam_height_m,
        },
        "footprints": [
            {"id": fp.id, "x0": fp.x0, "y0": fp.y0, "x1": fp.x1, "y1": fp.y1, "height_m": fp.height_m}
            for fp in layout.footprints
        ],
        "truth_objects": [
            {
                "category": t.category,
                "subtype": t.subtype,
                "light_kind": t.light_kind,
                "x": t.position.x,
                "y": t.position.y,
                "mount_m": t.mount_m,
            }
            for t in layout.truth_objects
        ],
        "pedestrians": [
            {"x": p.position.x, "y": p.position.y, "height_m": p.height_m}
            for p in layout.pedestrians
        ],
        "cameras": [
            {
                "image_id": c.image_id,
                "sequence_id": c.sequence_id,
                "x": c.position.x,
                "y": c.position.y,
                "heading_deg": c.heading_deg,
            }
            for c in layout.cameras
        ],
    }


def layout_from_json(doc: dict) -> Layout:
    cam = doc.get("camera", {})
    return Layout(
        intersection_id=doc["intersection_id"],
        center=GeoPoint(doc["center"]["lat"], doc["center"]["lon"]),
        footprints=[
            RectFootprint(f["id"], f["x0"], f["y0"], f["x1"], f["y1"], f["height_m"])
            for f in doc.get("footprints", [])
        ],
        truth_objects=[
            TruthObject(
                t["category"],
                t.get("subtype"),
                t.get("light_kind"),
                LocalPoint(t["x"], t["y"]),
                t["mount_m"],
            )
            for t in doc.get("truth_objects", [])
        ],
        pedestrians=[
            PedestrianSpec(LocalPoint(p["x"], p["y"]), p["height_m"])
            for p in doc.get("pedestrians", [])
        ],
        cameras=[
            CameraPose(c["image_id"], c["sequence_id"], LocalPoint(c["x"], c["y"]), c["heading_deg"])
            for c in doc.get("cameras", [])
        ],
        camera=CameraModel(
            hfov_deg=cam.get("hfov_deg", 90.0),
            width_px=cam.get("width_px", 1024),
            height_px=cam.get("height_px", 768),
            cam_height_m=cam.get("cam_height_m", 1.6),
        ),
        radius_m=doc.get("radius_m", 50.0),
        kind=doc.get("kind", "crossroad"),
    )


def save_layouts(layouts: list[Layout], path: str) -> None:
    Path(path).write_text(json.dumps([layout_to_json(l) for l in layouts], indent=2, sort_keys=True))


def load_layouts(path: str) -> list[Layout]:
    return [layout_from_json(doc) for doc in json.loads(Path(path).read_text())]


# ---------------------------------------------------------------------------
# Standard fixture family: crossroads and T-junctions in German signal style.


_SUBTYPES = ("stop", "yield", "no_entry", "speed_30", "priority_road")


def _anchor(corner: tuple[float, float], offset: float = 2.5) -> LocalPoint:
    x, y = corner
    d = math.hypot(x, y)
    s = offset / d
    return LocalPoint(x * (1.0 - s), y * (1.0 - s))


def _pole_truths(rng: random.Random, anchor: LocalPoint, with_lights: bool) -> list[TruthObject]:
    # Distinct subtypes within one pole: stacked twins at the same point would
    # collapse into a single placement and be unrecoverable by any matcher.
    def signs(mounts):
        picks = rng.sample(_SUBTYPES, len(mounts))
        return [
            TruthObject("traffic_sign", sub, None, anchor, mount)
            for sub, mount in zip(picks, mounts)
        ]

    out: list[TruthObject] = []
    if with_lights:
        pattern = rng.choice(["light_only", "sign_above_light", "signs_above_and_below_light"])
        out.append(TruthObject("traffic_light", None, "low", anchor, 4.0))
        if pattern == "sign_above_light":
            out.extend(signs([5.0]))
        elif pattern == "signs_above_and_below_light":
            out.extend(signs([5.0, 2.9]))
    else:
        pattern = rng.choice(["none", "sign_alone", "sign_stack"])
        if pattern == "sign_alone":
            out.extend(signs([3.0]))
        elif pattern == "sign_stack":
            out.extend(signs([3.4, 2.5]))
    return out


_TRACK_GEOM = {
    # direction: (unit along travel, lane offset unit (right of travel), base heading)
    "WE": ((1.0, 0.0), (0.0, -1.0), 90.0),
    "EW": ((-1.0, 0.0), (0.0, 1.0), 270.0),
    "NS": ((0.0, -1.0), (-1.0, 0.0), 180.0),
    "SN": ((0.0, 1.0), (1.0, 0.0), 0.0),
}


def _track_poses(
    rng: random.Random, intersection_id: str, direction: str, rh: float
) -> list[CameraPose]:
    along, right, heading0 = _TRACK_GEOM[direction]
    n = rng.randint(3, 6)
    d0 = rng.uniform(38.0, 46.0)
    d1 = rng.uniform(14.0, 18.0)
    split = rng.random() < 0.5 and n >= 4
    poses = []
    for k in range(n):
        d = d0 + (d1 - d0) * (k / (n - 1)) + rng.uniform(-0.8, 0.8)
        lat_off = rh / 2.0 + rng.uniform(-0.6, 0.6)
        x = -d * along[0] + lat_off * right[0]
        y = -d * along[1] + lat_off * right[1]
        heading = (heading0 + rng.uniform(-6.0, 6.0)) % 360.0
        seq = 0 if not split or k < n // 2 else 1
        poses.append(
            CameraPose(
                image_id=f"{intersection_id}-{direction}-{k:02d}",
                sequence_id=f"{intersection_id}-{direction}-s{seq}",
                position=LocalPoint(x, y),
                heading_deg=heading,
            )
        )
    return poses


def standard_fixtures(n: int = 100, seed: int = 1) -> list[Layout]:
    """Deterministic family of crossroads (even index) and T-junctions (odd)."""
    layouts = []
    for i in range(n):
        rng = random.Random(f"{seed}:{i}")
        kind = "crossroad" if i % 2 == 0 else "t_junction"
        iid = f"x{i:04d}"
        center = GeoPoint(52.30 + 0.002 * i, 13.20 + 0.0017 * (i % 9))
        rh = rng.uniform(6.0, 8.0)
        inner = rh + _APRON_M
        quadrants = {
            "ne": (1, 1),
            "nw": (-1, 1),
            "sw": (-1, -1),
            "se": (1, -1),
        }
        footprints = []
        for name, (sx, sy) in quadrants.items():
            side = rng.uniform(14.0, 24.0)
            height = rng.uniform(10.0, 18.0)
            xs = sorted([sx * inner, sx * (inner + side)])
            ys = sorted([sy * inner, sy * (inner + side)])
            footprints.append(RectFootprint(f"{iid}-{name}", xs[0], ys[0], xs[1], ys[1], height))

        with_lights = rng.random() < 0.85
        pole_corners = ["nw", "ne", "sw", "se"] if kind == "crossroad" else ["nw", "ne"]
        truths: list[TruthObject] = []
        for name in pole_corners:
            sx, sy = quadrants[name]
            truths.extend(_pole_truths(rng, _anchor((sx * inner, sy * inner)), with_lights))
        entries = (
            [(-inner, 0.0), (inner, 0.0), (0.0, inner), (0.0, -inner)]
            if kind == "crossroad"
            else [(-inner, 0.0), (inner, 0.0), (0.0, inner)]
        )
        for ex, ey in entries:
            if rng.random() < 0.5:
                truths.append(
                    TruthObject("traffic_light", None, "high", LocalPoint(ex, ey), 7.0)
                )

        pedestrians = []
        strips = [(-1, -1), (-1, 1), (1, -1)]
        for k in range(rng.randint(1, 3)):
            sx, sy = strips[k % len(strips)]
            x = sx * (inner + rng.uniform(2.0, 12.0))
            y = sy * (inner - 1.25)
            pedestrians.append(PedestrianSpec(LocalPoint(x, y), rng.uniform(1.65, 1.9)))

        directions = ["WE", "EW", "SN", "NS"] if kind == "crossroad" else ["WE", "EW", "NS"]
        cameras = []
        for direction in directions:
            cameras.extend(_track_poses(rng, iid, direction, rh))

        layouts.append(
            Layout(
                intersection_id=iid,
                center=center,
                footprints=footprints,
                truth_objects=truths,
                pedestrians=pedestrians,
                cameras=cameras,
                kind=kind,
            )
        )
    return layouts
