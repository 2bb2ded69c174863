"""Run configuration: one flat dataclass, file + override parsing."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .grammar import GrammarConfig


@dataclass(frozen=True)
class RunConfig:
    # ingest / buffers
    buffer_radius_m: float = 50.0
    # scene
    min_region_px: int = 25
    iou_min: float = 0.3
    # grammar
    high_factor: float = 3.0
    low_factor: float = 2.0
    ring_px: int = 15
    sidewalk_gap_px: int = 40
    stack_dx_frac: float = 0.04
    pedestrian_fallback_frac: float = 0.22
    high_height_m: float = 7.0
    low_height_m: float = 4.0
    # placer
    corner_radius_m: float = 26.0
    inner_radius_m: float = 10.0
    offset_m: float = 2.5
    dedup_radius_m: float = 1.5
    # evaluation
    match_radius_m: float = 5.0
    # misc
    seed: int = 1
    jobs: int = 1

    def grammar(self) -> GrammarConfig:
        return GrammarConfig(
            high_factor=self.high_factor,
            low_factor=self.low_factor,
            ring_px=self.ring_px,
            sidewalk_gap_px=self.sidewalk_gap_px,
            stack_dx_frac=self.stack_dx_frac,
            pedestrian_fallback_frac=self.pedestrian_fallback_frac,
            high_height_m=self.high_height_m,
            low_height_m=self.low_height_m,
        )

    def show(self) -> str:
        lines = [
            f"{f.name} = {getattr(self, f.name)}"
            for f in dataclasses.fields(self)
        ]
        return "\n".join(lines)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, raw: str):
    if key not in _FIELD_TYPES:
        raise ValueError(f"unknown config key '{key}'")
    kind = _FIELD_TYPES[key]
    try:
        if kind in ("int", int):
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ValueError(f"config key '{key}': cannot parse '{raw}'") from exc


def parse_overrides(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"override '{pair}' is not key=value")
        key, raw = pair.split("=", 1)
        key, raw = key.strip(), raw.strip()
        out[key] = _coerce(key, raw)
    return out


def load_config(path: str | None = None, overrides: list[str] | None = None) -> RunConfig:
    """Build a RunConfig from an optional key=value file plus CLI overrides."""
    values: dict = {}
    if path is not None:
        for ln, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {ln + 1}: expected key = value")
            key, raw = (part.strip() for part in line.split("=", 1))
            values[key] = _coerce(key, raw)
    if overrides:
        values.update(parse_overrides(overrides))
    return RunConfig(**values)
