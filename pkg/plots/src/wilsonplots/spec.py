"""Plot specification: one JSON document per figure."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

KINDS = ("iterations", "rho", "resid-error", "spectrum", "modefield")


@dataclass
class PlotSpec:
    input: str  # CSV path, or text grid for kind='modefield'
    kind: str
    out: str  # image path; extension selects PNG or SVG
    filters: dict = field(default_factory=dict)  # beta / n / solver equality filters
    scale: int = 8  # pixels per grid cell for modefield

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if Path(self.out).suffix.lower() not in (".png", ".svg"):
            raise ValueError("output extension must be .png or .svg")
        if self.scale < 1:
            raise ValueError("scale must be >= 1")


def load_spec(path) -> PlotSpec:
    with open(path) as f:
        doc = json.load(f)
    unknown = set(doc) - {"input", "kind", "out", "filters", "scale"}
    if unknown:
        raise ValueError(f"unknown spec keys: {sorted(unknown)}")
    return PlotSpec(**doc)
