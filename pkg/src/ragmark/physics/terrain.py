"""Ground model: a flat plane or a 1-D heightfield y(x).

Heightfields are sampled at uniform x-spacing and interpolated linearly;
queries outside the sampled span clamp to the nearest endpoint.  Terrain
is invariant along z.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidValue

FLAT = 0
HEIGHTFIELD = 1


@dataclass(frozen=True)
class Terrain:
    kind: str = "flat_plane"  # flat_plane | heightfield
    heights: np.ndarray = field(default_factory=lambda: np.zeros(2))
    spacing: float = 0.1
    x0: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("flat_plane", "heightfield"):
            raise InvalidValue(f"unknown terrain kind {self.kind!r}")
        if self.spacing <= 0:
            raise InvalidValue("terrain spacing must be > 0")
        h = np.ascontiguousarray(np.asarray(self.heights, dtype=np.float64))
        if h.ndim != 1 or h.size < 2:
            raise InvalidValue("heightfield needs at least two samples")
        if not np.all(np.isfinite(h)):
            raise InvalidValue("heightfield contains non-finite samples")
        object.__setattr__(self, "heights", h)

    @property
    def kind_code(self) -> int:
        return FLAT if self.kind == "flat_plane" else HEIGHTFIELD

    def y(self, x: float) -> float:
        return query_height(self, x)

    def span(self) -> tuple[float, float]:
        return self.x0, self.x0 + self.spacing * (len(self.heights) - 1)

    def polyline(self) -> list[tuple[float, float]]:
        """(x, y) vertices for rendering; flat planes report a wide segment."""
        if self.kind == "flat_plane":
            return [(-1000.0, 0.0), (1000.0, 0.0)]
        xs = self.x0 + self.spacing * np.arange(len(self.heights))
        return [(float(x), float(y)) for x, y in zip(xs, self.heights)]


def flat_terrain() -> Terrain:
    return Terrain()


def query_height(terrain: Terrain, x: float) -> float:
    """Interpolated ground height at x; flat planes are y = 0 everywhere."""
    if terrain.kind == "flat_plane":
        return 0.0
    h = terrain.heights
    t = (x - terrain.x0) / terrain.spacing
    if t <= 0.0:
        return float(h[0])
    if t >= len(h) - 1:
        return float(h[-1])
    i = int(t)
    frac = t - i
    return float(h[i] * (1.0 - frac) + h[i + 1] * frac)
