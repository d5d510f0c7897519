"""Grid geometry, cost layers, and costmap snapshot export.

Costs live on a 0..255 scale: 0 is free, 255 (LETHAL) is an observed
obstacle, 254 (INSCRIBED) marks cells whose occupancy would put the robot
footprint in collision.  A cell is impassable iff its cost >= INSCRIBED.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

FREE = 0
INSCRIBED = 254
LETHAL = 255

COST_DTYPE = np.int32


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a costmap grid.

    origin is the world position of the outer corner of cell (0, 0);
    cell (cx, cy) spans [origin + cx*res, origin + (cx+1)*res) in x and
    likewise in y.  Cell indexing is (cx, cy); arrays are stored row-major
    as [cy, cx].
    """

    width: int
    height: int
    resolution: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be >= 1x1")
        if self.resolution <= 0.0:
            raise ValueError("grid resolution must be > 0")

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """World point -> containing cell (points on a boundary go up)."""
        cx = int(math.floor((x - self.origin[0]) / self.resolution))
        cy = int(math.floor((y - self.origin[1]) / self.resolution))
        return cx, cy

    def center_of(self, cx: int, cy: int) -> tuple[float, float]:
        """Cell -> world coordinates of its center."""
        return (
            self.origin[0] + (cx + 0.5) * self.resolution,
            self.origin[1] + (cy + 0.5) * self.resolution,
        )

    def in_bounds(self, cx: int, cy: int) -> bool:
        return 0 <= cx < self.width and 0 <= cy < self.height

    @property
    def world_width(self) -> float:
        return self.width * self.resolution

    @property
    def world_height(self) -> float:
        return self.height * self.resolution


@dataclass
class CostLayer:
    """One named cost overlay on a grid; untouched cells stay 0."""

    spec: GridSpec
    cost: np.ndarray = field(default=None)  # type: ignore[assignment]
    name: str = "layer"

    def __post_init__(self):
        if self.cost is None:
            self.cost = np.zeros((self.spec.height, self.spec.width), dtype=COST_DTYPE)
        else:
            self.cost = np.asarray(self.cost, dtype=COST_DTYPE)
            if self.cost.shape != (self.spec.height, self.spec.width):
                raise ValueError(
                    f"cost array shape {self.cost.shape} does not match grid "
                    f"{self.spec.height}x{self.spec.width}"
                )
        if self.cost.size and (self.cost.min() < 0 or self.cost.max() > LETHAL):
            raise ValueError("cell costs must lie in [0, 255]")

    def at(self, cx: int, cy: int) -> int:
        return int(self.cost[cy, cx])

    def copy(self, name: str | None = None) -> "CostLayer":
        return CostLayer(self.spec, self.cost.copy(), name or self.name)


def combine(layers: list[CostLayer], name: str = "composite") -> CostLayer:
    """Cellwise maximum of layers sharing one GridSpec.

    Max keeps the most conservative claim about each cell, so combining is
    commutative, associative, idempotent, and monotone in every input.
    """
    if not layers:
        raise ValueError("combine() needs at least one layer")
    spec = layers[0].spec
    for layer in layers[1:]:
        if layer.spec != spec:
            raise ValueError("combine() requires identical grid specs")
    out = np.maximum.reduce([layer.cost for layer in layers])
    return CostLayer(spec, out, name)


def write_pgm(layer: CostLayer, path: str, tick: int = 0) -> None:
    """Export a layer as binary PGM (P5, maxval 255) plus a text sidecar.

    Cell (0, 0) is the top-left pixel and rows are written in cy order, so
    the image is a direct row-major dump of the cost array.  The sidecar
    at <path>.meta records the grid spec, layer name, and tick.
    """
    spec = layer.spec
    header = f"P5\n{spec.width} {spec.height}\n255\n".encode("ascii")
    body = layer.cost.astype(np.uint8).tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(body)
    meta = (
        f"layer: {layer.name}\n"
        f"tick: {tick}\n"
        f"width: {spec.width}\n"
        f"height: {spec.height}\n"
        f"resolution: {spec.resolution!r}\n"
        f"origin: {spec.origin[0]!r} {spec.origin[1]!r}\n"
    )
    with open(f"{path}.meta", "w", encoding="ascii") as f:
        f.write(meta)
