"""Coefficient-level image model.

A :class:`QuantizedImage` is a JPEG frozen at the quantized-DCT level:
exactly what the entropy coder reads and writes, before any dequantization
or inverse transform.  All other modules operate on this representation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidImage
from .tables import NAT_TO_ZZ

MAX_COEF = 32767  # coefficients must fit signed 16 bits
MAX_AC_MAGNITUDE = 1023    # largest AC value codable in a baseline scan
MAX_DC_DIFF = 2047         # largest DC difference codable in a baseline scan


@dataclass(frozen=True)
class QuantTable:
    """One quantization table; ``values`` are stored in zig-zag order,
    matching the stream layout."""

    table_id: int
    values: np.ndarray  # shape (64,), int64, zig-zag order

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int64).reshape(64)
        object.__setattr__(self, "values", values)
        if not (0 <= self.table_id <= 3):
            raise InvalidImage(f"quant table id {self.table_id} out of range 0..3")
        if values.min() < 1 or values.max() > 65535:
            raise InvalidImage("quant table entries must be in 1..65535")

    def natural(self) -> np.ndarray:
        """Table entries reordered to natural (row-major) coefficient order."""
        return self.values[NAT_TO_ZZ]

    def __eq__(self, other):
        return (isinstance(other, QuantTable)
                and self.table_id == other.table_id
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.table_id, self.values.tobytes()))


@dataclass(frozen=True)
class ComponentSpec:
    """Identity, sampling factors and quant-table binding of one component."""

    component_id: int
    h_sampling: int
    v_sampling: int
    quant_table_id: int

    def __post_init__(self):
        if not (1 <= self.h_sampling <= 4 and 1 <= self.v_sampling <= 4):
            raise InvalidImage(
                f"sampling factors {self.h_sampling}x{self.v_sampling} out of range 1..4")
        if not (0 <= self.quant_table_id <= 3):
            raise InvalidImage(f"quant table id {self.quant_table_id} out of range 0..3")


def component_plane_size(width: int, height: int, comp: ComponentSpec,
                         h_max: int, v_max: int) -> tuple[int, int]:
    """Pixel size (w, h) of a component plane under JPEG sampling rules."""
    w = math.ceil(width * comp.h_sampling / h_max)
    h = math.ceil(height * comp.v_sampling / v_max)
    return w, h


def component_block_grid(width: int, height: int, comp: ComponentSpec,
                         h_max: int, v_max: int) -> tuple[int, int]:
    """Block grid (rows, cols) of a component, without MCU padding."""
    w, h = component_plane_size(width, height, comp, h_max, v_max)
    return math.ceil(h / 8), math.ceil(w / 8)


@dataclass
class QuantizedImage:
    """A baseline JPEG at the quantized-coefficient level.

    ``blocks[i]`` is the block grid of component ``i``: an int32 array of
    shape (rows, cols, 64) in natural coefficient order, index 0 = DC.
    Quantization has already happened; values are the integers the entropy
    coder transports.
    """

    width: int
    height: int
    components: tuple[ComponentSpec, ...]
    quant_tables: tuple[QuantTable, ...]
    blocks: tuple[np.ndarray, ...]
    restart_interval: int = 0
    app_segments: tuple[tuple[int, bytes], ...] = field(default_factory=tuple)

    def __post_init__(self):
        self.components = tuple(self.components)
        self.quant_tables = tuple(self.quant_tables)
        self.blocks = tuple(np.asarray(b, dtype=np.int32) for b in self.blocks)
        self.app_segments = tuple(self.app_segments)

    # -- geometry ------------------------------------------------------------

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def max_sampling(self) -> tuple[int, int]:
        return (max(c.h_sampling for c in self.components),
                max(c.v_sampling for c in self.components))

    def plane_size(self, i: int) -> tuple[int, int]:
        h_max, v_max = self.max_sampling
        return component_plane_size(self.width, self.height, self.components[i],
                                    h_max, v_max)

    def block_grid(self, i: int) -> tuple[int, int]:
        h_max, v_max = self.max_sampling
        return component_block_grid(self.width, self.height, self.components[i],
                                    h_max, v_max)

    def quant_table_for(self, i: int) -> QuantTable:
        tid = self.components[i].quant_table_id
        for t in self.quant_tables:
            if t.table_id == tid:
                return t
        raise InvalidImage(f"component {i} references missing quant table {tid}")

    def samplings(self) -> tuple[tuple[int, int], ...]:
        return tuple((c.h_sampling, c.v_sampling) for c in self.components)

    # -- validation ----------------------------------------------------------

    def validate(self) -> None:
        """Raise InvalidImage on any structural violation."""
        if self.width < 1 or self.height < 1:
            raise InvalidImage(f"bad dimensions {self.width}x{self.height}")
        if self.n_components not in (1, 3):
            raise InvalidImage(f"{self.n_components} components; expected 1 or 3")
        ids = [c.component_id for c in self.components]
        if len(set(ids)) != len(ids):
            raise InvalidImage("duplicate component ids")
        tids = [t.table_id for t in self.quant_tables]
        if len(set(tids)) != len(tids):
            raise InvalidImage("duplicate quant table ids")
        h_max, v_max = self.max_sampling
        for c in self.components:
            if h_max % c.h_sampling or v_max % c.v_sampling:
                raise InvalidImage(
                    f"sampling {c.h_sampling}x{c.v_sampling} does not divide "
                    f"max sampling {h_max}x{v_max}")
        if len(self.blocks) != self.n_components:
            raise InvalidImage("one block grid per component required")
        if self.restart_interval < 0:
            raise InvalidImage("negative restart interval")
        for i, grid in enumerate(self.blocks):
            self.quant_table_for(i)
            expected = self.block_grid(i)
            if grid.shape != (*expected, 64):
                raise InvalidImage(
                    f"component {i}: block grid {grid.shape} != expected {(*expected, 64)}")
            if grid.size and (grid.min() < -MAX_COEF - 1 or grid.max() > MAX_COEF):
                raise InvalidImage(f"component {i}: coefficient outside signed 16 bits")

    # -- equality ------------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, QuantizedImage):
            return NotImplemented
        return (self.width == other.width
                and self.height == other.height
                and self.components == other.components
                and self.quant_tables == other.quant_tables
                and self.restart_interval == other.restart_interval
                and self.app_segments == other.app_segments
                and len(self.blocks) == len(other.blocks)
                and all(np.array_equal(a, b) for a, b in zip(self.blocks, other.blocks)))

    def same_geometry(self, other: "QuantizedImage") -> bool:
        return (self.width == other.width and self.height == other.height
                and self.components == other.components
                and self.quant_tables == other.quant_tables)

    def replace_blocks(self, blocks) -> "QuantizedImage":
        """New image sharing all metadata with fresh coefficient grids."""
        return QuantizedImage(
            width=self.width, height=self.height,
            components=self.components, quant_tables=self.quant_tables,
            blocks=tuple(blocks), restart_interval=self.restart_interval,
            app_segments=self.app_segments)


@dataclass
class JpegInfo:
    """Read-only report produced by stream inspection."""

    kind: str                      # "baseline", "progressive", ...
    width: int
    height: int
    precision: int
    components: tuple[dict, ...]   # id, h, v, quant_table_id
    quant_tables: dict             # table id -> 64 zig-zag values (list)
    huffman_tables: tuple[tuple[str, int], ...]   # ("dc"|"ac", id) in order seen
    restart_interval: int
    markers: tuple[tuple[str, int], ...]          # (name, segment length) in order
