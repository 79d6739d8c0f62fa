"""MCU stream geometry: the order in which blocks travel in a scan.

A layout maps every block position in entropy-stream order to a slot in a
per-component padded block grid.  Interleaved scans pad each component up
to whole MCUs; single-component scans walk the component's own grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .types import ComponentSpec, component_block_grid


@dataclass(frozen=True)
class StreamLayout:
    comp_index: np.ndarray      # uint8[n_blocks] component of each stream slot
    grid_offset: np.ndarray     # int64[n_blocks] flat index into padded grid
    padded_grids: tuple[tuple[int, int], ...]  # (rows, cols) incl. MCU padding
    grids: tuple[tuple[int, int], ...]         # (rows, cols) without padding
    blocks_per_mcu: int
    mcu_count: int

    @property
    def n_blocks(self) -> int:
        return int(self.comp_index.shape[0])


def interleaved_layout(components: tuple[ComponentSpec, ...],
                       width: int, height: int) -> StreamLayout:
    """Stream order for a scan interleaving all components."""
    h_max = max(c.h_sampling for c in components)
    v_max = max(c.v_sampling for c in components)
    mcus_x = math.ceil(width / (8 * h_max))
    mcus_y = math.ceil(height / (8 * v_max))
    mcu_count = mcus_x * mcus_y

    padded = tuple((mcus_y * c.v_sampling, mcus_x * c.h_sampling) for c in components)
    grids = tuple(component_block_grid(width, height, c, h_max, v_max)
                  for c in components)

    entries = [(ci, by, bx)
               for ci, c in enumerate(components)
               for by in range(c.v_sampling)
               for bx in range(c.h_sampling)]
    bpm = len(entries)

    my = np.repeat(np.arange(mcus_y, dtype=np.int64), mcus_x)
    mx = np.tile(np.arange(mcus_x, dtype=np.int64), mcus_y)

    comp_index = np.empty((mcu_count, bpm), dtype=np.uint8)
    grid_offset = np.empty((mcu_count, bpm), dtype=np.int64)
    for j, (ci, by, bx) in enumerate(entries):
        c = components[ci]
        cols = padded[ci][1]
        comp_index[:, j] = ci
        grid_offset[:, j] = (my * c.v_sampling + by) * cols + (mx * c.h_sampling + bx)
    return StreamLayout(comp_index.reshape(-1), grid_offset.reshape(-1),
                        padded, grids, bpm, mcu_count)


def single_component_layout(components: tuple[ComponentSpec, ...],
                            width: int, height: int, ci: int) -> StreamLayout:
    """Stream order for a non-interleaved scan of one component: its own
    block grid in row-major order, one block per MCU, no padding."""
    h_max = max(c.h_sampling for c in components)
    v_max = max(c.v_sampling for c in components)
    grids = tuple(component_block_grid(width, height, c, h_max, v_max)
                  for c in components)
    rows, cols = grids[ci]
    n = rows * cols
    comp_index = np.full(n, ci, dtype=np.uint8)
    grid_offset = np.arange(n, dtype=np.int64)
    padded = tuple(grids)
    return StreamLayout(comp_index, grid_offset, padded, grids, 1, n)
