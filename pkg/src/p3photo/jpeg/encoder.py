"""Coefficient-level JPEG encoding back to a baseline JFIF stream."""
from __future__ import annotations

import math
import struct

import numpy as np

from ..errors import InvalidImage
from . import entropy, tables
from .geometry import interleaved_layout, single_component_layout
from .huffman import encode_tables, optimal_table
from .types import QuantizedImage


def _pad_grid_to(grid: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Extend a block grid to MCU-padded size by replicating edge blocks.

    Edge replication keeps DC differences at zero across the padding,
    which costs almost nothing in the entropy stream."""
    r, c = grid.shape[:2]
    if (r, c) == (rows, cols):
        return grid
    return np.pad(grid, ((0, rows - r), (0, cols - c), (0, 0)), mode="edge")


def _write_app0_jfif(parts: list):
    payload = b"JFIF\x00" + bytes([1, 1, 0]) + struct.pack(">HH", 1, 1) + b"\x00\x00"
    parts.append(b"\xff\xe0" + struct.pack(">H", 2 + len(payload)) + payload)


def _write_dqt(parts: list, img: QuantizedImage):
    for t in img.quant_tables:
        vals = t.values
        if vals.max() > 255:
            body = bytes([0x10 | t.table_id]) + vals.astype(">u2").tobytes()
        else:
            body = bytes([t.table_id]) + vals.astype(np.uint8).tobytes()
        parts.append(b"\xff\xdb" + struct.pack(">H", 2 + len(body)) + body)


def _write_sof0(parts: list, img: QuantizedImage):
    body = struct.pack(">BHHB", 8, img.height, img.width, img.n_components)
    for c in img.components:
        body += bytes([c.component_id,
                       (c.h_sampling << 4) | c.v_sampling,
                       c.quant_table_id])
    parts.append(b"\xff\xc0" + struct.pack(">H", 2 + len(body)) + body)


def _write_dht(parts: list, defs: list[tuple[int, int, list[int], list[int]]]):
    for tc, th, bits, values in defs:
        body = bytes([(tc << 4) | th]) + bytes(bits) + bytes(values)
        parts.append(b"\xff\xc4" + struct.pack(">H", 2 + len(body)) + body)


def _write_sos(parts: list, img: QuantizedImage, table_of: np.ndarray):
    body = bytes([img.n_components])
    for i, c in enumerate(img.components):
        t = int(table_of[i])
        body += bytes([c.component_id, (t << 4) | t])
    body += bytes([0, 63, 0])
    parts.append(b"\xff\xda" + struct.pack(">H", 2 + len(body)) + body)


def encode_jpeg(img: QuantizedImage, *, optimized_huffman: bool = True) -> bytes:
    """Serialize a QuantizedImage as a baseline JFIF byte stream.

    Huffman tables are derived per image by default; pass
    ``optimized_huffman=False`` to use the standard example tables.
    Decoding the result reproduces ``img`` exactly.
    """
    img.validate()
    ncomp = img.n_components

    if ncomp == 1:
        layout = single_component_layout(img.components, img.width, img.height, 0)
    else:
        layout = interleaved_layout(img.components, img.width, img.height)

    stream = np.empty((layout.n_blocks, 64), dtype=np.int32)
    for ci in range(ncomp):
        rows_p, cols_p = layout.padded_grids[ci]
        padded = _pad_grid_to(img.blocks[ci], rows_p, cols_p).reshape(-1, 64)
        sel = layout.comp_index == ci
        stream[sel] = padded[layout.grid_offset[sel]]
    stream_zz = stream[:, tables.ZZ_TO_NAT]

    # luma binds table pair 0, chroma components share pair 1
    table_of = np.zeros(ncomp, dtype=np.uint8)
    if ncomp > 1:
        table_of[1:] = 1
    ntab = int(table_of.max()) + 1
    tbl_dc = table_of[layout.comp_index]
    tbl_ac = tbl_dc

    interval = img.restart_interval
    mcus = layout.mcu_count
    if interval:
        nseg = math.ceil(mcus / interval)
        bounds = [0]
        left = mcus
        for _ in range(nseg):
            take = min(interval, left)
            bounds.append(bounds[-1] + take * layout.blocks_per_mcu)
            left -= take
        seg_bounds = np.asarray(bounds, dtype=np.int64)
    else:
        seg_bounds = np.asarray([0, layout.n_blocks], dtype=np.int64)

    dc_freq = np.zeros((ntab, 256), dtype=np.int64)
    ac_freq = np.zeros((ntab, 256), dtype=np.int64)
    entropy.symbol_frequencies(stream_zz, tbl_dc, tbl_ac, layout.comp_index,
                               ncomp, seg_bounds, dc_freq, ac_freq)

    if dc_freq[:, 12:].any():
        raise InvalidImage("DC difference exceeds the baseline 11-bit range")
    ac_sizes_seen = np.flatnonzero(ac_freq.sum(axis=0)) & 0x0F
    if (ac_sizes_seen > 10).any():
        raise InvalidImage("AC coefficient exceeds the baseline 10-bit range")

    huff_defs = []
    if optimized_huffman:
        for t in range(ntab):
            huff_defs.append((0, t, *optimal_table(dc_freq[t])))
            huff_defs.append((1, t, *optimal_table(ac_freq[t])))
    else:
        huff_defs.append((0, 0, tables.STD_DC_LUMA_BITS, tables.STD_DC_LUMA_VALS))
        huff_defs.append((1, 0, tables.STD_AC_LUMA_BITS, tables.STD_AC_LUMA_VALS))
        if ntab > 1:
            huff_defs.append((0, 1, tables.STD_DC_CHROMA_BITS,
                              tables.STD_DC_CHROMA_VALS))
            huff_defs.append((1, 1, tables.STD_AC_CHROMA_BITS,
                              tables.STD_AC_CHROMA_VALS))

    dc_code = np.zeros((ntab, 256), dtype=np.uint32)
    dc_size = np.zeros((ntab, 256), dtype=np.uint8)
    ac_code = np.zeros((ntab, 256), dtype=np.uint32)
    ac_size = np.zeros((ntab, 256), dtype=np.uint8)
    for tc, th, bits, values in huff_defs:
        code, size = encode_tables(bits, values)
        if tc == 0:
            dc_code[th], dc_size[th] = code, size
        else:
            ac_code[th], ac_size[th] = code, size

    nseg = seg_bounds.shape[0] - 1
    buf = np.empty(460 * layout.n_blocks + 4 * nseg + 1024, dtype=np.uint8)
    written = entropy.emit_scan(stream_zz, tbl_dc, tbl_ac, layout.comp_index,
                                ncomp, seg_bounds, dc_code, dc_size,
                                ac_code, ac_size, buf)
    if written < 0:
        raise InvalidImage("entropy data exceeded the output bound")

    parts: list[bytes] = [b"\xff\xd8"]
    _write_app0_jfif(parts)
    for n, payload in img.app_segments:
        parts.append(bytes([0xFF, 0xE0 + n]) + struct.pack(">H", 2 + len(payload))
                     + payload)
    _write_dqt(parts, img)
    _write_sof0(parts, img)
    _write_dht(parts, huff_defs)
    if interval:
        parts.append(b"\xff\xdd" + struct.pack(">H", 4) + struct.pack(">H", interval))
    _write_sos(parts, img, table_of)
    parts.append(buf[:written].tobytes())
    parts.append(b"\xff\xd9")
    return b"".join(parts)
