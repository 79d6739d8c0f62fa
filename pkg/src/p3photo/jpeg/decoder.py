"""Baseline JFIF stream parsing and coefficient-level decoding."""
from __future__ import annotations

import math
import struct

import numpy as np

from ..errors import CorruptStream, UnsupportedFormat
from . import entropy
from .geometry import StreamLayout, interleaved_layout, single_component_layout
from .huffman import decode_lut
from .tables import NAT_TO_ZZ
from .types import ComponentSpec, JpegInfo, QuantTable, QuantizedImage

_SOF_KINDS = {
    0xC0: "baseline",
    0xC1: "extended-sequential",
    0xC2: "progressive",
    0xC3: "lossless",
    0xC5: "differential-sequential",
    0xC6: "differential-progressive",
    0xC7: "differential-lossless",
    0xC9: "arithmetic-sequential",
    0xCA: "arithmetic-progressive",
    0xCB: "arithmetic-lossless",
    0xCD: "differential-arithmetic-sequential",
    0xCE: "differential-arithmetic-progressive",
    0xCF: "differential-arithmetic-lossless",
}


def _marker_name(m: int) -> str:
    if m in _SOF_KINDS:
        return f"SOF{m - 0xC0}"
    if 0xD0 <= m <= 0xD7:
        return f"RST{m - 0xD0}"
    if 0xE0 <= m <= 0xEF:
        return f"APP{m - 0xE0}"
    named = {0xC4: "DHT", 0xCC: "DAC", 0xD8: "SOI", 0xD9: "EOI", 0xDA: "SOS",
             0xDB: "DQT", 0xDC: "DNL", 0xDD: "DRI", 0xFE: "COM"}
    return named.get(m, f"0x{m:02X}")


class _Cursor:
    __slots__ = ("data", "pos")

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def need(self, n: int):
        if self.pos + n > len(self.data):
            raise CorruptStream("unexpected end of stream")

    def u8(self) -> int:
        self.need(1)
        v = self.data[self.pos]
        self.pos += 1
        return v

    def u16(self) -> int:
        self.need(2)
        v = struct.unpack_from(">H", self.data, self.pos)[0]
        self.pos += 2
        return v

    def take(self, n: int) -> bytes:
        self.need(n)
        v = self.data[self.pos:self.pos + n]
        self.pos += n
        return v


def _next_marker(cur: _Cursor) -> int:
    """Advance to the next marker byte, tolerating fill bytes."""
    b = cur.u8()
    if b != 0xFF:
        raise CorruptStream(f"expected a marker, found byte 0x{b:02X}")
    m = cur.u8()
    while m == 0xFF:  # fill bytes before a marker are legal
        m = cur.u8()
    return m


def _split_entropy_segments(data: bytes, start: int) -> tuple[list[bytes], int]:
    """Separate the entropy-coded data that starts at ``start`` into
    destuffed restart segments.  Returns (segments, terminator position)."""
    arr = np.frombuffer(data, dtype=np.uint8)
    if start >= len(data):
        raise CorruptStream("scan data missing")
    ff = np.flatnonzero(arr[start:len(data) - 1] == 0xFF) + start
    nxt = arr[ff + 1] if ff.size else np.empty(0, dtype=np.uint8)
    is_stuff = nxt == 0x00
    is_rst = (nxt >= 0xD0) & (nxt <= 0xD7)
    term = np.flatnonzero(~is_stuff & ~is_rst)
    if term.size == 0:
        raise CorruptStream("entropy data not terminated by a marker")
    end = int(ff[term[0]])
    rst_at = ff[is_rst & (ff < end)]
    segments = []
    seg_start = start
    for p in rst_at.tolist():
        segments.append(data[seg_start:p].replace(b"\xff\x00", b"\xff"))
        seg_start = p + 2
    segments.append(data[seg_start:end].replace(b"\xff\x00", b"\xff"))
    return segments, end


def _parse_dqt(payload: bytes, tables: dict):
    cur = _Cursor(payload)
    while cur.pos < len(payload):
        pq_tq = cur.u8()
        pq, tq = pq_tq >> 4, pq_tq & 0x0F
        if pq not in (0, 1):
            raise CorruptStream(f"bad quant table precision {pq}")
        if tq > 3:
            raise CorruptStream(f"bad quant table id {tq}")
        n = 64 * (2 if pq else 1)
        raw = cur.take(n)
        if pq:
            vals = np.frombuffer(raw, dtype=">u2").astype(np.int64)
        else:
            vals = np.frombuffer(raw, dtype=np.uint8).astype(np.int64)
        if vals.min() < 1:
            raise CorruptStream("quant table contains a zero entry")
        tables[tq] = vals
    if cur.pos != len(payload):
        raise CorruptStream("trailing bytes in DQT segment")


def _parse_dht(payload: bytes, tables: dict):
    cur = _Cursor(payload)
    while cur.pos < len(payload):
        tc_th = cur.u8()
        tc, th = tc_th >> 4, tc_th & 0x0F
        if tc not in (0, 1):
            raise UnsupportedFormat("arithmetic conditioning table in DHT slot")
        if th > 3:
            raise CorruptStream(f"bad Huffman table id {th}")
        bits = list(cur.take(16))
        values = list(cur.take(sum(bits)))
        tables[(tc, th)] = (bits, values)
    if cur.pos != len(payload):
        raise CorruptStream("trailing bytes in DHT segment")


def _parse_sof(payload: bytes) -> tuple[int, int, int, tuple[ComponentSpec, ...]]:
    cur = _Cursor(payload)
    precision = cur.u8()
    height = cur.u16()
    width = cur.u16()
    nf = cur.u8()
    if height == 0:
        raise UnsupportedFormat("DNL-deferred image height is not supported")
    if width == 0:
        raise CorruptStream("zero image width")
    comps = []
    for _ in range(nf):
        cid = cur.u8()
        hv = cur.u8()
        tq = cur.u8()
        h, v = hv >> 4, hv & 0x0F
        if not (1 <= h <= 4 and 1 <= v <= 4):
            raise CorruptStream(f"sampling factors {h}x{v} out of range")
        comps.append(ComponentSpec(cid, h, v, tq))
    if cur.pos != len(payload):
        raise CorruptStream("SOF payload length mismatch")
    return precision, width, height, tuple(comps)


def _parse_sos(payload: bytes) -> tuple[list[tuple[int, int, int]], tuple[int, int, int, int]]:
    cur = _Cursor(payload)
    ns = cur.u8()
    comps = []
    for _ in range(ns):
        cs = cur.u8()
        tdta = cur.u8()
        comps.append((cs, tdta >> 4, tdta & 0x0F))
    ss = cur.u8()
    se = cur.u8()
    ahal = cur.u8()
    if cur.pos != len(payload):
        raise CorruptStream("SOS payload length mismatch")
    return comps, (ss, se, ahal >> 4, ahal & 0x0F)


def _decode_scan(data: bytes, start: int, frame, scan_comps,
                 huff_tables, restart_interval, out_grids, decoded_flags) -> int:
    """Decode one scan's entropy data into the per-component grids.
    Returns the stream position of the terminating marker."""
    precision, width, height, components = frame
    ncomp = len(components)

    frame_ids = [c.component_id for c in components]
    scan_idx = []
    for cs, _, _ in scan_comps:
        if cs not in frame_ids:
            raise CorruptStream(f"scan references unknown component id {cs}")
        scan_idx.append(frame_ids.index(cs))

    if len(scan_comps) == ncomp:
        if scan_idx != list(range(ncomp)):
            raise UnsupportedFormat("interleaved scan must follow frame component order")
        layout = interleaved_layout(components, width, height)
    elif len(scan_comps) == 1:
        layout = single_component_layout(components, width, height, scan_idx[0])
    else:
        raise UnsupportedFormat(
            f"{len(scan_comps)}-component partial interleave is not supported")

    # LUT rows for the tables this scan binds
    rows: dict[tuple[int, int], int] = {}
    luts = []
    for cs, td, ta in scan_comps:
        for key in ((0, td), (1, ta)):
            if key not in rows:
                if key not in huff_tables:
                    raise CorruptStream(f"scan uses undefined Huffman table {key}")
                rows[key] = len(luts)
                luts.append(decode_lut(*huff_tables[key]))
    luts = np.stack(luts)

    dc_row = np.zeros(ncomp, dtype=np.uint8)
    ac_row = np.zeros(ncomp, dtype=np.uint8)
    for (cs, td, ta), ci in zip(scan_comps, scan_idx):
        dc_row[ci] = rows[(0, td)]
        ac_row[ci] = rows[(1, ta)]
    tbl_dc = dc_row[layout.comp_index]
    tbl_ac = ac_row[layout.comp_index]

    segments, end = _split_entropy_segments(data, start)
    mcus = layout.mcu_count
    if restart_interval:
        expected = math.ceil(mcus / restart_interval)
    else:
        expected = 1
    if len(segments) != expected:
        raise CorruptStream(
            f"found {len(segments)} restart segments, expected {expected}")

    seg_nblocks = []
    left = mcus
    for _ in range(len(segments)):
        take = min(restart_interval, left) if restart_interval else left
        seg_nblocks.append(take * layout.blocks_per_mcu)
        left -= take
    blob = b"".join(segments)
    seg_starts, seg_ends = [], []
    off = 0
    for seg in segments:
        seg_starts.append(off)
        off += len(seg)
        seg_ends.append(off)

    out = np.zeros((layout.n_blocks, 64), dtype=np.int32)
    err, at_block = entropy.decode_blocks(
        np.frombuffer(blob, dtype=np.uint8),
        np.asarray(seg_starts, dtype=np.int64),
        np.asarray(seg_ends, dtype=np.int64),
        np.asarray(seg_nblocks, dtype=np.int64),
        luts, tbl_dc, tbl_ac, layout.comp_index, ncomp, out)
    if err != entropy.OK:
        reasons = {entropy.ERR_BAD_CODE: "invalid Huffman code",
                   entropy.ERR_COEF_OVERRUN: "coefficient index overrun",
                   entropy.ERR_TRUNCATED: "entropy data truncated",
                   entropy.ERR_BAD_CATEGORY: "magnitude category out of range"}
        raise CorruptStream(f"{reasons.get(err, 'scan error')} at block {at_block}")

    natural = out[:, NAT_TO_ZZ]
    for ci in set(scan_idx):
        rows_p, cols_p = layout.padded_grids[ci]
        grid = np.zeros((rows_p * cols_p, 64), dtype=np.int32)
        sel = layout.comp_index == ci
        grid[layout.grid_offset[sel]] = natural[sel]
        rows_u, cols_u = layout.grids[ci]
        out_grids[ci] = grid.reshape(rows_p, cols_p, 64)[:rows_u, :cols_u]
        decoded_flags[ci] = True
    return end


def decode_jpeg(data: bytes, *, keep_app_segments: bool = False) -> QuantizedImage:
    """Decode a baseline JFIF stream to its exact quantized coefficients.

    No dequantization and no inverse transform happen here; the returned
    image is the integer content of the entropy-coded data.

    Raises UnsupportedFormat for streams outside the baseline Huffman
    subset (progressive, arithmetic, 12-bit, CMYK) and CorruptStream for
    grammar or entropy-data violations.
    """
    if len(data) < 4 or data[0] != 0xFF or data[1] != 0xD8:
        raise CorruptStream("missing SOI marker; not a JPEG stream")
    cur = _Cursor(data, 2)

    quant_raw: dict[int, np.ndarray] = {}
    huff: dict[tuple[int, int], tuple[list[int], list[int]]] = {}
    frame = None
    restart_interval = 0
    app_segments: list[tuple[int, bytes]] = []
    out_grids: list = []
    decoded: list = []
    saw_eoi = False

    while True:
        try:
            m = _next_marker(cur)
        except CorruptStream:
            raise CorruptStream("stream ended before EOI")
        name = _marker_name(m)
        if m == 0xD9:  # EOI
            saw_eoi = True
            break
        if m == 0x01 or 0xD0 <= m <= 0xD7:
            raise CorruptStream(f"{name} marker outside entropy data")
        if m in _SOF_KINDS and m != 0xC0:
            raise UnsupportedFormat(f"{_SOF_KINDS[m]} coding is not supported")
        if m == 0xCC:
            raise UnsupportedFormat("arithmetic coding is not supported")
        if m == 0xDC:
            raise UnsupportedFormat("DNL segments are not supported")

        length = cur.u16()
        if length < 2:
            raise CorruptStream(f"{name} segment length {length} too short")
        payload = cur.take(length - 2)

        if m == 0xC0:
            if frame is not None:
                raise CorruptStream("multiple SOF segments")
            frame = _parse_sof(payload)
            precision, width, height, components = frame
            if precision != 8:
                raise UnsupportedFormat(f"{precision}-bit precision is not supported")
            if len(components) not in (1, 3):
                raise UnsupportedFormat(
                    f"{len(components)} components; only 1 or 3 are supported")
            h_max = max(c.h_sampling for c in components)
            v_max = max(c.v_sampling for c in components)
            for c in components:
                if h_max % c.h_sampling or v_max % c.v_sampling:
                    raise UnsupportedFormat(
                        f"sampling {c.h_sampling}x{c.v_sampling} does not divide "
                        f"the maximum sampling factor")
            out_grids = [None] * len(components)
            decoded = [False] * len(components)
        elif m == 0xDB:
            _parse_dqt(payload, quant_raw)
        elif m == 0xC4:
            _parse_dht(payload, huff)
        elif m == 0xDD:
            if len(payload) != 2:
                raise CorruptStream("bad DRI length")
            restart_interval = struct.unpack(">H", payload)[0]
        elif 0xE0 <= m <= 0xEF:
            if keep_app_segments and m != 0xE0:
                app_segments.append((m - 0xE0, payload))
        elif m == 0xFE:
            pass  # comment
        elif m == 0xDA:
            if frame is None:
                raise CorruptStream("SOS before SOF")
            scan_comps, (ss, se, ah, al) = _parse_sos(payload)
            if (ss, se, ah, al) != (0, 63, 0, 0):
                raise CorruptStream("baseline scan must cover the full spectrum")
            cur.pos = _decode_scan(data, cur.pos, frame, scan_comps,
                                   huff, restart_interval, out_grids, decoded)
        else:
            pass  # unknown segment with a valid length: skip

    if not saw_eoi:
        raise CorruptStream("stream ended before EOI")
    if frame is None:
        raise CorruptStream("no frame header in stream")
    if not all(decoded):
        raise CorruptStream("not all components were covered by a scan")

    precision, width, height, components = frame
    for c in components:
        if c.quant_table_id not in quant_raw:
            raise CorruptStream(
                f"component {c.component_id} uses undefined quant table "
                f"{c.quant_table_id}")
    tables = tuple(QuantTable(tid, vals) for tid, vals in sorted(quant_raw.items()))
    img = QuantizedImage(
        width=width, height=height, components=components,
        quant_tables=tables, blocks=tuple(out_grids),
        restart_interval=restart_interval,
        app_segments=tuple(app_segments))
    img.validate()
    return img


def inspect_jpeg(data: bytes) -> JpegInfo:
    """Read-only structural report of a JPEG stream, parsed up to SOS.

    Works for formats decode_jpeg refuses (e.g. progressive); the ``kind``
    field tells the caller what it is looking at.
    """
    if len(data) < 4 or data[0] != 0xFF or data[1] != 0xD8:
        raise CorruptStream("missing SOI marker; not a JPEG stream")
    cur = _Cursor(data, 2)
    markers: list[tuple[str, int]] = [("SOI", 0)]
    quant_raw: dict[int, np.ndarray] = {}
    huff_seen: list[tuple[str, int]] = []
    restart_interval = 0
    kind = "unknown"
    width = height = precision = 0
    components: tuple[dict, ...] = ()

    while True:
        try:
            m = _next_marker(cur)
        except CorruptStream:
            break
        name = _marker_name(m)
        if m == 0xD9:
            markers.append(("EOI", 0))
            break
        length = cur.u16()
        if length < 2:
            raise CorruptStream(f"{name} segment length {length} too short")
        payload = cur.take(length - 2)
        markers.append((name, length))
        if m in _SOF_KINDS:
            kind = _SOF_KINDS[m]
            precision, width, height, comps = _parse_sof(payload)
            components = tuple(
                {"id": c.component_id, "h_sampling": c.h_sampling,
                 "v_sampling": c.v_sampling, "quant_table_id": c.quant_table_id}
                for c in comps)
        elif m == 0xDB:
            _parse_dqt(payload, quant_raw)
        elif m == 0xC4:
            pos = 0
            while pos < len(payload):
                tc, th = payload[pos] >> 4, payload[pos] & 0x0F
                nvals = sum(payload[pos + 1:pos + 17])
                huff_seen.append(("dc" if tc == 0 else "ac", th))
                pos += 17 + nvals
        elif m == 0xDD:
            restart_interval = struct.unpack(">H", payload)[0]
        elif m == 0xDA:
            break  # entropy data follows; inspection stops here

    return JpegInfo(
        kind=kind, width=width, height=height, precision=precision,
        components=components,
        quant_tables={tid: vals.tolist() for tid, vals in sorted(quant_raw.items())},
        huffman_tables=tuple(huff_seen),
        restart_interval=restart_interval,
        markers=tuple(markers))
