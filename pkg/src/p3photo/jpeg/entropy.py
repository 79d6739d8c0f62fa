"""Entropy-coded segment kernels.

The scan decoder and encoder walk every coefficient, so both are written
as flat loops over primitive arrays and JIT-compiled when numba is
available; the same functions run unmodified (slowly) in plain Python.

Blocks travel through these kernels in zig-zag coefficient order and
entropy-stream block order; layout mapping and byte-stuffing live with
the caller.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


# Kernel error codes
OK = 0
ERR_BAD_CODE = 1       # bit pattern matches no Huffman code
ERR_COEF_OVERRUN = 2   # run length pushes past coefficient 63
ERR_TRUNCATED = 3      # bitstream ended mid-block
ERR_BAD_CATEGORY = 4   # magnitude category outside the baseline range


@njit(cache=True)
def decode_blocks(data, seg_starts, seg_ends, seg_nblocks,
                  luts, tbl_dc, tbl_ac, comp_of, ncomp, out):
    """Decode all blocks of one scan.

    data: uint8[:], destuffed entropy bytes, restart markers removed.
    seg_*: int64[:], byte bounds and block counts per restart segment.
    luts: int16[:, 65536] peek tables, entry = (code length << 8) | symbol.
    tbl_dc/tbl_ac: uint8[n_blocks] LUT row per block; comp_of: uint8[n_blocks].
    out: int32[n_blocks, 64], zig-zag order, pre-zeroed.

    Returns (error_code, block_index).
    """
    preds = np.zeros(ncomp, dtype=np.int64)
    b = 0
    for s in range(seg_starts.shape[0]):
        pos = seg_starts[s]
        end = seg_ends[s]
        bitbuf = 0
        bitcnt = 0
        for i in range(ncomp):
            preds[i] = 0
        for _ in range(seg_nblocks[s]):
            trow = tbl_dc[b]
            # --- DC symbol
            while bitcnt < 16 and pos < end:
                bitbuf = (bitbuf << 8) | data[pos]
                pos += 1
                bitcnt += 8
            if bitcnt >= 16:
                peek = (bitbuf >> (bitcnt - 16)) & 0xFFFF
            else:
                peek = (bitbuf << (16 - bitcnt)) & 0xFFFF
            entry = luts[trow, peek]
            size = entry >> 8
            if size == 0:
                return ERR_BAD_CODE, b
            if size > bitcnt:
                return ERR_TRUNCATED, b
            bitcnt -= size
            bitbuf &= (1 << bitcnt) - 1
            cat = entry & 0xFF
            if cat > 11:
                return ERR_BAD_CATEGORY, b
            diff = 0
            if cat > 0:
                while bitcnt < cat and pos < end:
                    bitbuf = (bitbuf << 8) | data[pos]
                    pos += 1
                    bitcnt += 8
                if bitcnt < cat:
                    return ERR_TRUNCATED, b
                diff = (bitbuf >> (bitcnt - cat)) & ((1 << cat) - 1)
                bitcnt -= cat
                bitbuf &= (1 << bitcnt) - 1
                if diff < (1 << (cat - 1)):
                    diff -= (1 << cat) - 1
            c = comp_of[b]
            preds[c] += diff
            out[b, 0] = preds[c]
            # --- AC symbols
            trow = tbl_ac[b]
            k = 1
            while k < 64:
                while bitcnt < 16 and pos < end:
                    bitbuf = (bitbuf << 8) | data[pos]
                    pos += 1
                    bitcnt += 8
                if bitcnt >= 16:
                    peek = (bitbuf >> (bitcnt - 16)) & 0xFFFF
                else:
                    peek = (bitbuf << (16 - bitcnt)) & 0xFFFF
                entry = luts[trow, peek]
                size = entry >> 8
                if size == 0:
                    return ERR_BAD_CODE, b
                if size > bitcnt:
                    return ERR_TRUNCATED, b
                bitcnt -= size
                bitbuf &= (1 << bitcnt) - 1
                rs = entry & 0xFF
                run = rs >> 4
                cat = rs & 0x0F
                if cat == 0:
                    if rs == 0x00:      # end of block
                        break
                    if rs == 0xF0:      # sixteen zeros
                        k += 16
                        continue
                    return ERR_BAD_CODE, b
                if cat > 10:
                    return ERR_BAD_CATEGORY, b
                k += run
                if k > 63:
                    return ERR_COEF_OVERRUN, b
                while bitcnt < cat and pos < end:
                    bitbuf = (bitbuf << 8) | data[pos]
                    pos += 1
                    bitcnt += 8
                if bitcnt < cat:
                    return ERR_TRUNCATED, b
                val = (bitbuf >> (bitcnt - cat)) & ((1 << cat) - 1)
                bitcnt -= cat
                bitbuf &= (1 << bitcnt) - 1
                if val < (1 << (cat - 1)):
                    val -= (1 << cat) - 1
                out[b, k] = val
                k += 1
            b += 1
    return OK, b


@njit(cache=True)
def symbol_frequencies(blocks, tbl_dc, tbl_ac, comp_of, ncomp, seg_bounds,
                       dc_freq, ac_freq):
    """Count DC/AC symbols of a scan into per-table frequency arrays.

    blocks: int32[n, 64] zig-zag order; seg_bounds: int64[nseg+1] block
    indices of restart segment boundaries; *_freq: int64[ntab, 256].
    """
    preds = np.zeros(ncomp, dtype=np.int64)
    for s in range(seg_bounds.shape[0] - 1):
        for i in range(ncomp):
            preds[i] = 0
        for b in range(seg_bounds[s], seg_bounds[s + 1]):
            c = comp_of[b]
            diff = blocks[b, 0] - preds[c]
            preds[c] = blocks[b, 0]
            a = -diff if diff < 0 else diff
            cat = 0
            while a:
                a >>= 1
                cat += 1
            dc_freq[tbl_dc[b], cat] += 1
            row = tbl_ac[b]
            run = 0
            for k in range(1, 64):
                v = blocks[b, k]
                if v == 0:
                    run += 1
                    continue
                while run > 15:
                    ac_freq[row, 0xF0] += 1
                    run -= 16
                a = -v if v < 0 else v
                cat = 0
                while a:
                    a >>= 1
                    cat += 1
                ac_freq[row, (run << 4) | cat] += 1
                run = 0
            if run > 0:
                ac_freq[row, 0x00] += 1
    return 0


@njit(cache=True)
def emit_scan(blocks, tbl_dc, tbl_ac, comp_of, ncomp, seg_bounds,
              dc_code, dc_size, ac_code, ac_size, out):
    """Entropy-encode a scan, with byte stuffing and restart markers.

    blocks: int32[n, 64] zig-zag; seg_bounds: int64[nseg+1] block indices;
    *_code: uint32[ntab, 256]; *_size: uint8[ntab, 256]; out: uint8[:].

    Returns bytes written, or -1 if the output buffer is too small.
    """
    w = 0
    acc = 0
    nbits = 0
    preds = np.zeros(ncomp, dtype=np.int64)
    nseg = seg_bounds.shape[0] - 1
    for s in range(nseg):
        for i in range(ncomp):
            preds[i] = 0
        if s > 0:
            # byte-align with 1-bits, then a cycling restart marker
            if nbits > 0:
                pad = 8 - nbits
                acc = (acc << pad) | ((1 << pad) - 1)
                byte = acc & 0xFF
                out[w] = byte
                w += 1
                if byte == 0xFF:
                    out[w] = 0
                    w += 1
                acc = 0
                nbits = 0
            out[w] = 0xFF
            out[w + 1] = 0xD0 + ((s - 1) & 7)
            w += 2
        for b in range(seg_bounds[s], seg_bounds[s + 1]):
            if w + 450 > out.shape[0]:
                return -1
            c = comp_of[b]
            diff = blocks[b, 0] - preds[c]
            preds[c] = blocks[b, 0]
            a = -diff if diff < 0 else diff
            cat = 0
            while a:
                a >>= 1
                cat += 1
            row = tbl_dc[b]
            acc = (acc << dc_size[row, cat]) | dc_code[row, cat]
            nbits += dc_size[row, cat]
            if cat > 0:
                v = diff if diff >= 0 else diff + (1 << cat) - 1
                acc = (acc << cat) | v
                nbits += cat
            while nbits >= 8:
                byte = (acc >> (nbits - 8)) & 0xFF
                out[w] = byte
                w += 1
                if byte == 0xFF:
                    out[w] = 0
                    w += 1
                nbits -= 8
            acc &= (1 << nbits) - 1
            row = tbl_ac[b]
            run = 0
            for k in range(1, 64):
                v = blocks[b, k]
                if v == 0:
                    run += 1
                    continue
                while run > 15:
                    acc = (acc << ac_size[row, 0xF0]) | ac_code[row, 0xF0]
                    nbits += ac_size[row, 0xF0]
                    while nbits >= 8:
                        byte = (acc >> (nbits - 8)) & 0xFF
                        out[w] = byte
                        w += 1
                        if byte == 0xFF:
                            out[w] = 0
                            w += 1
                        nbits -= 8
                    acc &= (1 << nbits) - 1
                    run -= 16
                a = -v if v < 0 else v
                cat = 0
                while a:
                    a >>= 1
                    cat += 1
                rs = (run << 4) | cat
                acc = (acc << ac_size[row, rs]) | ac_code[row, rs]
                nbits += ac_size[row, rs]
                bits = v if v >= 0 else v + (1 << cat) - 1
                acc = (acc << cat) | bits
                nbits += cat
                while nbits >= 8:
                    byte = (acc >> (nbits - 8)) & 0xFF
                    out[w] = byte
                    w += 1
                    if byte == 0xFF:
                        out[w] = 0
                        w += 1
                    nbits -= 8
                acc &= (1 << nbits) - 1
                run = 0
            if run > 0:
                acc = (acc << ac_size[row, 0x00]) | ac_code[row, 0x00]
                nbits += ac_size[row, 0x00]
                while nbits >= 8:
                    byte = (acc >> (nbits - 8)) & 0xFF
                    out[w] = byte
                    w += 1
                    if byte == 0xFF:
                        out[w] = 0
                        w += 1
                    nbits -= 8
                acc &= (1 << nbits) - 1
    if nbits > 0:
        pad = 8 - nbits
        acc = (acc << pad) | ((1 << pad) - 1)
        byte = acc & 0xFF
        out[w] = byte
        w += 1
        if byte == 0xFF:
            out[w] = 0
            w += 1
    return w
