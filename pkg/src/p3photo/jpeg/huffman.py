"""Huffman table machinery for the baseline entropy coder.

Tables are handled in the stream's own (BITS, HUFFVAL) form: BITS counts
codes per length 1..16, HUFFVAL lists symbols in code order.  From that we
derive canonical codes, a flat 16-bit-peek decode LUT, and per-symbol
encode tables.  Optimal per-image tables are built from symbol frequencies
with the usual two-smallest-merge procedure, limited to 16-bit lengths.
"""
from __future__ import annotations

import numpy as np

from ..errors import CorruptStream

LUT_BITS = 16


def canonical_codes(bits: list[int], values: list[int]) -> tuple[np.ndarray, np.ndarray]:
    """Return (codes, sizes) arrays indexed like ``values``."""
    if len(bits) != 16:
        raise CorruptStream("Huffman BITS must have 16 entries")
    if sum(bits) != len(values):
        raise CorruptStream("Huffman BITS total does not match value count")
    codes = np.zeros(len(values), dtype=np.uint32)
    sizes = np.zeros(len(values), dtype=np.uint8)
    code = 0
    k = 0
    for length in range(1, 17):
        for _ in range(bits[length - 1]):
            if code >= (1 << length):
                raise CorruptStream("Huffman code overflow; table is invalid")
            codes[k] = code
            sizes[k] = length
            code += 1
            k += 1
        code <<= 1
    return codes, sizes


def decode_lut(bits: list[int], values: list[int]) -> np.ndarray:
    """Flat decoder table: index with the next 16 bits of the stream,
    entry packs (code length << 8 | symbol); 0 marks an invalid prefix."""
    codes, sizes = canonical_codes(bits, values)
    lut = np.zeros(1 << LUT_BITS, dtype=np.int16)
    for sym, code, size in zip(values, codes, sizes):
        size = int(size)
        start = int(code) << (LUT_BITS - size)
        span = 1 << (LUT_BITS - size)
        entry = (size << 8) | int(sym)
        if lut[start:start + span].any():
            raise CorruptStream("overlapping Huffman codes; table is invalid")
        lut[start:start + span] = entry
    return lut


def encode_tables(bits: list[int], values: list[int]) -> tuple[np.ndarray, np.ndarray]:
    """Per-symbol (code, size) lookup arrays of length 256."""
    codes, sizes = canonical_codes(bits, values)
    code_for = np.zeros(256, dtype=np.uint32)
    size_for = np.zeros(256, dtype=np.uint8)
    for sym, code, size in zip(values, codes, sizes):
        code_for[sym] = code
        size_for[sym] = size
    return code_for, size_for


def optimal_table(freq: np.ndarray) -> tuple[list[int], list[int]]:
    """Derive (BITS, HUFFVAL) from a 256-entry symbol frequency array.

    A reserved pseudo-symbol guarantees no real symbol is assigned the
    all-ones codeword, and code lengths are folded down to at most 16 bits.
    """
    freq = np.asarray(freq, dtype=np.int64)
    if freq.shape != (256,):
        raise ValueError("frequency array must have 256 entries")
    f = np.zeros(257, dtype=np.int64)
    f[:256] = freq
    f[256] = 1  # reserved: keeps the all-ones code unused
    codesize = np.zeros(257, dtype=np.int64)
    others = np.full(257, -1, dtype=np.int64)

    while True:
        # two least-frequent remaining symbols; ties go to the higher symbol
        c1 = -1
        v = None
        for i in range(257):
            if f[i] > 0 and (v is None or f[i] <= v):
                v = f[i]
                c1 = i
        c2 = -1
        v = None
        for i in range(257):
            if f[i] > 0 and i != c1 and (v is None or f[i] <= v):
                v = f[i]
                c2 = i
        if c2 < 0:
            break
        f[c1] += f[c2]
        f[c2] = 0
        codesize[c1] += 1
        while others[c1] >= 0:
            c1 = others[c1]
            codesize[c1] += 1
        others[c1] = c2
        codesize[c2] += 1
        while others[c2] >= 0:
            c2 = others[c2]
            codesize[c2] += 1

    counts = np.zeros(64, dtype=np.int64)
    for i in range(257):
        if codesize[i] > 0:
            counts[codesize[i]] += 1

    # fold lengths beyond 16 down, the standard pairwise adjustment
    for length in range(len(counts) - 1, 16, -1):
        while counts[length] > 0:
            j = length - 2
            while counts[j] == 0:
                j -= 1
            counts[length] -= 2
            counts[length - 1] += 1
            counts[j + 1] += 2
            counts[j] -= 1
    # drop the reserved symbol from the longest used length
    length = 16
    while length > 0 and counts[length] == 0:
        length -= 1
    if length > 0:
        counts[length] -= 1

    bits = [int(counts[i]) for i in range(1, 17)]
    order = sorted((int(codesize[s]), s) for s in range(256) if codesize[s] > 0)
    values = [s for _, s in order]
    if sum(bits) != len(values):
        raise AssertionError("optimal Huffman table construction lost symbols")
    return bits, values
