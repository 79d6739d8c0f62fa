"""Shared test utilities and independent oracles.

The oracles here deliberately re-derive results along different routes
than the library: literal textbook formulas, matrix forms, brute-force
enumeration.  They must stay independent of the code paths they check.
"""
from __future__ import annotations

import math

import numpy as np

from p3photo.jpeg import ComponentSpec, QuantTable, QuantizedImage
from p3photo.jpeg.tables import (STD_QUANT_CHROMA, STD_QUANT_LUMA,
                                 natural_to_zigzag, scaled_quant_table)


def naive_idct(coeffs64) -> np.ndarray:
    """Textbook inverse DCT: direct double sum over the cosine basis."""
    c = np.asarray(coeffs64, dtype=np.float64).reshape(8, 8)
    out = np.zeros((8, 8))
    for x in range(8):
        for y in range(8):
            s = 0.0
            for u in range(8):
                for v in range(8):
                    cu = math.sqrt(0.5) if u == 0 else 1.0
                    cv = math.sqrt(0.5) if v == 0 else 1.0
                    s += (cu * cv * c[u, v]
                          * math.cos((2 * x + 1) * u * math.pi / 16)
                          * math.cos((2 * y + 1) * v * math.pi / 16))
            out[x, y] = s / 4.0
    return out


def naive_fdct(samples64) -> np.ndarray:
    """Textbook forward DCT: direct double sum."""
    s = np.asarray(samples64, dtype=np.float64).reshape(8, 8)
    out = np.zeros((8, 8))
    for u in range(8):
        for v in range(8):
            cu = math.sqrt(0.5) if u == 0 else 1.0
            cv = math.sqrt(0.5) if v == 0 else 1.0
            total = 0.0
            for x in range(8):
                for y in range(8):
                    total += (s[x, y]
                              * math.cos((2 * x + 1) * u * math.pi / 16)
                              * math.cos((2 * y + 1) * v * math.pi / 16))
            out[u, v] = cu * cv * total / 4.0
    return out


def matrix_merge(public_block, secret_block, threshold) -> np.ndarray:
    """Sign-matrix reconstruction, evaluated literally.

    The recombination expressed through diagonal sign matrices: with
    a_p/a_s the absolute values and S_p/S_s the signs of the two parts,
    and w marking above-threshold positions with the threshold value,
    the original block is S_p a_p + S_s a_s + (S_s - S_s^2) w.
    """
    xp = np.asarray(public_block, dtype=np.int64)
    xs = np.asarray(secret_block, dtype=np.int64)
    sp = np.sign(xp)
    ss = np.sign(xs)
    ap = np.abs(xp)
    as_ = np.abs(xs)
    w = np.where(ss != 0, threshold, 0)
    return sp * ap + ss * as_ + (ss - ss ** 2) * w


def random_quantized_image(rng, *, width=None, height=None, layout="420",
                           max_ac=1023, restart_interval=0) -> QuantizedImage:
    """A structurally valid QuantizedImage with random coefficients."""
    width = width if width is not None else int(rng.integers(8, 120))
    height = height if height is not None else int(rng.integers(8, 120))
    luma_q = QuantTable(0, natural_to_zigzag(scaled_quant_table(STD_QUANT_LUMA, 85)))
    chroma_q = QuantTable(1, natural_to_zigzag(scaled_quant_table(STD_QUANT_CHROMA, 85)))
    if layout == "gray":
        comps = (ComponentSpec(1, 1, 1, 0),)
        tables = (luma_q,)
    elif layout == "444":
        comps = (ComponentSpec(1, 1, 1, 0), ComponentSpec(2, 1, 1, 1),
                 ComponentSpec(3, 1, 1, 1))
        tables = (luma_q, chroma_q)
    elif layout == "422":
        comps = (ComponentSpec(1, 2, 1, 0), ComponentSpec(2, 1, 1, 1),
                 ComponentSpec(3, 1, 1, 1))
        tables = (luma_q, chroma_q)
    else:
        comps = (ComponentSpec(1, 2, 2, 0), ComponentSpec(2, 1, 1, 1),
                 ComponentSpec(3, 1, 1, 1))
        tables = (luma_q, chroma_q)
    img = QuantizedImage(width=width, height=height, components=comps,
                         quant_tables=tables, blocks=[np.zeros((1, 1, 64))] * len(comps),
                         restart_interval=restart_interval)
    blocks = []
    for i in range(len(comps)):
        rows, cols = img.block_grid(i)
        grid = rng.integers(-max_ac, max_ac + 1, size=(rows, cols, 64))
        blocks.append(grid.astype(np.int32))
    return img.replace_blocks(blocks)


def sparse_quantized_image(rng, **kwargs) -> QuantizedImage:
    """Random image with photo-like sparse coefficients."""
    img = random_quantized_image(rng, max_ac=1, **kwargs)
    blocks = []
    for grid in img.blocks:
        g = np.zeros_like(grid)
        mask = rng.random(grid.shape) < 0.15
        g[mask] = rng.integers(-300, 301, size=int(mask.sum()))
        g[..., 0] = rng.integers(-800, 801, size=grid.shape[:2])
        blocks.append(g)
    return img.replace_blocks(blocks)
