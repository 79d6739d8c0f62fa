"""Deterministic synthetic photo corpus.

Evaluation runs and demos need photographs without shipping binary
datasets.  These generators compose flat-lit color fields, hard-edged
shapes, high-contrast granular patches and periodic weave textures into
images whose quantized-DCT statistics behave like busy, high-quality
camera uploads: sparse spectra, heavy-tailed coefficient histograms
(plenty of mass above typical split thresholds), meaningful edge maps.
Everything is seeded, so any corpus regenerates byte-identically.

The weave layers are 8-pixel periodic, which keeps their spectra free of
block-windowing leakage; their amplitudes are chosen against the encoder's
own quantization tables so the texture lands in controlled quantized
magnitude bands.

Scripts for fetching real photo datasets live in scripts/ at the
repository root; any directory of baseline JPEGs works as a corpus.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import ndimage

from .jpeg import encode_jpeg
from .jpeg.tables import STD_QUANT_LUMA, scaled_quant_table
from .pixels import (PixelImage, downsample_chroma, encode_pixels, idct_block,
                     rgb_to_ycbcr)

DEFAULT_QUALITY = 97

_PALETTES = [
    (98, 151, 206), (214, 204, 170), (96, 112, 75), (52, 86, 120),
    (190, 120, 90), (40, 40, 70), (170, 165, 150), (220, 210, 150),
]

# mid-frequency coefficient slots used by the weave tiles
_WEAVE_SLOTS = [
    (0, 2), (2, 0), (1, 2), (2, 1), (2, 2), (0, 3), (3, 0), (1, 3), (3, 1),
    (2, 3), (3, 2), (3, 3), (0, 4), (4, 0), (1, 4), (4, 1), (2, 4), (4, 2),
]


def _tile_from_slots(rng, quant8, slot_ids, q_lo, q_hi) -> np.ndarray:
    """An 8x8 pixel tile whose DCT sits in the given slots with quantized
    magnitudes in [q_lo, q_hi] under the given quantization table."""
    coeffs = np.zeros((8, 8))
    for p in slot_ids:
        u, v = _WEAVE_SLOTS[p]
        coeffs[u, v] = rng.choice([-1, 1]) * rng.uniform(q_lo, q_hi) * quant8[u, v]
    return idct_block(coeffs.reshape(64))


def synthetic_rgb(seed: int, width: int = 512, height: int = 512, *,
                  texture: float = 1.0,
                  quality: int = DEFAULT_QUALITY) -> np.ndarray:
    """One synthetic photograph as an (H, W, 3) uint8 array.

    ``texture`` scales the granular-patch coverage; ``quality`` should be
    the quality the image will be encoded at, so the weave amplitudes land
    in the intended quantized bands.
    """
    rng = np.random.default_rng(seed)
    quant8 = scaled_quant_table(STD_QUANT_LUMA, quality).reshape(8, 8)
    y, x = np.mgrid[0:height, 0:width].astype(float)
    xn, yn = x / width, y / height
    img = np.zeros((height, width, 3))

    def palette_color():
        c = np.array(_PALETTES[rng.integers(len(_PALETTES))], dtype=float)
        return np.clip(c * rng.uniform(0.6, 1.25), 70, 185)

    # flat-lit regions split by straight boundaries, plus hard-edged shapes
    img[:] = palette_color()
    for _ in range(rng.integers(2, 4)):
        pos, slope = rng.uniform(0.15, 0.85), rng.uniform(-0.3, 0.3)
        img[(yn - pos - slope * (xn - 0.5)) > 0] = palette_color()
    for _ in range(rng.integers(2, 5)):
        cx, cy = rng.uniform(0.1, 0.9, 2)
        rx, ry = rng.uniform(0.05, 0.28, 2)
        ang = rng.uniform(0, np.pi)
        dx, dy = xn - cx, yn - cy
        ca, sa = np.cos(ang), np.sin(ang)
        m = ((dx * ca + dy * sa) / rx) ** 2 + ((-dx * sa + dy * ca) / ry) ** 2 < 1
        img[m] = palette_color()

    # full-frame periodic weave: a strong carrier pair plus mid-band fill,
    # slowly modulated in strength; luminance only
    picks = rng.choice(len(_WEAVE_SLOTS), size=10, replace=False)
    tile = (_tile_from_slots(rng, quant8, picks[:2], 26, 38)
            + _tile_from_slots(rng, quant8, picks[2:], 5, 16))
    weave = np.tile(tile, (height // 8 + 1, width // 8 + 1))[:height, :width]
    env = ndimage.gaussian_filter(rng.normal(0, 1, (height, width)), 60)
    env = 1.0 + 0.25 * env / (np.abs(env).max() + 1e-9)
    img += (weave * env)[..., None]

    # granular high-contrast patches (gravel, foliage) and a checked strip
    contrast = 128.0
    n = ndimage.gaussian_filter(rng.normal(0, 1, (height, width)),
                                rng.uniform(1.5, 3.0))
    grains = np.where(n > 0, 1.0, -1.0) * contrast / 2
    region = ndimage.gaussian_filter(rng.normal(0, 1, (height, width)), 40)
    cover = rng.uniform(0.86, 0.93)
    tmask = region > np.quantile(region, 1 - texture * (1 - cover))
    img += (grains * tmask)[..., None]
    f = rng.uniform(0.15, 0.4)
    checks = np.sign(np.sin(2 * np.pi * f * x) * np.sin(2 * np.pi * f * y))
    smask = ~tmask & (ndimage.gaussian_filter(rng.normal(0, 1, (height, width)), 30)
                      > rng.uniform(0.62, 0.82))
    img += (checks * smask * contrast / 2)[..., None]

    return np.clip(img, 0, 255).astype(np.uint8)


SAMPLINGS = {
    "420": ((2, 2), (1, 1), (1, 1)),
    "422": ((2, 1), (1, 1), (1, 1)),
    "444": ((1, 1), (1, 1), (1, 1)),
}


def encode_rgb_jpeg(rgb: np.ndarray, *, quality: int = DEFAULT_QUALITY,
                    sampling: str = "420") -> bytes:
    """Encode an (H, W, 3) RGB array (or (H, W) gray) as a baseline JPEG."""
    if sampling == "gray" or rgb.ndim == 2:
        if rgb.ndim == 3:
            gray = (0.299 * rgb[..., 0] + 0.587 * rgb[..., 1]
                    + 0.114 * rgb[..., 2])
        else:
            gray = rgb
        pix = PixelImage([np.clip(np.rint(gray), 0, 255)], colorspace="ycbcr")
    else:
        full = PixelImage([rgb[..., i].astype(np.float64) for i in range(3)],
                          colorspace="rgb")
        pix = downsample_chroma(rgb_to_ycbcr(full), SAMPLINGS[sampling])
    return encode_jpeg(encode_pixels(pix, quality=quality))


def write_corpus(dest, count: int = 12, seed: int = 7, *, size: int = 512,
                 quality: int = DEFAULT_QUALITY) -> list[Path]:
    """Write a mixed-format corpus of ``count`` synthetic photographs.

    Most images are 4:2:0 color; a few are 4:4:4 and grayscale so that
    conformance checks also cover unsubsampled planes.
    """
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    formats = ["420"] * count
    if count >= 5:
        formats[3] = "444"
        formats[4] = "gray"
    if count >= 10:
        formats[8] = "444"
        formats[9] = "gray"
    paths = []
    for i in range(count):
        w = size + 16 * (i % 3)
        h = size + 8 * (i % 5)
        rgb = synthetic_rgb(seed * 1000 + i, w, h, quality=quality)
        data = encode_rgb_jpeg(rgb, quality=quality, sampling=formats[i])
        path = dest / f"synth_{i:02d}_{formats[i]}.jpg"
        path.write_bytes(data)
        paths.append(path)
    return paths


def write_large_corpus(dest, count: int = 3, seed: int = 99, *,
                       min_bytes: int = 1_000_000,
                       quality: int = DEFAULT_QUALITY) -> list[Path]:
    """Write large photographs of at least ``min_bytes`` each, for the
    bandwidth-cost measurements."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        texture = 1.2
        size = (2304, 1728)
        data = b""
        for attempt in range(4):
            rgb = synthetic_rgb(seed * 1000 + i * 29 + attempt,
                                size[0], size[1], texture=texture,
                                quality=quality)
            data = encode_rgb_jpeg(rgb, quality=quality, sampling="420")
            if len(data) >= min_bytes:
                break
            texture = min(1.6, texture * 1.3)
        path = dest / f"synth_large_{i:02d}.jpg"
        path.write_bytes(data)
        paths.append(path)
    return paths
