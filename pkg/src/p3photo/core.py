"""Threshold splitting and the two reconstruction paths.

A quantized image is divided into a public part that a provider may store
and transform, and a secret part holding the information that matters:
every DC coefficient, plus the magnitude-above-threshold remainder and the
sign of every large AC coefficient.

Merging is exact in the coefficient domain.  When the provider has applied
a linear operator to the public part (crop, resize), the same operator is
applied to the pixel-domain residuals of the secret part and of the sign
correction term, and the three images are summed per plane.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InconsistentPair, InvalidImage
from .jpeg.types import QuantizedImage
from .pixels import PixelImage, TransformSpec, apply_transform, decode_to_pixels

THRESHOLD_MIN = 1
THRESHOLD_MAX = 100


def check_threshold(t: int) -> int:
    if not isinstance(t, (int, np.integer)) or isinstance(t, bool):
        raise InvalidImage(f"threshold must be an integer, got {t!r}")
    if not THRESHOLD_MIN <= t <= THRESHOLD_MAX:
        raise InvalidImage(
            f"threshold {t} outside [{THRESHOLD_MIN}, {THRESHOLD_MAX}]")
    return int(t)


@dataclass
class SplitPair:
    """Public and secret halves of one source image, plus the threshold
    that produced them.  Both halves share the source's geometry, sampling
    and quantization tables."""

    public: QuantizedImage
    secret: QuantizedImage
    threshold: int

    def validate(self) -> None:
        check_threshold(self.threshold)
        if not self.public.same_geometry(self.secret):
            raise DimensionMismatch("public and secret parts disagree on geometry")
        t = self.threshold
        for pub, sec in zip(self.public.blocks, self.secret.blocks):
            if np.any(pub[..., 0] != 0):
                raise InconsistentPair("public part carries a nonzero DC")
            pub_ac = pub[..., 1:]
            sec_ac = sec[..., 1:]
            if np.any(np.abs(pub_ac) > t):
                raise InconsistentPair("public AC above the threshold")
            if np.any((sec_ac != 0) & (pub_ac != t)):
                raise InconsistentPair(
                    "secret AC present where public AC is not the threshold")


def _split_ac(ac: np.ndarray, t: int) -> tuple[np.ndarray, np.ndarray]:
    mag = np.abs(ac)
    above = mag > t
    pub = np.where(above, t, ac)
    sec = np.where(above, np.sign(ac) * (mag - t), 0)
    return pub.astype(np.int32), sec.astype(np.int32)


def split_block(block, threshold: int) -> tuple[np.ndarray, np.ndarray]:
    """Split one 64-coefficient block (natural order, index 0 = DC).

    The DC moves to the secret part; each AC either stays public (at or
    below the threshold) or is clipped to the threshold with its signed
    remainder stored secretly.
    """
    t = check_threshold(threshold)
    b = np.asarray(block, dtype=np.int64).reshape(64)
    pub = np.empty(64, dtype=np.int32)
    sec = np.empty(64, dtype=np.int32)
    pub[0] = 0
    sec[0] = b[0]
    pub[1:], sec[1:] = _split_ac(b[1:], t)
    return pub, sec


def merge_block(public_block, secret_block, threshold: int) -> np.ndarray:
    """Invert split_block exactly.

    A nonzero secret AC marks an above-threshold position: a positive one
    adds to the public threshold value directly, a negative one also needs
    the -2T sign correction because the public part stored the magnitude
    with a positive sign.
    """
    t = check_threshold(threshold)
    pub = np.asarray(public_block, dtype=np.int64).reshape(64)
    sec = np.asarray(secret_block, dtype=np.int64).reshape(64)
    if np.any((sec[1:] != 0) & (pub[1:] != t)):
        raise InconsistentPair(
            "secret AC present where public AC is not the threshold")
    out = np.empty(64, dtype=np.int32)
    out[0] = sec[0]
    ac = pub[1:] + sec[1:] + np.where(sec[1:] < 0, -2 * t, 0)
    out[1:] = ac
    return out


def split_image(img: QuantizedImage, threshold: int) -> SplitPair:
    """Apply the block split to every component of an image."""
    t = check_threshold(threshold)
    img.validate()
    pub_blocks = []
    sec_blocks = []
    for grid in img.blocks:
        pub = np.empty_like(grid)
        sec = np.empty_like(grid)
        pub[..., 0] = 0
        sec[..., 0] = grid[..., 0]
        pub[..., 1:], sec[..., 1:] = _split_ac(grid[..., 1:], t)
        pub_blocks.append(pub)
        sec_blocks.append(sec)
    return SplitPair(public=img.replace_blocks(pub_blocks),
                     secret=img.replace_blocks(sec_blocks),
                     threshold=t)


def merge_image(pair: SplitPair) -> QuantizedImage:
    """Recombine a pair into the exact source coefficients."""
    t = check_threshold(pair.threshold)
    if not pair.public.same_geometry(pair.secret):
        raise DimensionMismatch("public and secret parts disagree on geometry")
    merged = []
    for pub, sec in zip(pair.public.blocks, pair.secret.blocks):
        sec_ac = sec[..., 1:]
        pub_ac = pub[..., 1:]
        if np.any((sec_ac != 0) & (pub_ac != t)):
            raise InconsistentPair(
                "secret AC present where public AC is not the threshold; "
                "tampered pair or wrong threshold")
        out = np.empty_like(pub)
        out[..., 0] = sec[..., 0]
        out[..., 1:] = pub_ac + sec_ac + np.where(sec_ac < 0, -2 * t, 0)
        merged.append(out)
    return pair.public.replace_blocks(merged)


def correction_term(secret: QuantizedImage, threshold: int) -> QuantizedImage:
    """The sign-correction image: -2T wherever the secret AC is negative.

    Depends only on the secret part and the threshold, so it can be
    rebuilt by a recipient without touching the public part.  Returned as
    a coefficient image sharing the secret's tables, ready for a residual
    decode.
    """
    t = check_threshold(threshold)
    grids = []
    for sec in secret.blocks:
        corr = np.zeros_like(sec)
        corr[..., 1:] = np.where(sec[..., 1:] < 0, -2 * t, 0)
        grids.append(corr)
    return secret.replace_blocks(grids)


def reconstruct_transformed(public_pixels: PixelImage, secret: QuantizedImage,
                            threshold: int, transform: TransformSpec) -> PixelImage:
    """Rebuild the transformed original from a provider-transformed public
    image.

    The provider applied a linear operator to the public part only; the
    same operator applied to the pixel-domain residuals of the secret part
    and the sign correction commutes with the merge, so summing the three
    per plane yields the operator applied to the original.  The level
    shift rides in the conventionally decoded public part and is counted
    exactly once.
    """
    t = check_threshold(threshold)
    sec_res = decode_to_pixels(secret, mode="residual")
    corr_res = decode_to_pixels(correction_term(secret, t), mode="residual")
    residual = PixelImage(
        [a + b for a, b in zip(sec_res.planes, corr_res.planes)],
        mode="residual", colorspace=sec_res.colorspace,
        samplings=sec_res.samplings)
    moved = apply_transform(residual, transform)
    if len(moved.planes) != len(public_pixels.planes):
        raise DimensionMismatch(
            f"{len(public_pixels.planes)} public planes vs "
            f"{len(moved.planes)} secret planes")
    out = []
    for pub, res in zip(public_pixels.planes, moved.planes):
        if pub.shape != res.shape:
            raise DimensionMismatch(
                f"transform produces plane {res.shape}, provider output is "
                f"{pub.shape}")
        out.append(np.clip(np.rint(pub + res), 0, 255))
    return PixelImage(out, mode="conventional", colorspace="ycbcr",
                      samplings=public_pixels.samplings)
