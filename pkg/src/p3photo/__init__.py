"""Selective-encryption photo codec.

Split a baseline JPEG into a low-information public part a provider can
store and transform, and a small encrypted secret part; reconstruct
exactly when the public part is untouched, and accurately when the
provider resized or cropped it.
"""

from .core import (SplitPair, correction_term, merge_block, merge_image,
                   reconstruct_transformed, split_block, split_image)
from .envelope import open_container, seal
from .jpeg import (ComponentSpec, JpegInfo, QuantTable, QuantizedImage,
                   decode_jpeg, encode_jpeg, inspect_jpeg)
from .pixels import (Crop, Identity, PixelImage, Resize, TransformSpec,
                     apply_transform, calibrate_transform, decode_to_pixels,
                     encode_pixels, fdct_block, idct_block, parse_spec,
                     format_spec, rgb_to_ycbcr, upsample_chroma, ycbcr_to_rgb)

__version__ = "0.1.0"

__all__ = [
    "ComponentSpec", "Crop", "Identity", "JpegInfo", "PixelImage",
    "QuantTable", "QuantizedImage", "Resize", "SplitPair", "TransformSpec",
    "apply_transform", "calibrate_transform", "correction_term",
    "decode_jpeg", "decode_to_pixels", "encode_jpeg", "encode_pixels",
    "fdct_block", "format_spec", "idct_block", "inspect_jpeg", "merge_block",
    "merge_image", "open_container", "parse_spec", "reconstruct_transformed",
    "rgb_to_ycbcr", "seal", "split_block", "split_image", "upsample_chroma",
    "ycbcr_to_rgb",
]
