"""Lossless transcoding between baseline JFIF streams and quantized
DCT coefficients."""

from .decoder import decode_jpeg, inspect_jpeg
from .encoder import encode_jpeg
from .types import ComponentSpec, JpegInfo, QuantTable, QuantizedImage

__all__ = [
    "ComponentSpec",
    "JpegInfo",
    "QuantTable",
    "QuantizedImage",
    "decode_jpeg",
    "encode_jpeg",
    "inspect_jpeg",
]
