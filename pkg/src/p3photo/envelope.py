"""Authenticated container for the secret-part JPEG.

Layout (big-endian):

    magic "P3S1" (4) | version (1) | threshold (2) | id_len (4) |
    photo_id (id_len) | nonce (12) | ciphertext+tag

The whole header through the photo id is bound as associated data, so any
header tampering fails authentication even though the fields travel in the
clear.  Encryption is AES-256-GCM with a fresh random nonce per seal.
"""
from __future__ import annotations

import os
import struct

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .errors import AuthFailure, BadMagic, BadVersion, Truncated

MAGIC = b"P3S1"
VERSION = 1
KEY_BYTES = 32
NONCE_BYTES = 12
TAG_BYTES = 16
FILE_EXTENSION = ".p3s"


def check_key(key: bytes) -> bytes:
    if not isinstance(key, (bytes, bytearray)) or len(key) != KEY_BYTES:
        raise ValueError(f"key must be exactly {KEY_BYTES} bytes")
    return bytes(key)


def overhead(photo_id: str) -> int:
    """Container bytes beyond the plaintext length."""
    return len(MAGIC) + 1 + 2 + 4 + len(photo_id.encode()) + NONCE_BYTES + TAG_BYTES


def _header(photo_id: str, threshold: int) -> bytes:
    idb = photo_id.encode()
    if not 0 <= threshold <= 0xFFFF:
        raise ValueError(f"threshold {threshold} does not fit the header")
    return MAGIC + bytes([VERSION]) + struct.pack(">H", threshold) \
        + struct.pack(">I", len(idb)) + idb


def seal(secret_jpeg: bytes, key: bytes, photo_id: str, threshold: int,
         *, _nonce: bytes | None = None) -> bytes:
    """Encrypt a secret-part JPEG under the provider-assigned photo id.

    ``_nonce`` exists for golden-fixture tests only; normal callers get a
    fresh random nonce every time.
    """
    key = check_key(key)
    header = _header(photo_id, threshold)
    nonce = os.urandom(NONCE_BYTES) if _nonce is None else _nonce
    if len(nonce) != NONCE_BYTES:
        raise ValueError(f"nonce must be {NONCE_BYTES} bytes")
    ct = AESGCM(key).encrypt(nonce, bytes(secret_jpeg), header)
    return header + nonce + ct


def open_container(container: bytes, key: bytes) -> tuple[bytes, int, str]:
    """Authenticate and decrypt a container.

    Returns (secret_jpeg, threshold, photo_id).  A wrong key and a
    tampered container are indistinguishable: both raise AuthFailure.
    """
    key = check_key(key)
    if len(container) < len(MAGIC) + 1:
        raise Truncated("container shorter than its magic")
    if container[:4] != MAGIC:
        raise BadMagic("not a sealed secret container")
    if container[4] != VERSION:
        raise BadVersion(f"unsupported container version {container[4]}")
    fixed_end = 4 + 1 + 2 + 4
    if len(container) < fixed_end:
        raise Truncated("container header incomplete")
    threshold = struct.unpack_from(">H", container, 5)[0]
    id_len = struct.unpack_from(">I", container, 7)[0]
    header_end = fixed_end + id_len
    body_start = header_end + NONCE_BYTES
    if len(container) < body_start + TAG_BYTES:
        raise Truncated("container body incomplete")
    try:
        photo_id = container[fixed_end:header_end].decode()
    except UnicodeDecodeError as e:
        raise Truncated(f"photo id is not valid UTF-8: {e}") from None
    header = container[:header_end]
    nonce = container[header_end:body_start]
    ct = container[body_start:]
    try:
        plaintext = AESGCM(key).decrypt(nonce, ct, header)
    except InvalidTag:
        raise AuthFailure("authentication failed: wrong key or tampered data") \
            from None
    return plaintext, threshold, photo_id
