"""Mock photo-sharing provider.

A content-addressed in-memory photo store with eagerly generated static
variants, dynamic crop/resize on demand, and a separate opaque blob store
for sealed secrets, exposed over plain HTTP/1.1:

    PUT /photos                      -> {"photo_id": ...}
    GET /photos/{id}                 -> original public bytes
    GET /photos/{id}?variant=small   -> stored static variant
    GET /photos/{id}?w=&h=&crop=x,y,w,h -> computed on demand
    PUT /secrets/{id}, GET /secrets/{id} -> opaque blob round trip

The provider never inspects secret blobs and refuses sealed containers on
the photo endpoint.
"""
from __future__ import annotations

import hashlib
import json
import math
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import numpy as np

from . import envelope
from .errors import CodecError, GeometryError
from .jpeg import decode_jpeg, encode_jpeg
from .pixels import (Crop, PixelImage, Resize, TransformSpec, apply_transform,
                     decode_to_pixels, encode_pixels, plane_target, snap_crop,
                     _fdct_plane, _idct_grid)

VARIANT_QUALITY = 85
MAX_UPLOAD_BYTES = 32 * 1024 * 1024


@dataclass(frozen=True)
class VariantSpec:
    """A named static variant: aspect-preserving fit into a bounding box,
    never upscaled."""
    name: str
    max_w: int
    max_h: int


DEFAULT_VARIANTS = (
    VariantSpec("thumb", 75, 75),
    VariantSpec("small", 130, 130),
    VariantSpec("big", 720, 720),
)


def fit_box(width: int, height: int, max_w: int, max_h: int) -> tuple[int, int]:
    """Aspect-preserving fit of (width, height) inside a box, no upscale."""
    scale = min(1.0, max_w / width, max_h / height)
    return max(1, round(width * scale)), max(1, round(height * scale))


def make_variant(jpeg_bytes: bytes, max_w: int, max_h: int,
                 *, quality: int = VARIANT_QUALITY) -> bytes:
    """The provider's resize pipeline: decode, bilinear fit into the box,
    re-encode.  Serves the stored bytes unchanged when no downscale is
    needed."""
    img = decode_jpeg(jpeg_bytes)
    w, h = fit_box(img.width, img.height, max_w, max_h)
    if (w, h) == (img.width, img.height):
        return jpeg_bytes
    pix = decode_to_pixels(img)
    out = apply_transform(pix, TransformSpec((Resize(w, h, "bilinear"),)))
    return encode_jpeg(encode_pixels(out, quality=quality,
                                     restart_interval=img.restart_interval))


def transcode_crop(jpeg_bytes: bytes, crop: Crop) -> bytes:
    """Block-aligned crop at the coefficient level.

    Planes whose scaled offsets land on block boundaries are cropped
    losslessly by taking a sub-grid of blocks; misaligned (subsampled)
    planes are rebuilt through an unrounded inverse/forward transform pair
    with the original quantization tables, which is near-lossless.
    """
    img = decode_jpeg(jpeg_bytes)
    c = snap_crop(crop, img.width, img.height)
    h_max, v_max = img.max_sampling
    grids = []
    for i, comp in enumerate(img.components):
        x0 = c.x * comp.h_sampling // h_max
        y0 = c.y * comp.v_sampling // v_max
        w = plane_target(c.w, comp.h_sampling, h_max)
        h = plane_target(c.h, comp.v_sampling, v_max)
        rows = math.ceil(h / 8)
        cols = math.ceil(w / 8)
        grid = img.blocks[i]
        if x0 % 8 == 0 and y0 % 8 == 0:
            sub = grid[y0 // 8:y0 // 8 + rows, x0 // 8:x0 // 8 + cols]
            if sub.shape[:2] != (rows, cols):
                raise GeometryError(f"crop {c} exceeds component {i} grid")
            grids.append(sub.copy())
        else:
            q = img.quant_table_for(i).natural().astype(np.float64)
            plane = _idct_grid(grid.astype(np.float64) * q)
            piece = plane[y0:y0 + h, x0:x0 + w]
            pad_h = (-h) % 8
            pad_w = (-w) % 8
            piece = np.pad(piece, ((0, pad_h), (0, pad_w)), mode="edge")
            coeffs = _fdct_plane(piece) / q
            requant = np.trunc(coeffs + np.copysign(0.5, coeffs)).astype(np.int32)
            np.clip(requant[..., 1:], -1023, 1023, out=requant[..., 1:])
            np.clip(requant[..., 0], -2047, 2047, out=requant[..., 0])
            grids.append(requant)
    out = img.replace_blocks(grids)
    out.width = c.w
    out.height = c.h
    out.validate()
    return encode_jpeg(out)


def dynamic_transform(jpeg_bytes: bytes, *, crop: Crop | None = None,
                      width: int | None = None, height: int | None = None,
                      quality: int = VARIANT_QUALITY) -> bytes:
    """Handle a dynamic request: optional block-snapped crop, optional
    resize.  Crop-only requests stay in the coefficient domain; anything
    with a resize goes through the pixel pipeline."""
    if crop is None and width is None and height is None:
        return jpeg_bytes
    if width is None and height is None:
        return transcode_crop(jpeg_bytes, crop)
    img = decode_jpeg(jpeg_bytes)
    steps = []
    src_w, src_h = img.width, img.height
    if crop is not None:
        c = snap_crop(crop, src_w, src_h)
        steps.append(c)
        src_w, src_h = c.w, c.h
    if width is None:
        width = max(1, round(src_w * height / src_h))
    if height is None:
        height = max(1, round(src_h * width / src_w))
    steps.append(Resize(width, height, "bilinear"))
    pix = decode_to_pixels(img)
    out = apply_transform(pix, TransformSpec(tuple(steps)))
    return encode_jpeg(encode_pixels(out, quality=quality,
                                     restart_interval=img.restart_interval))


@dataclass
class PhotoRecord:
    photo_id: str
    original_public: bytes
    variants: dict = field(default_factory=dict)


class RequestRejected(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


class PhotoStore:
    """Linearizable-per-key in-memory store backing the HTTP service."""

    def __init__(self, variants: tuple[VariantSpec, ...] = DEFAULT_VARIANTS):
        self.variant_specs = variants
        self._photos: dict[str, PhotoRecord] = {}
        self._secrets: dict[str, bytes] = {}
        self._lock = threading.Lock()

    # -- photos ---------------------------------------------------------------

    def put_photo(self, data: bytes) -> str:
        if len(data) > MAX_UPLOAD_BYTES:
            raise RequestRejected(413, "upload exceeds the size limit")
        if data[:4] == envelope.MAGIC:
            raise RequestRejected(400, "sealed containers belong on /secrets")
        try:
            decode_jpeg(data)
        except CodecError as e:
            raise RequestRejected(400, f"body is not a decodable baseline JPEG: {e}")
        photo_id = hashlib.sha256(data).hexdigest()
        variants = {spec.name: make_variant(data, spec.max_w, spec.max_h)
                    for spec in self.variant_specs}
        with self._lock:
            self._photos[photo_id] = PhotoRecord(photo_id, data, variants)
        return photo_id

    def get_photo(self, photo_id: str, *, variant: str | None = None,
                  width: int | None = None, height: int | None = None,
                  crop: Crop | None = None) -> bytes:
        with self._lock:
            rec = self._photos.get(photo_id)
        if rec is None:
            raise RequestRejected(404, f"unknown photo id {photo_id}")
        if variant is not None:
            if width or height or crop:
                raise RequestRejected(400, "variant excludes w/h/crop")
            if variant == "orig":
                return rec.original_public
            blob = rec.variants.get(variant)
            if blob is None:
                raise RequestRejected(400, f"unknown variant {variant!r}")
            return blob
        if width is None and height is None and crop is None:
            return rec.original_public
        try:
            return dynamic_transform(rec.original_public, crop=crop,
                                     width=width, height=height)
        except (GeometryError, CodecError) as e:
            raise RequestRejected(400, f"bad geometry: {e}")

    # -- secrets ---------------------------------------------------------------

    def put_secret(self, photo_id: str, blob: bytes) -> None:
        if len(blob) > MAX_UPLOAD_BYTES:
            raise RequestRejected(413, "upload exceeds the size limit")
        with self._lock:
            self._secrets[photo_id] = blob

    def get_secret(self, photo_id: str) -> bytes:
        with self._lock:
            blob = self._secrets.get(photo_id)
        if blob is None:
            raise RequestRejected(404, f"no secret stored for {photo_id}")
        return blob


# --- HTTP layer ----------------------------------------------------------------


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "MockPSP/1.0"

    def log_message(self, fmt, *args):  # silence request logging
        if getattr(self.server, "verbose", False):
            super().log_message(fmt, *args)

    # -- helpers ---------------------------------------------------------------

    def _send(self, status: int, body: bytes, content_type: str):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, doc: dict):
        self._send(status, json.dumps(doc).encode(), "application/json")

    def _error(self, status: int, message: str):
        self._send_json(status, {"error": message})

    def _read_body(self) -> bytes | None:
        length = int(self.headers.get("Content-Length", 0))
        if length > MAX_UPLOAD_BYTES:
            self._error(413, "upload exceeds the size limit")
            return None
        return self.rfile.read(length)

    # -- routes ----------------------------------------------------------------

    def do_PUT(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        body = self._read_body()
        if body is None:
            return
        try:
            if parts == ["photos"]:
                photo_id = self.server.store.put_photo(body)
                self._send_json(200, {"photo_id": photo_id})
            elif len(parts) == 2 and parts[0] == "secrets":
                self.server.store.put_secret(parts[1], body)
                self._send_json(200, {"photo_id": parts[1], "size": len(body)})
            else:
                self._error(404, f"no such route {url.path}")
        except RequestRejected as e:
            self._error(e.status, e.message)

    def do_POST(self):
        self.do_PUT()

    def do_GET(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        query = parse_qs(url.query)

        def q1(name):
            vals = query.get(name)
            return vals[0] if vals else None

        try:
            if len(parts) == 2 and parts[0] == "photos":
                width = height = crop = None
                variant = q1("variant")
                try:
                    if q1("w") is not None:
                        width = int(q1("w"))
                    if q1("h") is not None:
                        height = int(q1("h"))
                    if q1("crop") is not None:
                        x, y, w, h = (int(v) for v in q1("crop").split(","))
                        crop = Crop(x, y, w, h)
                    if (width is not None and width < 1) or \
                       (height is not None and height < 1):
                        raise ValueError("size must be positive")
                except ValueError as e:
                    raise RequestRejected(400, f"bad geometry parameters: {e}")
                blob = self.server.store.get_photo(
                    parts[1], variant=variant, width=width, height=height,
                    crop=crop)
                self._send(200, blob, "image/jpeg")
            elif len(parts) == 2 and parts[0] == "secrets":
                blob = self.server.store.get_secret(parts[1])
                self._send(200, blob, "application/octet-stream")
            else:
                self._error(404, f"no such route {url.path}")
        except RequestRejected as e:
            self._error(e.status, e.message)


class MockPspServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, addr: tuple[str, int], store: PhotoStore | None = None,
                 verbose: bool = False):
        super().__init__(addr, _Handler)
        self.store = store if store is not None else PhotoStore()
        self.verbose = verbose

    @property
    def base_url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"


class ServerThread:
    """Run a MockPspServer on a background thread; usable as a context
    manager in tests and demos."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 store: PhotoStore | None = None):
        self.server = MockPspServer((host, port), store)
        self.thread = threading.Thread(target=self.server.serve_forever,
                                       daemon=True)

    @property
    def base_url(self) -> str:
        return self.server.base_url

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5)


def serve(listen: str = "127.0.0.1:8093", *, verbose: bool = True) -> None:
    """Blocking server entry point used by the CLI."""
    host, _, port = listen.rpartition(":")
    server = MockPspServer((host or "127.0.0.1", int(port)), verbose=verbose)
    try:
        server.serve_forever()
    finally:
        server.server_close()
