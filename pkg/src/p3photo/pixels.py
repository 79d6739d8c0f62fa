"""Pixel-domain machinery.

Dequantization and the 8x8 transform pair, plane assembly, color
conversion, the linear provider transforms (crop, resize, sharpen), and
the calibration search that recovers an unknown provider pipeline.

Planes are float64 throughout; integer rounding happens only when samples
are finally emitted.  A "conventional" image is a normal decode (level
shift applied, clamped to [0, 255]); a "residual" image is a signed,
unclamped inverse transform used to carry correction signals through
linear transforms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch, GeometryError, InvalidImage, NoCandidateFits
from .jpeg.tables import scaled_quant_table, STD_QUANT_CHROMA, STD_QUANT_LUMA
from .jpeg.types import ComponentSpec, QuantTable, QuantizedImage

# Orthonormal 8-point DCT basis: BASIS[u, x] = c_u/2 * cos((2x+1) u pi / 16)
_BASIS = np.zeros((8, 8))
for _u in range(8):
    _cu = math.sqrt(0.5) if _u == 0 else 1.0
    for _x in range(8):
        _BASIS[_u, _x] = 0.5 * _cu * math.cos((2 * _x + 1) * _u * math.pi / 16)
del _u, _cu, _x


def fdct_block(samples) -> np.ndarray:
    """Forward 8x8 orthonormal DCT of one block (shape (8, 8) or (64,))."""
    s = np.asarray(samples, dtype=np.float64).reshape(8, 8)
    return (_BASIS @ s @ _BASIS.T).reshape(-1)


def idct_block(coeffs) -> np.ndarray:
    """Inverse 8x8 orthonormal DCT; returns an (8, 8) float block."""
    c = np.asarray(coeffs, dtype=np.float64).reshape(8, 8)
    return _BASIS.T @ c @ _BASIS


def _idct_grid(blocks: np.ndarray) -> np.ndarray:
    """Inverse transform a (rows, cols, 64) grid into a padded pixel plane."""
    rows, cols = blocks.shape[:2]
    x = blocks.reshape(rows, cols, 8, 8).astype(np.float64)
    x = np.einsum("ux,rcuv,vy->rcxy", _BASIS, x, _BASIS, optimize=True)
    return x.transpose(0, 2, 1, 3).reshape(rows * 8, cols * 8)


def _fdct_plane(plane: np.ndarray) -> np.ndarray:
    """Forward transform a block-aligned plane into a (rows, cols, 64) grid."""
    h, w = plane.shape
    rows, cols = h // 8, w // 8
    x = plane.reshape(rows, 8, cols, 8).transpose(0, 2, 1, 3)
    x = np.einsum("ux,rcxy,vy->rcuv", _BASIS, x, _BASIS, optimize=True)
    return x.reshape(rows, cols, 64)


@dataclass
class PixelImage:
    """One or three sample planes plus enough metadata to transform them.

    ``samplings`` records each plane's JPEG-style sampling factors so a
    transform expressed in image coordinates can be scaled onto subsampled
    chroma planes.  Full-resolution images use (1, 1) everywhere.
    """

    planes: list
    mode: str = "conventional"            # or "residual"
    colorspace: str = "ycbcr"             # or "rgb"
    samplings: tuple = ((1, 1),)

    def __post_init__(self):
        self.planes = [np.asarray(p, dtype=np.float64) for p in self.planes]
        if len(self.samplings) != len(self.planes):
            self.samplings = tuple((1, 1) for _ in self.planes)
        if self.mode not in ("conventional", "residual"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def width(self) -> int:
        return int(self.planes[0].shape[1])

    @property
    def height(self) -> int:
        return int(self.planes[0].shape[0])

    @property
    def size(self) -> tuple[int, int]:
        return self.width, self.height

    def plane_sizes(self) -> list[tuple[int, int]]:
        return [(int(p.shape[1]), int(p.shape[0])) for p in self.planes]

    def max_sampling(self) -> tuple[int, int]:
        return (max(h for h, _ in self.samplings),
                max(v for _, v in self.samplings))

    def copy(self) -> "PixelImage":
        return PixelImage([p.copy() for p in self.planes], self.mode,
                          self.colorspace, self.samplings)

    def rounded(self) -> "PixelImage":
        """Integer-rounded copy; conventional images are also clamped."""
        if self.mode == "conventional":
            planes = [np.clip(np.rint(p), 0, 255) for p in self.planes]
        else:
            planes = [np.rint(p) for p in self.planes]
        return PixelImage(planes, self.mode, self.colorspace, self.samplings)


def decode_to_pixels(img: QuantizedImage, mode: str = "conventional") -> PixelImage:
    """Dequantize and inverse-transform a coefficient image.

    Conventional mode applies the +128 level shift, rounds and clamps to
    [0, 255]; residual mode returns the raw signed inverse transform.
    """
    if mode not in ("conventional", "residual"):
        raise ValueError(f"unknown mode {mode!r}")
    planes = []
    for i in range(img.n_components):
        q = img.quant_table_for(i).natural().astype(np.float64)
        deq = img.blocks[i].astype(np.float64) * q
        plane = _idct_grid(deq)
        w, h = img.plane_size(i)
        plane = plane[:h, :w]
        if mode == "conventional":
            plane = np.clip(np.rint(plane + 128.0), 0, 255)
        planes.append(plane)
    return PixelImage(planes, mode=mode, colorspace="ycbcr",
                      samplings=img.samplings())


def _quantize(values: np.ndarray, q: np.ndarray) -> np.ndarray:
    scaled = values / q
    return np.trunc(scaled + np.copysign(0.5, scaled)).astype(np.int32)


def encode_pixels(pix: PixelImage, quality: int = 85, *,
                  restart_interval: int = 0) -> QuantizedImage:
    """Quantize a conventional YCbCr PixelImage to coefficients.

    Uses the standard example tables scaled by ``quality``; component ids
    and sampling factors come from the image itself.
    """
    if pix.mode != "conventional":
        raise InvalidImage("only conventional images can be encoded")
    if pix.colorspace != "ycbcr":
        raise InvalidImage("encode expects a YCbCr (or single-plane) image")
    n = len(pix.planes)
    if n not in (1, 3):
        raise InvalidImage("1 or 3 planes required")

    luma_q = scaled_quant_table(STD_QUANT_LUMA, quality)
    tables = [QuantTable(0, _nat_to_zz(luma_q))]
    if n == 3:
        chroma_q = scaled_quant_table(STD_QUANT_CHROMA, quality)
        tables.append(QuantTable(1, _nat_to_zz(chroma_q)))

    comps = []
    blocks = []
    for i, plane in enumerate(pix.planes):
        h_s, v_s = pix.samplings[i]
        comps.append(ComponentSpec(i + 1, h_s, v_s, 0 if i == 0 else 1))
        q = tables[0 if i == 0 else 1].natural().astype(np.float64)
        h, w = plane.shape
        pad_h = (-h) % 8
        pad_w = (-w) % 8
        padded = np.pad(plane, ((0, pad_h), (0, pad_w)), mode="edge")
        coeffs = _fdct_plane(np.asarray(padded, dtype=np.float64) - 128.0)
        grid = _quantize(coeffs, q)
        np.clip(grid[..., 1:], -1023, 1023, out=grid[..., 1:])
        np.clip(grid[..., 0], -2047, 2047, out=grid[..., 0])
        blocks.append(grid)

    img = QuantizedImage(
        width=pix.width, height=pix.height,
        components=tuple(comps), quant_tables=tuple(tables),
        blocks=tuple(blocks), restart_interval=restart_interval)
    img.validate()
    return img


def _nat_to_zz(natural_vals: np.ndarray) -> np.ndarray:
    from .jpeg.tables import natural_to_zigzag
    return natural_to_zigzag(natural_vals)


# --- color ------------------------------------------------------------------

def rgb_to_ycbcr(pix: PixelImage) -> PixelImage:
    """JFIF color conversion; expects three full-resolution RGB planes."""
    if pix.colorspace != "rgb" or len(pix.planes) != 3:
        raise InvalidImage("rgb_to_ycbcr expects a 3-plane RGB image")
    r, g, b = pix.planes
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0
    cr = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0
    planes = [np.clip(np.rint(p), 0, 255) for p in (y, cb, cr)]
    return PixelImage(planes, mode="conventional", colorspace="ycbcr",
                      samplings=((1, 1),) * 3)


def ycbcr_to_rgb(pix: PixelImage) -> PixelImage:
    """Inverse JFIF conversion; expects full-resolution YCbCr planes."""
    if pix.colorspace != "ycbcr":
        raise InvalidImage("ycbcr_to_rgb expects a YCbCr image")
    if len(pix.planes) == 1:
        y = pix.planes[0]
        planes = [np.clip(np.rint(y), 0, 255)] * 3
        return PixelImage([p.copy() for p in planes], mode="conventional",
                          colorspace="rgb", samplings=((1, 1),) * 3)
    sizes = set(p.shape for p in pix.planes)
    if len(sizes) != 1:
        raise DimensionMismatch("upsample chroma before converting to RGB")
    y, cb, cr = pix.planes
    cb = cb - 128.0
    cr = cr - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    planes = [np.clip(np.rint(p), 0, 255) for p in (r, g, b)]
    return PixelImage(planes, mode="conventional", colorspace="rgb",
                      samplings=((1, 1),) * 3)


def upsample_chroma(pix: PixelImage) -> PixelImage:
    """Replicate subsampled planes up to full resolution."""
    h_max, v_max = pix.max_sampling()
    full_w, full_h = pix.width, pix.height
    planes = []
    for plane, (h_s, v_s) in zip(pix.planes, pix.samplings):
        fx = h_max // h_s
        fy = v_max // v_s
        if fx == 1 and fy == 1:
            planes.append(plane.copy())
            continue
        up = np.repeat(np.repeat(plane, fy, axis=0), fx, axis=1)
        planes.append(up[:full_h, :full_w])
    return PixelImage(planes, mode=pix.mode, colorspace=pix.colorspace,
                      samplings=((1, 1),) * len(planes))


def downsample_chroma(pix: PixelImage, samplings) -> PixelImage:
    """Box-average full-resolution planes down to the given samplings."""
    h_max = max(h for h, _ in samplings)
    v_max = max(v for _, v in samplings)
    planes = []
    for plane, (h_s, v_s) in zip(pix.planes, samplings):
        fx = h_max // h_s
        fy = v_max // v_s
        if fx == 1 and fy == 1:
            planes.append(plane.copy())
            continue
        h, w = plane.shape
        pad_h = (-h) % fy
        pad_w = (-w) % fx
        p = np.pad(plane, ((0, pad_h), (0, pad_w)), mode="edge")
        p = p.reshape(p.shape[0] // fy, fy, p.shape[1] // fx, fx).mean(axis=(1, 3))
        planes.append(p)
    return PixelImage(planes, mode=pix.mode, colorspace=pix.colorspace,
                      samplings=tuple(samplings))


# --- transforms -------------------------------------------------------------

RESIZE_FILTERS = ("nearest", "bilinear", "box")


@dataclass(frozen=True)
class Crop:
    """Crop step in image coordinates; offsets and sizes snap to the 8x8
    block grid before application."""
    x: int
    y: int
    w: int
    h: int


@dataclass(frozen=True)
class Resize:
    width: int
    height: int
    filter: str = "bilinear"
    sharpen: float | None = None

    def __post_init__(self):
        if self.filter not in RESIZE_FILTERS:
            raise GeometryError(f"unknown resize filter {self.filter!r}")
        if self.width < 1 or self.height < 1:
            raise GeometryError("resize target must be at least 1x1")


@dataclass(frozen=True)
class Identity:
    pass


Step = Crop | Resize | Identity


@dataclass(frozen=True)
class TransformSpec:
    """An ordered composition of linear steps, expressed in image
    coordinates and applied per plane."""
    steps: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    @staticmethod
    def identity() -> "TransformSpec":
        return TransformSpec((Identity(),))

    def is_identity(self) -> bool:
        return all(isinstance(s, Identity) for s in self.steps)


def _snap8(v: int) -> int:
    return int(round(v / 8.0)) * 8


def snap_crop(step: Crop, width: int, height: int) -> Crop:
    """Snap a crop rectangle to the nearest block boundaries and clamp it
    inside the image."""
    x = min(max(_snap8(step.x), 0), max(width - 8, 0))
    y = min(max(_snap8(step.y), 0), max(height - 8, 0))
    w = max(_snap8(step.w), 8)
    h = max(_snap8(step.h), 8)
    w = min(w, ((width - x) // 8) * 8) if width - x >= 8 else width - x
    h = min(h, ((height - y) // 8) * 8) if height - y >= 8 else height - y
    if w < 1 or h < 1:
        raise GeometryError(f"crop {step} does not fit a {width}x{height} image")
    return Crop(x, y, w, h)


def _resample_axis(plane: np.ndarray, out_n: int, axis: int, filter: str) -> np.ndarray:
    """Resample one axis with a linear operator (fixed weights)."""
    in_n = plane.shape[axis]
    if in_n == out_n:
        return plane
    plane = np.moveaxis(plane, axis, 0)
    scale = in_n / out_n
    if filter == "nearest":
        idx = np.clip(np.floor((np.arange(out_n) + 0.5) * scale).astype(np.int64),
                      0, in_n - 1)
        out = plane[idx]
    elif filter == "bilinear":
        src = (np.arange(out_n) + 0.5) * scale - 0.5
        i0 = np.floor(src).astype(np.int64)
        frac = src - i0
        i0c = np.clip(i0, 0, in_n - 1)
        i1c = np.clip(i0 + 1, 0, in_n - 1)
        shape = (out_n,) + (1,) * (plane.ndim - 1)
        out = plane[i0c] * (1.0 - frac.reshape(shape)) + plane[i1c] * frac.reshape(shape)
    elif filter == "box":
        # exact fractional-footprint area average via a running integral
        cs = np.concatenate([np.zeros((1,) + plane.shape[1:]),
                             np.cumsum(plane, axis=0)], axis=0)

        def integral(t):
            i = np.clip(np.floor(t).astype(np.int64), 0, in_n)
            frac = np.clip(t - i, 0.0, 1.0)
            base = cs[i]
            part = plane[np.clip(i, 0, in_n - 1)] * frac.reshape(
                (-1,) + (1,) * (plane.ndim - 1))
            part[i >= in_n] = 0.0
            return base + part

        edges = np.arange(out_n + 1) * scale
        ints = integral(edges)
        out = (ints[1:] - ints[:-1]) / scale
    else:
        raise GeometryError(f"unknown resize filter {filter!r}")
    return np.moveaxis(out, 0, axis)


def _resize_plane(plane: np.ndarray, out_w: int, out_h: int, filter: str) -> np.ndarray:
    out = _resample_axis(plane, out_h, 0, filter)
    out = _resample_axis(out, out_w, 1, filter)
    return out


def _sharpen_plane(plane: np.ndarray, strength: float) -> np.ndarray:
    blurred = ndimage.gaussian_filter(plane, sigma=1.0, mode="nearest")
    return plane + strength * (plane - blurred)


def plane_target(size: int, s: int, s_max: int) -> int:
    return math.ceil(size * s / s_max)


def transform_output_size(spec: TransformSpec, size: tuple[int, int]) -> tuple[int, int]:
    """Image-coordinate output size of a transform, after crop snapping."""
    w, h = size
    for step in spec.steps:
        if isinstance(step, Identity):
            continue
        if isinstance(step, Crop):
            c = snap_crop(step, w, h)
            w, h = c.w, c.h
        elif isinstance(step, Resize):
            w, h = step.width, step.height
        else:
            raise GeometryError(f"unknown transform step {step!r}")
    return w, h


def apply_transform(pix: PixelImage, spec: TransformSpec) -> PixelImage:
    """Apply the steps in order, independently per plane.

    Plane geometry follows the image-coordinate spec scaled by each
    plane's sampling factors (sizes rounded up).  Residual images pass
    through unclamped; conventional output is clamped but not rounded.
    """
    h_max, v_max = pix.max_sampling()
    planes = [p.copy() for p in pix.planes]
    width, height = pix.size
    for step in spec.steps:
        if isinstance(step, Identity):
            continue
        if isinstance(step, Crop):
            c = snap_crop(step, width, height)
            new_planes = []
            for plane, (h_s, v_s) in zip(planes, pix.samplings):
                x0 = c.x * h_s // h_max
                y0 = c.y * v_s // v_max
                w = plane_target(c.w, h_s, h_max)
                h = plane_target(c.h, v_s, v_max)
                if y0 + h > plane.shape[0] or x0 + w > plane.shape[1]:
                    raise GeometryError(f"crop {c} exceeds plane {plane.shape}")
                new_planes.append(plane[y0:y0 + h, x0:x0 + w])
            planes = new_planes
            width, height = c.w, c.h
        elif isinstance(step, Resize):
            new_planes = []
            for plane, (h_s, v_s) in zip(planes, pix.samplings):
                w = plane_target(step.width, h_s, h_max)
                h = plane_target(step.height, v_s, v_max)
                out = _resize_plane(plane, w, h, step.filter)
                if step.sharpen:
                    out = _sharpen_plane(out, step.sharpen)
                new_planes.append(out)
            planes = new_planes
            width, height = step.width, step.height
        else:
            raise GeometryError(f"unknown transform step {step!r}")
    if pix.mode == "conventional":
        planes = [np.clip(p, 0, 255) for p in planes]
    return PixelImage(planes, mode=pix.mode, colorspace=pix.colorspace,
                      samplings=pix.samplings)


# --- spec mini-grammar (shared by the CLI and calibration reports) ----------

def format_spec(spec: TransformSpec) -> str:
    parts = []
    for step in spec.steps:
        if isinstance(step, Identity):
            parts.append("identity")
        elif isinstance(step, Crop):
            parts.append(f"crop:{step.x},{step.y},{step.w},{step.h}")
        elif isinstance(step, Resize):
            s = f"resize:{step.width}x{step.height}:{step.filter}"
            if step.sharpen:
                s += f":sharpen={step.sharpen:g}"
            parts.append(s)
    return "+".join(parts) if parts else "identity"


def parse_spec(text: str) -> TransformSpec:
    """Parse the flag grammar: ``crop:x,y,w,h``, ``resize:WxH:filter``
    (optionally ``:sharpen=S``), ``identity``, composed with ``+``."""
    steps = []
    for chunk in text.split("+"):
        chunk = chunk.strip()
        if not chunk or chunk == "identity":
            steps.append(Identity())
            continue
        kind, _, rest = chunk.partition(":")
        if kind == "crop":
            try:
                x, y, w, h = (int(v) for v in rest.split(","))
            except ValueError:
                raise GeometryError(f"bad crop spec {chunk!r}") from None
            steps.append(Crop(x, y, w, h))
        elif kind == "resize":
            fields = rest.split(":")
            try:
                w_s, h_s = fields[0].lower().split("x")
                w, h = int(w_s), int(h_s)
            except ValueError:
                raise GeometryError(f"bad resize spec {chunk!r}") from None
            filt = fields[1] if len(fields) > 1 and fields[1] else "bilinear"
            sharpen = None
            for extra in fields[2:]:
                if extra.startswith("sharpen="):
                    sharpen = float(extra.split("=", 1)[1])
                elif extra:
                    raise GeometryError(f"bad resize option {extra!r}")
            steps.append(Resize(w, h, filt, sharpen))
        else:
            raise GeometryError(f"unknown transform step {chunk!r}")
    return TransformSpec(tuple(steps))


# --- calibration ------------------------------------------------------------

def _pixel_mse(a: PixelImage, b: PixelImage) -> float:
    sse = 0.0
    n = 0
    for pa, pb in zip(a.planes, b.planes):
        if pa.shape != pb.shape:
            raise DimensionMismatch(f"plane {pa.shape} vs {pb.shape}")
        d = pa - pb
        sse += float(np.dot(d.ravel(), d.ravel()))
        n += d.size
    return sse / n


def _psnr_from_mse(mse: float) -> float:
    if mse <= 0.0:
        return float("inf")
    return 10.0 * math.log10(255.0 ** 2 / mse)


def calibrate_transform(original_public: PixelImage, provider_output: PixelImage,
                        candidates) -> tuple[TransformSpec, float]:
    """Pick the candidate transform that best explains the provider output.

    Candidates whose output geometry differs from the observed one are
    skipped; the rest are scored by mean squared error against the
    provider output.  Ties keep the earliest candidate.  Returns the
    winner and its PSNR in dB.
    """
    candidates = list(candidates)
    if not candidates:
        raise NoCandidateFits("empty candidate list")
    observed = provider_output.plane_sizes()
    best = None
    best_mse = None
    for cand in candidates:
        try:
            out = apply_transform(original_public, cand)
        except GeometryError:
            continue
        if out.plane_sizes() != observed:
            continue
        mse = _pixel_mse(out, provider_output)
        if best_mse is None or mse < best_mse:
            best, best_mse = cand, mse
    if best is None:
        raise NoCandidateFits(
            f"no candidate produces planes {observed} from "
            f"{original_public.plane_sizes()}")
    return best, _psnr_from_mse(best_mse)


def default_resize_candidates(width: int, height: int,
                              sharpen_options=(None, 0.5)) -> list[TransformSpec]:
    """Grid of plausible provider resize pipelines for a target size."""
    cands = []
    for filt in RESIZE_FILTERS:
        for sh in sharpen_options:
            cands.append(TransformSpec((Resize(width, height, filt, sh),)))
    return cands
