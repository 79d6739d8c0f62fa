"""Objective evaluation: storage sweeps, PSNR, bandwidth cost, edge-based
privacy scoring, and the attack oracles (threshold guessing, sign-guess
error)."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import statistics
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import envelope
from .core import split_image
from .errors import DimensionMismatch, NoNonzeroCoefficients
from .jpeg import QuantizedImage, decode_jpeg, encode_jpeg
from .pixels import PixelImage, decode_to_pixels


# --- fidelity ----------------------------------------------------------------

def mse(a: PixelImage, b: PixelImage) -> float:
    """Mean squared error across all planes, weighted by plane size."""
    if len(a.planes) != len(b.planes):
        raise DimensionMismatch(
            f"{len(a.planes)} planes vs {len(b.planes)}")
    sse = 0.0
    n = 0
    for pa, pb in zip(a.planes, b.planes):
        if pa.shape != pb.shape:
            raise DimensionMismatch(f"plane {pa.shape} vs {pb.shape}")
        d = pa.astype(np.float64) - pb.astype(np.float64)
        sse += float(np.dot(d.ravel(), d.ravel()))
        n += d.size
    return sse / n


def psnr(a: PixelImage, b: PixelImage) -> float:
    """Peak signal-to-noise ratio in dB against the 8-bit peak; equal
    images report +inf."""
    m = mse(a, b)
    if m <= 0.0:
        return float("inf")
    return 10.0 * math.log10(255.0 ** 2 / m)


# --- edge privacy -------------------------------------------------------------

def _luma(img) -> np.ndarray:
    if isinstance(img, PixelImage):
        return np.asarray(img.planes[0], dtype=np.float64)
    return np.asarray(img, dtype=np.float64)


def canny(img, low: float | None = None, high: float | None = None,
          sigma: float = 1.4) -> np.ndarray:
    """Edge map of the luma plane: Gaussian blur, Sobel gradients,
    non-maximum suppression, double-threshold hysteresis.

    Thresholds default to 0.1 and 0.3 of the maximum gradient magnitude.
    Returns a {0, 1} uint8 raster of the input shape.
    """
    plane = _luma(img)
    smooth = ndimage.gaussian_filter(plane, sigma=sigma, mode="nearest")
    kx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
    ky = np.array([[1, 2, 1], [0, 0, 0], [-1, -2, -1]], dtype=np.float64)
    gx = ndimage.convolve(smooth, kx, mode="nearest")
    gy = ndimage.convolve(smooth, ky, mode="nearest")
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak == 0.0:
        return np.zeros_like(plane, dtype=np.uint8)
    if low is None:
        low = 0.1 * peak
    if high is None:
        high = 0.3 * peak

    # quantize gradient direction into 4 sectors and keep local ridge maxima
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    padded = np.pad(mag, 1, mode="constant")

    def shifted(dy, dx):
        return padded[1 + dy:1 + dy + mag.shape[0], 1 + dx:1 + dx + mag.shape[1]]

    sector0 = (angle < 22.5) | (angle >= 157.5)          # horizontal gradient
    sector1 = (angle >= 22.5) & (angle < 67.5)           # rising diagonal
    sector2 = (angle >= 67.5) & (angle < 112.5)          # vertical gradient
    sector3 = (angle >= 112.5) & (angle < 157.5)         # falling diagonal
    n1 = np.where(sector0, shifted(0, 1),
         np.where(sector1, shifted(1, -1),
         np.where(sector2, shifted(1, 0), shifted(1, 1))))
    n2 = np.where(sector0, shifted(0, -1),
         np.where(sector1, shifted(-1, 1),
         np.where(sector2, shifted(-1, 0), shifted(-1, -1))))
    ridge = (mag >= n1) & (mag >= n2)

    strong = ridge & (mag >= high)
    weak = ridge & (mag >= low)
    labels, count = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return np.zeros_like(plane, dtype=np.uint8)
    keep = np.zeros(count + 1, dtype=bool)
    keep[np.unique(labels[strong])] = True
    keep[0] = False
    return keep[labels].astype(np.uint8)


def edge_match(original, public_part, *, sigma: float = 1.4) -> float:
    """Fraction of the original's edge pixels that survive in the public
    part's edge map (recall).  Empty original edge maps score 0."""
    e_orig = canny(original, sigma=sigma)
    e_pub = canny(public_part, sigma=sigma)
    if e_orig.shape != e_pub.shape:
        raise DimensionMismatch(f"{e_orig.shape} vs {e_pub.shape}")
    total = int(e_orig.sum())
    if total == 0:
        return 0.0
    return float((e_orig & e_pub).sum()) / total


# --- attack oracles -----------------------------------------------------------

def guess_threshold(public: QuantizedImage) -> int:
    """Estimate the split threshold from a public part alone, as the most
    frequent nonzero AC magnitude (ties go to the larger value)."""
    mags = []
    for grid in public.blocks:
        ac = np.abs(grid[..., 1:]).ravel()
        mags.append(ac[ac > 0])
    mags = np.concatenate(mags) if mags else np.empty(0, dtype=np.int64)
    if mags.size == 0:
        raise NoNonzeroCoefficients("public part has no nonzero AC values")
    counts = np.bincount(mags)
    best = counts.max()
    return int(np.flatnonzero(counts == best)[-1])


def sign_guess_mse(magnitude: float, guess: float) -> float:
    """Expected squared error of guessing ``guess`` for a hidden value of
    known magnitude and equiprobable sign: (m - g)^2/2 + (m + g)^2/2,
    which is m^2 + g^2 and is uniquely minimized by guessing zero."""
    m = float(magnitude)
    g = float(guess)
    return 0.5 * ((m - g) ** 2 + (m + g) ** 2)


# --- storage sweep ------------------------------------------------------------

@dataclass
class SweepRow:
    image: str
    threshold: int
    size_original: int
    size_public: int
    size_secret: int
    size_total: int
    frac_public: float
    frac_secret: float
    frac_total: float
    psnr_public: float | None = None
    edge_match: float | None = None


@dataclass
class SweepReport:
    thresholds: tuple
    rows: list

    def by_threshold(self) -> dict[int, dict[str, float]]:
        """Corpus mean and stdev of each size fraction, per threshold."""
        out: dict[int, dict[str, float]] = {}
        for t in self.thresholds:
            rows = [r for r in self.rows if r.threshold == t]
            if not rows:
                continue
            entry: dict[str, float] = {}
            for key in ("frac_public", "frac_secret", "frac_total"):
                vals = [getattr(r, key) for r in rows]
                entry[f"{key}_mean"] = statistics.fmean(vals)
                entry[f"{key}_stdev"] = (statistics.stdev(vals)
                                         if len(vals) > 1 else 0.0)
            psnrs = [r.psnr_public for r in rows if r.psnr_public is not None]
            if psnrs:
                entry["psnr_public_mean"] = statistics.fmean(psnrs)
            matches = [r.edge_match for r in rows if r.edge_match is not None]
            if matches:
                entry["edge_match_mean"] = statistics.fmean(matches)
            out[t] = entry
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["image", "T", "size_public", "size_secret", "size_total",
                        "psnr_public", "edge_match"])
            for r in self.rows:
                w.writerow([
                    r.image, r.threshold, r.size_public, r.size_secret,
                    r.size_total,
                    "" if r.psnr_public is None else f"{r.psnr_public:.3f}",
                    "" if r.edge_match is None else f"{r.edge_match:.4f}"])

    def write_json(self, path) -> None:
        doc = {
            "thresholds": list(self.thresholds),
            "rows": [asdict(r) for r in self.rows],
            "summary": {str(t): v for t, v in self.by_threshold().items()},
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, allow_nan=True)


def _load_sources(images) -> list[tuple[str, bytes]]:
    loaded = []
    for item in images:
        if isinstance(item, tuple):
            loaded.append(item)
        else:
            p = Path(item)
            loaded.append((p.name, p.read_bytes()))
    return loaded


def storage_sweep(images, thresholds, *, quality_metrics: bool = True) -> SweepReport:
    """Split every image at every threshold and record part sizes.

    ``images`` is a list of file paths or (name, bytes) tuples.  With
    ``quality_metrics`` the public part's PSNR and edge recall against the
    original are recorded as well.
    """
    thresholds = tuple(int(t) for t in thresholds)
    if not images:
        raise ValueError("at least one image required")
    rows = []
    for name, data in _load_sources(images):
        img = decode_jpeg(data)
        orig_size = len(data)
        orig_pix = decode_to_pixels(img) if quality_metrics else None
        for t in thresholds:
            pair = split_image(img, t)
            pub_bytes = encode_jpeg(pair.public)
            sec_bytes = encode_jpeg(pair.secret)
            row = SweepRow(
                image=name, threshold=t, size_original=orig_size,
                size_public=len(pub_bytes), size_secret=len(sec_bytes),
                size_total=len(pub_bytes) + len(sec_bytes),
                frac_public=len(pub_bytes) / orig_size,
                frac_secret=len(sec_bytes) / orig_size,
                frac_total=(len(pub_bytes) + len(sec_bytes)) / orig_size)
            if quality_metrics:
                pub_pix = decode_to_pixels(pair.public)
                row.psnr_public = psnr(pub_pix, orig_pix)
                row.edge_match = edge_match(orig_pix, pub_pix)
            rows.append(row)
    return SweepReport(thresholds=thresholds, rows=rows)


# --- bandwidth ----------------------------------------------------------------

def bandwidth_cost(original: bytes, threshold: int, variant_width: int,
                   *, quality: int = 85) -> int:
    """Extra bytes a recipient downloads for the protected variant versus
    the plain one.

    The variant is produced by the mock provider pipeline; its protected
    form is the variant's public part plus the sealed secret that
    reconstructs that variant.  At full size the pipeline is a no-op and
    the cost reduces to the envelope overhead plus the split overhead.
    """
    from .service import make_variant  # local import; service pulls in HTTP bits

    img = decode_jpeg(original)
    if variant_width >= img.width:
        variant_bytes = original
        variant_img = img
    else:
        variant_bytes = make_variant(original, variant_width, variant_width,
                                     quality=quality)
        variant_img = decode_jpeg(variant_bytes)
    pair = split_image(variant_img, threshold)
    pub_bytes = encode_jpeg(pair.public)
    sec_bytes = encode_jpeg(pair.secret)
    photo_id = hashlib.sha256(pub_bytes).hexdigest()
    container = len(sec_bytes) + envelope.overhead(photo_id)
    return len(pub_bytes) + container - len(variant_bytes)
