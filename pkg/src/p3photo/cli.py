"""Operator command line.

Exit codes: 0 success, 2 validation error, 3 authentication failure,
4 transport error, 5 codec or data-integrity error.
"""
from __future__ import annotations

import functools
import hashlib
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import envelope, metrics
from .client import PspClient
from .core import SplitPair, merge_image, reconstruct_transformed, split_image
from .errors import (AuthFailure, CalibrationFailed, CodecError,
                     DimensionMismatch, EnvelopeError, GeometryError,
                     InconsistentPair, NoCandidateFits, P3Error, TransportError)
from .jpeg import decode_jpeg, encode_jpeg, inspect_jpeg
from .pixels import (PixelImage, TransformSpec, apply_transform,
                     calibrate_transform, decode_to_pixels,
                     default_resize_candidates, encode_pixels, format_spec,
                     parse_spec, upsample_chroma, ycbcr_to_rgb)

EXIT_VALIDATION = 2
EXIT_AUTH = 3
EXIT_TRANSPORT = 4
EXIT_CODEC = 5

_EXIT_FOR = (
    (AuthFailure, EXIT_AUTH),
    (TransportError, EXIT_TRANSPORT),
    (EnvelopeError, EXIT_CODEC),
    (CodecError, EXIT_CODEC),
    (InconsistentPair, EXIT_CODEC),
    (CalibrationFailed, EXIT_CODEC),
    (NoCandidateFits, EXIT_CODEC),
    (GeometryError, EXIT_VALIDATION),
    (DimensionMismatch, EXIT_VALIDATION),
    (P3Error, EXIT_VALIDATION),
)


def _trap(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except P3Error as e:
            click.echo(f"error: {e}", err=True)
            for klass, code in _EXIT_FOR:
                if isinstance(e, klass):
                    sys.exit(code)
            sys.exit(EXIT_VALIDATION)
    return wrapper


def _load_key(key_file: str | None) -> bytes:
    if not key_file:
        raise click.UsageError(
            "a key is required: pass --key or set P3_KEY_FILE "
            "(64 hex chars in a file)")
    text = Path(key_file).read_text().strip()
    try:
        key = bytes.fromhex(text)
    except ValueError:
        raise click.UsageError(f"{key_file} is not a hex-encoded key")
    if len(key) != envelope.KEY_BYTES:
        raise click.UsageError(
            f"{key_file} holds {len(key)} bytes, need {envelope.KEY_BYTES}")
    return key


def _write_pixels(pix: PixelImage, path: Path):
    """Export a reconstructed image: .jpg re-encodes, .png/.ppm rasterize."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".jpg", ".jpeg"):
        path.write_bytes(encode_jpeg(encode_pixels(pix.rounded(), quality=95)))
        return
    full = ycbcr_to_rgb(upsample_chroma(pix)) if pix.colorspace == "ycbcr" else pix
    arr = np.stack([p for p in full.planes], axis=-1).astype(np.uint8)
    if suffix == ".ppm":
        with open(path, "wb") as fh:
            fh.write(f"P6\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode())
            fh.write(arr.tobytes())
    elif suffix == ".png":
        from PIL import Image
        Image.fromarray(arr, "RGB").save(path)
    else:
        raise click.UsageError(f"unsupported output format {suffix!r}")


threshold_option = click.option(
    "-t", "--threshold", type=click.IntRange(1, 100), default=20,
    show_default=True, help="split threshold")
key_option = click.option(
    "--key", "key_file", envvar="P3_KEY_FILE", type=click.Path(exists=True),
    help="hex key file (env P3_KEY_FILE)")
url_option = click.option(
    "--url", envvar="P3_URL", default="http://127.0.0.1:8093",
    show_default=True, help="provider base URL (env P3_URL)")


@click.group()
def main():
    """Selective-encryption photo codec and mock provider tooling."""


@main.command()
@click.argument("source", type=click.Path(exists=True))
@threshold_option
@click.option("-o", "--out-dir", type=click.Path(), default=".",
              show_default=True)
@click.option("--no-encrypt", is_flag=True,
              help="write secret.jpg instead of a sealed secret.p3s")
@key_option
@_trap
def split(source, threshold, out_dir, no_encrypt, key_file):
    """Split a JPEG into public and secret parts."""
    data = Path(source).read_bytes()
    img = decode_jpeg(data)
    pair = split_image(img, threshold)
    pub_bytes = encode_jpeg(pair.public)
    sec_bytes = encode_jpeg(pair.secret)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "public.jpg").write_bytes(pub_bytes)
    if no_encrypt:
        secret_name = "secret.jpg"
        (out / secret_name).write_bytes(sec_bytes)
        secret_len = len(sec_bytes)
    else:
        key = _load_key(key_file)
        photo_id = hashlib.sha256(pub_bytes).hexdigest()
        container = envelope.seal(sec_bytes, key, photo_id, threshold)
        secret_name = "secret" + envelope.FILE_EXTENSION
        (out / secret_name).write_bytes(container)
        secret_len = len(container)
    click.echo(f"public.jpg  {len(pub_bytes)} bytes "
               f"({len(pub_bytes) / len(data):.3f} of original)")
    click.echo(f"{secret_name}  {secret_len} bytes "
               f"({secret_len / len(data):.3f} of original)")
    click.echo(f"total ratio {(len(pub_bytes) + secret_len) / len(data):.3f}")


@main.command()
@click.argument("public", type=click.Path(exists=True))
@click.argument("secret", type=click.Path(exists=True))
@click.option("-o", "--out", type=click.Path(), required=True)
@click.option("--transform", "transform_text", default=None,
              help="provider transform, e.g. resize:130x130:bilinear")
@click.option("--calibrate", "calibrate_ref", type=click.Path(exists=True),
              help="recover the transform against this untouched public part")
@threshold_option
@key_option
@_trap
def merge(public, secret, out, transform_text, calibrate_ref, threshold,
          key_file):
    """Recombine a public part with its secret part.

    Without --transform/--calibrate the merge is exact in the coefficient
    domain; otherwise the pixel-domain reconstruction runs.
    """
    pub_bytes = Path(public).read_bytes()
    sec_raw = Path(secret).read_bytes()
    if sec_raw[:4] == envelope.MAGIC:
        key = _load_key(key_file)
        sec_bytes, threshold, _ = envelope.open_container(sec_raw, key)
    else:
        sec_bytes = sec_raw
    secret_img = decode_jpeg(sec_bytes)

    if transform_text is None and calibrate_ref is None:
        pair = SplitPair(decode_jpeg(pub_bytes), secret_img, threshold)
        Path(out).write_bytes(encode_jpeg(merge_image(pair)))
        click.echo(f"exact merge -> {out}")
        return

    provider_pix = decode_to_pixels(decode_jpeg(pub_bytes))
    if transform_text is not None:
        spec = parse_spec(transform_text)
    else:
        reference = decode_to_pixels(decode_jpeg(Path(calibrate_ref).read_bytes()))
        cands = default_resize_candidates(provider_pix.width, provider_pix.height)
        spec, cal_psnr = calibrate_transform(reference, provider_pix, cands)
        click.echo(f"calibrated transform: {format_spec(spec)} "
                   f"({cal_psnr:.1f} dB fit)")
    recon = reconstruct_transformed(provider_pix, secret_img, threshold, spec)
    _write_pixels(recon, Path(out))
    click.echo(f"reconstructed ({format_spec(spec)}) -> {out}")


@main.command()
@click.option("--listen", default="127.0.0.1:8093", show_default=True)
@_trap
def serve(listen):
    """Run the mock photo-sharing provider (blocking)."""
    from .service import serve as run
    click.echo(f"mock provider listening on {listen}")
    run(listen)


@main.command()
@click.argument("source", type=click.Path(exists=True))
@threshold_option
@url_option
@key_option
@_trap
def share(source, threshold, url, key_file):
    """Split, upload the public part, seal and store the secret part."""
    client = PspClient(url, _load_key(key_file))
    photo_id = client.share(Path(source).read_bytes(), threshold)
    click.echo(photo_id)


@main.command()
@click.argument("photo_id")
@click.option("--variant", default=None,
              help="named provider variant (thumb/small/big)")
@click.option("-w", "--width", type=int, default=None)
@click.option("-h", "--height", type=int, default=None)
@click.option("--crop", default=None, help="x,y,w,h in pixels")
@click.option("--calibration", default="known", show_default=True,
              help='"known", "auto", or an explicit transform spec')
@click.option("-o", "--out", type=click.Path(), default=None,
              help="write the reconstruction (jpg/png/ppm)")
@url_option
@key_option
@_trap
def view(photo_id, variant, width, height, crop, calibration, out, url,
         key_file):
    """Fetch a shared photo (optionally transformed) and reconstruct it."""
    client = PspClient(url, _load_key(key_file))
    crop_tuple = None
    if crop:
        try:
            crop_tuple = tuple(int(v) for v in crop.split(","))
            assert len(crop_tuple) == 4
        except (ValueError, AssertionError):
            raise click.UsageError("--crop expects x,y,w,h")
    if calibration not in ("known", "auto"):
        calibration = parse_spec(calibration)
    pix = client.view(photo_id, variant=variant, width=width, height=height,
                      crop=crop_tuple, calibration=calibration)
    stats = client.stats
    click.echo(json.dumps({
        "size": list(pix.size),
        "bytes_public": stats.last_view["bytes_public"],
        "bytes_secret": stats.last_view["bytes_secret"],
        "secret_cache_hits": stats.secret_cache_hits,
        "secret_fetches": stats.secret_fetches,
    }))
    if out:
        _write_pixels(pix, Path(out))
        click.echo(f"wrote {out}")


@main.command()
@click.argument("corpus", type=click.Path(exists=True))
@click.option("--thresholds", default="1,5,10,15,20,35,50,100",
              show_default=True)
@click.option("--report", type=click.Path(), default=None, help="CSV output")
@click.option("--json", "json_out", type=click.Path(), default=None,
              help="JSON summary output")
@click.option("--edges/--no-edges", default=True, show_default=True,
              help="include PSNR/edge metrics (slower)")
@_trap
def sweep(corpus, thresholds, report, json_out, edges):
    """Split every corpus image at every threshold and report sizes."""
    corpus = Path(corpus)
    if corpus.is_dir():
        images = sorted(p for p in corpus.iterdir()
                        if p.suffix.lower() in (".jpg", ".jpeg"))
    else:
        images = [corpus]
    if not images:
        raise click.UsageError(f"no JPEG files under {corpus}")
    ts = [int(t) for t in thresholds.split(",")]
    rep = metrics.storage_sweep(images, ts, quality_metrics=edges)
    for t, row in rep.by_threshold().items():
        line = (f"T={t:3d}  public={row['frac_public_mean']:.3f} "
                f"secret={row['frac_secret_mean']:.3f} "
                f"total={row['frac_total_mean']:.3f} "
                f"(stdev {row['frac_total_stdev']:.3f})")
        if "psnr_public_mean" in row:
            line += f"  psnr={row['psnr_public_mean']:.1f}dB"
        if "edge_match_mean" in row:
            line += f"  edges={row['edge_match_mean']:.3f}"
        click.echo(line)
    if report:
        rep.write_csv(report)
        click.echo(f"wrote {report}")
    if json_out:
        rep.write_json(json_out)
        click.echo(f"wrote {json_out}")


@main.group()
def attack():
    """Attack oracles against public parts."""


@attack.command("guess-t")
@click.argument("public", type=click.Path(exists=True))
@_trap
def attack_guess_t(public):
    """Estimate the split threshold of a public part."""
    img = decode_jpeg(Path(public).read_bytes())
    click.echo(str(metrics.guess_threshold(img)))


@main.group(name="metrics")
def metrics_group():
    """Objective image metrics."""


def _load_pixels(path: str) -> PixelImage:
    return decode_to_pixels(decode_jpeg(Path(path).read_bytes()))


@metrics_group.command("psnr")
@click.argument("a", type=click.Path(exists=True))
@click.argument("b", type=click.Path(exists=True))
@_trap
def metrics_psnr(a, b):
    """PSNR between two JPEGs of equal geometry."""
    value = metrics.psnr(_load_pixels(a), _load_pixels(b))
    click.echo("inf" if value == float("inf") else f"{value:.3f}")


@metrics_group.command("edges")
@click.argument("a", type=click.Path(exists=True))
@click.argument("b", type=click.Path(exists=True))
@_trap
def metrics_edges(a, b):
    """Edge recall of image B against reference image A."""
    value = metrics.edge_match(_load_pixels(a), _load_pixels(b))
    click.echo(f"{value:.4f}")


@main.command()
@click.argument("source", type=click.Path(exists=True))
@_trap
def inspect(source):
    """Describe a JPEG stream without decoding it."""
    info = inspect_jpeg(Path(source).read_bytes())
    click.echo(json.dumps({
        "kind": info.kind,
        "width": info.width,
        "height": info.height,
        "precision": info.precision,
        "components": list(info.components),
        "restart_interval": info.restart_interval,
        "markers": [list(m) for m in info.markers],
    }, indent=2))


if __name__ == "__main__":
    main()
