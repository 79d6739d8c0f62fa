"""Sender and recipient flows against a provider.

``share`` splits an image, uploads the public part, and stores the sealed
secret under the provider-assigned id.  ``view`` fetches a (possibly
transformed) public image plus the sealed secret — cache-first — and
reconstructs.  Identity views merge exactly in the coefficient domain;
transformed views reconstruct per plane in the pixel domain, deriving the
operator from the request, from an explicit spec, or by calibration.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import requests

from .core import SplitPair, merge_image, reconstruct_transformed, split_image
from .envelope import open_container, seal
from .errors import (AuthFailure, CalibrationFailed, MissingSecret,
                     NoCandidateFits, TransportError)
from .jpeg import QuantizedImage, decode_jpeg, encode_jpeg
from .pixels import (Crop, PixelImage, Resize, TransformSpec,
                     calibrate_transform, decode_to_pixels,
                     default_resize_candidates, snap_crop)
from .service import fit_box


@dataclass
class ClientStats:
    """Observable counters for cache behavior and bandwidth accounting."""
    public_fetches: int = 0
    secret_fetches: int = 0
    secret_cache_hits: int = 0
    bytes_public: int = 0
    bytes_secret: int = 0
    last_view: dict = field(default_factory=dict)


class PspClient:
    """One user's client state: endpoint, key, and a secret-part cache."""

    def __init__(self, base_url: str, key: bytes,
                 session: requests.Session | None = None,
                 timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.key = key
        self.http = session or requests.Session()
        self.timeout = timeout
        self.stats = ClientStats()
        self._secret_cache: dict[str, bytes] = {}

    # -- transport -------------------------------------------------------------

    def _request(self, method: str, path: str, **kw):
        try:
            resp = self.http.request(method, self.base_url + path,
                                     timeout=self.timeout, **kw)
        except requests.RequestException as e:
            raise TransportError(f"{method} {path}: {e}") from e
        return resp

    def _fail(self, resp, what: str):
        try:
            detail = resp.json().get("error", resp.reason)
        except ValueError:
            detail = resp.reason
        raise TransportError(f"{what}: HTTP {resp.status_code} ({detail})")

    # -- sender ----------------------------------------------------------------

    def share(self, image, threshold: int) -> str:
        """Split, upload the public part, seal and store the secret part.
        Returns the provider-assigned photo id."""
        data = Path(image).read_bytes() if not isinstance(image, (bytes, bytearray)) \
            else bytes(image)
        source = decode_jpeg(data)
        pair = split_image(source, threshold)
        public_bytes = encode_jpeg(pair.public)
        secret_bytes = encode_jpeg(pair.secret)

        resp = self._request("PUT", "/photos", data=public_bytes,
                             headers={"Content-Type": "image/jpeg"})
        if resp.status_code != 200:
            self._fail(resp, "public upload rejected")
        photo_id = resp.json()["photo_id"]

        container = seal(secret_bytes, self.key, photo_id, threshold)
        resp = self._request("PUT", f"/secrets/{photo_id}", data=container)
        if resp.status_code != 200:
            # one retry; the public part is already durable under its id
            resp = self._request("PUT", f"/secrets/{photo_id}", data=container)
            if resp.status_code != 200:
                self._fail(resp, "secret upload rejected")
        self._secret_cache[photo_id] = container
        return photo_id

    # -- recipient -------------------------------------------------------------

    def _fetch_public(self, photo_id: str, params: dict | None = None) -> bytes:
        resp = self._request("GET", f"/photos/{photo_id}", params=params or {})
        if resp.status_code != 200:
            self._fail(resp, "public fetch failed")
        self.stats.public_fetches += 1
        self.stats.bytes_public += len(resp.content)
        return resp.content

    def _fetch_secret(self, photo_id: str) -> tuple[bytes, int, str]:
        container = self._secret_cache.get(photo_id)
        if container is not None:
            self.stats.secret_cache_hits += 1
        else:
            resp = self._request("GET", f"/secrets/{photo_id}")
            if resp.status_code == 404:
                raise MissingSecret(f"no secret stored for {photo_id}")
            if resp.status_code != 200:
                self._fail(resp, "secret fetch failed")
            container = resp.content
            self.stats.secret_fetches += 1
            self.stats.bytes_secret += len(container)
            self._secret_cache[photo_id] = container
        secret_jpeg, threshold, sealed_id = open_container(container, self.key)
        if sealed_id != photo_id:
            raise AuthFailure(
                f"container is sealed for {sealed_id!r}, not {photo_id!r}")
        return secret_jpeg, threshold, sealed_id

    def reconstruct_quantized(self, photo_id: str) -> QuantizedImage:
        """Exact coefficient-domain reconstruction of the untouched image."""
        public_bytes = self._fetch_public(photo_id)
        secret_jpeg, threshold, _ = self._fetch_secret(photo_id)
        pair = SplitPair(decode_jpeg(public_bytes), decode_jpeg(secret_jpeg),
                         threshold)
        return merge_image(pair)

    def view(self, photo_id: str, *, variant: str | None = None,
             width: int | None = None, height: int | None = None,
             crop: tuple[int, int, int, int] | None = None,
             calibration="known") -> PixelImage:
        """Fetch and reconstruct one view of a shared photo.

        ``calibration`` is "known" (trust the documented provider
        pipeline), "auto" (search the candidate grid against the original
        public part), or an explicit TransformSpec.
        """
        params: dict = {}
        if variant:
            params["variant"] = variant
        if width:
            params["w"] = width
        if height:
            params["h"] = height
        if crop:
            params["crop"] = ",".join(str(v) for v in crop)

        public_bytes = self._fetch_public(photo_id, params)
        secret_jpeg, threshold, _ = self._fetch_secret(photo_id)
        secret = decode_jpeg(secret_jpeg)
        self.stats.last_view = {
            "photo_id": photo_id, "params": dict(params),
            "bytes_public": len(public_bytes),
            "bytes_secret": len(self._secret_cache[photo_id]),
        }

        if not params:
            pair = SplitPair(decode_jpeg(public_bytes), secret, threshold)
            return decode_to_pixels(merge_image(pair))

        provider_pix = decode_to_pixels(decode_jpeg(public_bytes))
        spec = self._derive_spec(photo_id, params, calibration,
                                 (secret.width, secret.height), provider_pix)
        result = reconstruct_transformed(provider_pix, secret, threshold, spec)
        self.stats.last_view["transform"] = spec
        return result

    def _derive_spec(self, photo_id: str, params: dict, calibration,
                     original_size: tuple[int, int],
                     provider_pix: PixelImage) -> TransformSpec:
        if isinstance(calibration, TransformSpec):
            return calibration
        src_w, src_h = original_size
        if calibration == "known":
            steps = []
            if "variant" in params:
                from .service import DEFAULT_VARIANTS
                spec = next((v for v in DEFAULT_VARIANTS
                             if v.name == params["variant"]), None)
                if spec is None:
                    raise CalibrationFailed(
                        f"unknown variant {params['variant']!r}")
                w, h = fit_box(src_w, src_h, spec.max_w, spec.max_h)
                if (w, h) != (src_w, src_h):
                    steps.append(Resize(w, h, "bilinear"))
            else:
                if "crop" in params:
                    x, y, w, h = (int(v) for v in params["crop"].split(","))
                    c = snap_crop(Crop(x, y, w, h), src_w, src_h)
                    steps.append(c)
                    src_w, src_h = c.w, c.h
                rw = int(params["w"]) if "w" in params else None
                rh = int(params["h"]) if "h" in params else None
                if rw or rh:
                    if rw is None:
                        rw = max(1, round(src_w * rh / src_h))
                    if rh is None:
                        rh = max(1, round(src_h * rw / src_w))
                    steps.append(Resize(rw, rh, "bilinear"))
            if not steps:
                return TransformSpec.identity()
            return TransformSpec(tuple(steps))
        if calibration == "auto":
            reference = decode_to_pixels(decode_jpeg(self._fetch_public(photo_id)))
            candidates = default_resize_candidates(provider_pix.width,
                                                   provider_pix.height)
            try:
                spec, _ = calibrate_transform(reference, provider_pix, candidates)
            except NoCandidateFits as e:
                raise CalibrationFailed(str(e)) from e
            return spec
        raise CalibrationFailed(f"unknown calibration mode {calibration!r}")
