"""Codec round trips, conformance against an independent decoder, and
error handling on malformed streams."""
import io

import numpy as np
import pytest
from PIL import Image

from p3photo.errors import CorruptStream, InvalidImage, UnsupportedFormat
from p3photo.jpeg import (ComponentSpec, QuantTable, QuantizedImage,
                          decode_jpeg, encode_jpeg, inspect_jpeg)
from p3photo.jpeg.tables import natural_to_zigzag, STD_QUANT_LUMA
from p3photo.pixels import PixelImage, decode_to_pixels, encode_pixels

from helpers import random_quantized_image, sparse_quantized_image


def gray_image(blocks, width, height, restart_interval=0):
    return QuantizedImage(
        width=width, height=height,
        components=(ComponentSpec(1, 1, 1, 0),),
        quant_tables=(QuantTable(0, natural_to_zigzag(STD_QUANT_LUMA)),),
        blocks=(np.asarray(blocks, dtype=np.int32),),
        restart_interval=restart_interval)


class TestRoundTrip:
    def test_all_zero_single_block(self):
        img = gray_image(np.zeros((1, 1, 64)), 8, 8)
        out = decode_jpeg(encode_jpeg(img))
        assert out == img
        pix = decode_to_pixels(out)
        assert np.all(pix.planes[0] == 128)

    def test_uniform_gray_pixels_give_zero_coefficients(self):
        pix = PixelImage([np.full((8, 8), 128.0)])
        img = encode_pixels(pix, quality=85)
        assert img.blocks[0].shape == (1, 1, 64)
        assert np.all(img.blocks[0] == 0)

    def test_double_round_trip_is_stable(self, small_jpeg):
        img = decode_jpeg(small_jpeg)
        data = encode_jpeg(img)
        img2 = decode_jpeg(data)
        assert img2 == img
        assert encode_jpeg(img2) == data

    @pytest.mark.parametrize("layout", ["gray", "444", "422", "420"])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_grids_round_trip(self, layout, seed):
        rng = np.random.default_rng(seed)
        img = random_quantized_image(rng, layout=layout)
        assert decode_jpeg(encode_jpeg(img)) == img

    @pytest.mark.parametrize("seed", range(6))
    def test_sparse_grids_round_trip(self, seed):
        rng = np.random.default_rng(100 + seed)
        img = sparse_quantized_image(rng, layout="420")
        assert decode_jpeg(encode_jpeg(img)) == img

    @pytest.mark.parametrize("interval", [1, 2, 5, 1000])
    def test_restart_interval_round_trip(self, interval):
        rng = np.random.default_rng(interval)
        img = random_quantized_image(rng, width=64, height=48, layout="420",
                                     restart_interval=interval)
        out = decode_jpeg(encode_jpeg(img))
        assert out == img
        assert out.restart_interval == interval

    def test_standard_tables_round_trip(self, small_jpeg):
        img = decode_jpeg(small_jpeg)
        data = encode_jpeg(img, optimized_huffman=False)
        assert decode_jpeg(data) == img

    def test_odd_dimensions_round_trip(self):
        rng = np.random.default_rng(9)
        for w, h in [(9, 9), (17, 23), (8, 33), (65, 8)]:
            img = random_quantized_image(rng, width=w, height=h, layout="420")
            assert decode_jpeg(encode_jpeg(img)) == img

    def test_app_segments_round_trip(self, small_jpeg):
        img = decode_jpeg(small_jpeg)
        img.app_segments = ((5, b"custom-metadata"),)
        data = encode_jpeg(img)
        again = decode_jpeg(data, keep_app_segments=True)
        assert again.app_segments == ((5, b"custom-metadata"),)
        # default decode drops application segments
        assert decode_jpeg(data).app_segments == ()


class TestConformance:
    """The emitted streams must agree with an independent reference decoder
    within one gray level per sample (component-wise; the reference only
    exposes unsubsampled planes directly)."""

    def _pil_planes(self, data):
        im = Image.open(io.BytesIO(data))
        if im.mode == "L":
            im.load()
            return [np.asarray(im, dtype=np.float64)]
        im.draft("YCbCr", im.size)
        arr = np.asarray(im, dtype=np.float64)
        return [arr[..., i] for i in range(arr.shape[-1])]

    def test_gray_stream_matches_reference(self, small_gray_jpeg):
        img = decode_jpeg(small_gray_jpeg)
        mine = decode_to_pixels(img)
        ref = self._pil_planes(encode_jpeg(img))
        assert np.abs(ref[0] - mine.planes[0]).max() <= 1

    def test_444_stream_matches_reference_all_planes(self):
        from p3photo.corpus import encode_rgb_jpeg, synthetic_rgb
        data = encode_rgb_jpeg(synthetic_rgb(77, 128, 96), sampling="444")
        img = decode_jpeg(data)
        mine = decode_to_pixels(img)
        ref = self._pil_planes(encode_jpeg(img))
        for r, m in zip(ref, mine.planes):
            assert np.abs(r - m).max() <= 1

    def test_420_luma_matches_reference(self, small_jpeg):
        img = decode_jpeg(small_jpeg)
        mine = decode_to_pixels(img)
        ref = self._pil_planes(encode_jpeg(img))
        assert np.abs(ref[0] - mine.planes[0]).max() <= 1

    def test_decoding_reference_encoder_output(self):
        from p3photo.corpus import synthetic_rgb
        rgb = synthetic_rgb(78, 160, 128)
        buf = io.BytesIO()
        Image.fromarray(rgb).save(buf, "JPEG", quality=92)
        data = buf.getvalue()
        img = decode_jpeg(data)
        mine = decode_to_pixels(img)
        ref = self._pil_planes(data)
        assert np.abs(ref[0] - mine.planes[0]).max() <= 1

    def test_reference_decoder_accepts_standard_tables(self, small_jpeg):
        img = decode_jpeg(small_jpeg)
        data = encode_jpeg(img, optimized_huffman=False)
        im = Image.open(io.BytesIO(data))
        im.load()
        assert im.size == (img.width, img.height)


class TestInspect:
    def test_420_sampling_reported(self, small_jpeg):
        info = inspect_jpeg(small_jpeg)
        assert info.kind == "baseline"
        factors = [(c["h_sampling"], c["v_sampling"]) for c in info.components]
        assert factors == [(2, 2), (1, 1), (1, 1)]

    def test_markers_listed_in_order(self, small_jpeg):
        img = decode_jpeg(small_jpeg)
        img.app_segments = ((1, b"first"), (2, b"second"))
        info = inspect_jpeg(encode_jpeg(img))
        names = [name for name, _ in info.markers]
        assert names[0] == "SOI"
        assert names.index("APP1") < names.index("APP2") < names.index("SOS")

    def test_progressive_reported_and_refused(self):
        from p3photo.corpus import synthetic_rgb
        buf = io.BytesIO()
        Image.fromarray(synthetic_rgb(5, 64, 64)).save(
            buf, "JPEG", quality=90, progressive=True)
        data = buf.getvalue()
        assert inspect_jpeg(data).kind == "progressive"
        with pytest.raises(UnsupportedFormat):
            decode_jpeg(data)

    def test_dimensions_and_tables(self, small_jpeg):
        info = inspect_jpeg(small_jpeg)
        assert (info.width, info.height) == (160, 120)
        assert info.precision == 8
        assert set(info.quant_tables) == {0, 1}
        assert ("dc", 0) in info.huffman_tables


class TestErrors:
    def test_not_a_jpeg(self):
        with pytest.raises(CorruptStream):
            decode_jpeg(b"PNG\r\n not a jpeg at all")

    def test_truncated_entropy_data(self, small_jpeg):
        with pytest.raises(CorruptStream):
            decode_jpeg(small_jpeg[:len(small_jpeg) // 2])

    def test_truncated_header(self, small_jpeg):
        with pytest.raises(CorruptStream):
            decode_jpeg(small_jpeg[:20])

    def test_corrupt_entropy_bytes(self, small_jpeg):
        # excise a chunk from the middle of the scan: the stream starves
        start = len(small_jpeg) // 2
        data = small_jpeg[:start] + small_jpeg[start + 200:]
        with pytest.raises(CorruptStream):
            decode_jpeg(data)

    def test_arithmetic_coding_refused(self, small_jpeg):
        data = bytearray(small_jpeg)
        idx = data.find(b"\xff\xc0")
        data[idx + 1] = 0xC9  # arithmetic sequential frame marker
        with pytest.raises(UnsupportedFormat):
            decode_jpeg(bytes(data))

    def test_twelve_bit_precision_refused(self, small_jpeg):
        data = bytearray(small_jpeg)
        idx = data.find(b"\xff\xc0")
        data[idx + 4] = 12  # precision byte of the frame header
        with pytest.raises(UnsupportedFormat):
            decode_jpeg(bytes(data))

    def test_oversized_coefficient_rejected_on_encode(self):
        img = gray_image(np.zeros((1, 1, 64)), 8, 8)
        bad = np.zeros((1, 1, 64), dtype=np.int32)
        bad[0, 0, 5] = 2000  # beyond the 10-bit baseline AC range
        with pytest.raises(InvalidImage):
            encode_jpeg(img.replace_blocks([bad]))

    def test_wrong_grid_shape_rejected(self):
        with pytest.raises(InvalidImage):
            encode_jpeg(gray_image(np.zeros((2, 2, 64)), 8, 8))

    def test_decode_never_returns_partial(self, small_jpeg):
        # strip the EOI marker: decoding must fail, not return an image
        assert small_jpeg.endswith(b"\xff\xd9")
        with pytest.raises(CorruptStream):
            decode_jpeg(small_jpeg[:-2])
