"""Threshold split/merge: worked examples, the sign-matrix oracle, exact
round trips, and pixel-domain reconstruction under linear transforms."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from p3photo.core import (SplitPair, correction_term, merge_block,
                          merge_image, reconstruct_transformed, split_block,
                          split_image)
from p3photo.errors import InconsistentPair, InvalidImage
from p3photo.jpeg import decode_jpeg
from p3photo.metrics import psnr
from p3photo.pixels import (Crop, Resize, TransformSpec, apply_transform,
                            decode_to_pixels)

from helpers import matrix_merge, random_quantized_image, sparse_quantized_image


class TestSplitBlock:
    def test_negative_above_threshold(self):
        block = np.zeros(64)
        block[5] = -25
        pub, sec = split_block(block, 20)
        assert pub[5] == 20 and sec[5] == -5

    def test_positive_above_threshold(self):
        block = np.zeros(64)
        block[9] = 31
        pub, sec = split_block(block, 20)
        assert pub[9] == 20 and sec[9] == 11

    def test_below_threshold_passthrough(self):
        block = np.zeros(64)
        block[3] = 10
        pub, sec = split_block(block, 20)
        assert pub[3] == 10 and sec[3] == 0

    def test_dc_extraction(self):
        block = np.zeros(64)
        block[0] = -31
        pub, sec = split_block(block, 20)
        assert pub[0] == 0 and sec[0] == -31

    def test_exact_threshold_stays_public(self):
        block = np.zeros(64)
        block[7] = 20
        block[8] = -20
        pub, sec = split_block(block, 20)
        assert pub[7] == 20 and sec[7] == 0
        assert pub[8] == -20 and sec[8] == 0

    def test_threshold_validation(self):
        with pytest.raises(InvalidImage):
            split_block(np.zeros(64), 0)
        with pytest.raises(InvalidImage):
            split_block(np.zeros(64), 101)


class TestMergeBlock:
    def test_negative_branch(self):
        pub = np.zeros(64)
        sec = np.zeros(64)
        pub[5], sec[5] = 20, -5
        assert merge_block(pub, sec, 20)[5] == -25

    def test_no_correction_branch(self):
        pub = np.zeros(64)
        pub[3] = 10
        assert merge_block(pub, np.zeros(64), 20)[3] == 10

    def test_inconsistent_pair_detected(self):
        pub = np.zeros(64)
        sec = np.zeros(64)
        sec[5] = -3          # secret present but public is not the threshold
        pub[5] = 7
        with pytest.raises(InconsistentPair):
            merge_block(pub, sec, 20)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 100), st.integers(0, 2 ** 32 - 1))
    def test_matrix_form_matches_branch_form(self, threshold, seed):
        rng = np.random.default_rng(seed)
        block = rng.integers(-1023, 1024, 64)
        pub, sec = split_block(block, threshold)
        merged = merge_block(pub, sec, threshold)
        oracle = matrix_merge(pub, sec, threshold)
        # the matrix form reconstructs the ACs; the DC travels secretly
        assert np.array_equal(merged[1:], oracle[1:])
        assert merged[0] == sec[0]
        assert np.array_equal(merged, block)

    def test_matrix_form_bulk_equivalence(self):
        # large-volume check of the two formulations
        rng = np.random.default_rng(31337)
        n = 100_000
        blocks = rng.integers(-1023, 1024, (n, 64))
        t = 20
        mag = np.abs(blocks[:, 1:])
        above = mag > t
        pub = np.concatenate([np.zeros((n, 1), np.int64),
                              np.where(above, t, blocks[:, 1:])], axis=1)
        sec = np.concatenate([blocks[:, :1],
                              np.where(above, np.sign(blocks[:, 1:]) * (mag - t), 0)],
                             axis=1)
        branch = pub + sec + np.where(sec < 0, -2 * t, 0)
        branch[:, 0] = sec[:, 0]
        oracle = matrix_merge(pub, sec, t)
        assert np.array_equal(branch[:, 1:], oracle[:, 1:])
        assert np.array_equal(branch, blocks)


class TestImageRoundTrip:
    @pytest.mark.parametrize("threshold", [1, 5, 20, 100])
    def test_random_images(self, threshold):
        rng = np.random.default_rng(threshold)
        img = random_quantized_image(rng, layout="420")
        pair = split_image(img, threshold)
        pair.validate()
        assert merge_image(pair) == img

    def test_zero_image(self):
        rng = np.random.default_rng(0)
        img = random_quantized_image(rng, max_ac=0, layout="gray")
        img = img.replace_blocks([np.zeros_like(b) for b in img.blocks])
        pair = split_image(img, 10)
        assert all(np.all(b == 0) for b in pair.public.blocks)
        assert all(np.all(b == 0) for b in pair.secret.blocks)
        assert merge_image(pair) == img

    def test_real_photo_all_thresholds(self, medium_jpeg):
        img = decode_jpeg(medium_jpeg)
        for t in (1, 5, 10, 15, 20, 35, 50, 100):
            pair = split_image(img, t)
            assert merge_image(pair) == img

    def test_public_invariants(self, small_jpeg):
        img = decode_jpeg(small_jpeg)
        for t in (1, 5, 10, 15, 20):
            pair = split_image(img, t)
            for pub, sec, src in zip(pair.public.blocks, pair.secret.blocks,
                                     img.blocks):
                assert np.all(pub[..., 0] == 0)          # DC hiding
                assert np.abs(pub[..., 1:]).max() <= t    # clipping
                above = np.abs(src[..., 1:]) > t
                assert np.all(pub[..., 1:][above] == t)   # sign hiding
                assert np.array_equal(sec[..., 0], src[..., 0])
                marked = sec[..., 1:] != 0
                assert np.array_equal(marked, above)

    def test_merge_detects_tampering(self, small_jpeg):
        img = decode_jpeg(small_jpeg)
        pair = split_image(img, 10)
        pub = [b.copy() for b in pair.public.blocks]
        sec = pair.secret.blocks
        rows, cols, ks = np.nonzero(sec[0][..., 1:])
        assert rows.size, "fixture must have above-threshold positions"
        pub[0][rows[0], cols[0], ks[0] + 1] = 3  # no longer the threshold value
        bad = SplitPair(pair.public.replace_blocks(pub), pair.secret, 10)
        with pytest.raises(InconsistentPair):
            merge_image(bad)


class TestCorrectionTerm:
    def test_values(self):
        rng = np.random.default_rng(5)
        img = sparse_quantized_image(rng, layout="420")
        t = 20
        pair = split_image(img, t)
        corr = correction_term(pair.secret, t)
        for c, s in zip(corr.blocks, pair.secret.blocks):
            assert np.all(c[..., 0] == 0)
            expected = np.where(s[..., 1:] < 0, -2 * t, 0)
            assert np.array_equal(c[..., 1:], expected)
            assert set(np.unique(c)) <= {0, -2 * t}

    def test_single_position(self):
        block = np.zeros(64)
        block[11] = -25
        pub, sec = split_block(block, 20)
        corr = np.where(sec < 0, -40, 0)
        corr[0] = 0
        assert corr[11] == -40

    def test_all_nonnegative_secret_gives_zero_term(self):
        rng = np.random.default_rng(6)
        img = random_quantized_image(rng, max_ac=5, layout="gray")
        blocks = [np.abs(b) for b in img.blocks]
        img = img.replace_blocks(blocks)
        pair = split_image(img, 3)
        corr = correction_term(pair.secret, 3)
        assert all(np.all(c == 0) for c in corr.blocks)

    def test_coefficient_identity(self):
        # public + secret + correction reproduces the source, coefficient-wise
        rng = np.random.default_rng(7)
        img = random_quantized_image(rng, layout="444")
        t = 15
        pair = split_image(img, t)
        corr = correction_term(pair.secret, t)
        for pub, sec, c, src in zip(pair.public.blocks, pair.secret.blocks,
                                    corr.blocks, img.blocks):
            total = pub.astype(np.int64) + sec + c
            total[..., 0] = sec[..., 0]
            assert np.array_equal(total, src)

    def test_locality(self, small_jpeg):
        # the term must not depend on the public part at all
        img = decode_jpeg(small_jpeg)
        pair = split_image(img, 10)
        before = correction_term(pair.secret, 10)
        zeroed = pair.public.replace_blocks(
            [np.zeros_like(b) for b in pair.public.blocks])
        del zeroed
        after = correction_term(pair.secret, 10)
        assert before == after


class TestReconstructTransformed:
    def test_identity_matches_exact_merge(self, small_jpeg):
        img = decode_jpeg(small_jpeg)
        for t in (5, 20):
            pair = split_image(img, t)
            pub_pix = decode_to_pixels(pair.public)
            recon = reconstruct_transformed(pub_pix, pair.secret, t,
                                            TransformSpec.identity())
            exact = decode_to_pixels(merge_image(pair))
            for a, b in zip(recon.planes, exact.planes):
                assert np.abs(a - b).max() <= 1

    def test_block_aligned_crop_is_exact(self, small_jpeg):
        img = decode_jpeg(small_jpeg)
        t = 10
        pair = split_image(img, t)
        spec = TransformSpec((Crop(16, 8, 64, 64),))
        pub_crop = apply_transform(decode_to_pixels(pair.public), spec)
        recon = reconstruct_transformed(pub_crop.rounded(), pair.secret, t, spec)
        full = decode_to_pixels(merge_image(pair))
        reference = apply_transform(full, spec)
        for a, b in zip(recon.planes, reference.planes):
            assert np.abs(a - b).max() <= 1

    def test_bilinear_resize_reconstruction_quality(self, corpus_paths):
        t = 10
        vals = []
        for path in corpus_paths[:4]:
            img = decode_jpeg(path.read_bytes())
            pair = split_image(img, t)
            spec = TransformSpec((Resize(130, 130, "bilinear"),))
            moved = apply_transform(decode_to_pixels(pair.public), spec).rounded()
            recon = reconstruct_transformed(moved, pair.secret, t, spec)
            reference = apply_transform(decode_to_pixels(img), spec)
            vals.append(psnr(recon, reference))
        assert np.mean(vals) >= 45.0

    def test_transform_commutes_for_each_filter(self, small_jpeg):
        img = decode_jpeg(small_jpeg)
        t = 10
        pair = split_image(img, t)
        pub_pix = decode_to_pixels(pair.public)
        full = decode_to_pixels(merge_image(pair))
        for filt in ("nearest", "bilinear", "box"):
            spec = TransformSpec((Resize(80, 60, filt),))
            moved = apply_transform(pub_pix, spec).rounded()
            recon = reconstruct_transformed(moved, pair.secret, t, spec)
            reference = apply_transform(full, spec)
            assert psnr(recon, reference) >= 45.0

    def test_crop_commutation_psnr_floor(self, small_jpeg):
        img = decode_jpeg(small_jpeg)
        t = 20
        pair = split_image(img, t)
        spec = TransformSpec((Crop(8, 8, 96, 96),))
        moved = apply_transform(decode_to_pixels(pair.public), spec).rounded()
        recon = reconstruct_transformed(moved, pair.secret, t, spec)
        reference = apply_transform(decode_to_pixels(merge_image(pair)), spec)
        assert psnr(recon, reference) >= 50.0
