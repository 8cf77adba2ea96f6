import numpy as np
import pytest

from opr import BoundingBox, ConfigError, FormatError, RasterImage
from opr.descriptors import (
    BUILTIN_DIM,
    FeatureMatrix,
    builtin_descriptor,
    describe_regions,
    read_ofpf,
    write_ofpf,
)
from opr.proposals import Proposal, ProposalSet
from opr.raster import crop


def image_from(array) -> RasterImage:
    return RasterImage(np.asarray(array, dtype=np.uint8))


class TestBuiltinDescriptor:
    def test_constant_gray_crop(self):
        d = builtin_descriptor(image_from(np.full((10, 14, 3), 77)))
        assert d.shape == (BUILTIN_DIM,)
        for c in range(3):
            block = d[c * 32 : (c + 1) * 32]
            assert block[77 // 8] == pytest.approx(1.0)
            assert block.sum() == pytest.approx(1.0)
        assert np.all(d[96:] == 0.0)

    def test_half_black_half_white_split(self):
        pixels = np.zeros((32, 32, 3), dtype=np.uint8)
        pixels[:, 16:] = 255
        d = builtin_descriptor(image_from(pixels))
        for c in range(3):
            block = d[c * 32 : (c + 1) * 32]
            assert block[0] == pytest.approx(0.5)
            assert block[31] == pytest.approx(0.5)
            assert block.sum() == pytest.approx(1.0)
        # the vertical edge leaves weight in the gradient block
        assert d[96:].sum() == pytest.approx(1.0, abs=1e-6)

    def test_depends_only_on_crop_content(self):
        rng = np.random.default_rng(40)
        patch = rng.integers(0, 256, size=(9, 7, 3), dtype=np.uint8)
        canvas_a = np.zeros((40, 40, 3), dtype=np.uint8)
        canvas_b = rng.integers(0, 256, size=(64, 50, 3), dtype=np.uint8)
        canvas_a[5 : 5 + 9, 7 : 7 + 7] = patch
        canvas_b[20 : 20 + 9, 30 : 30 + 7] = patch
        da = builtin_descriptor(crop(image_from(canvas_a), BoundingBox(7, 5, 7, 9)))
        db = builtin_descriptor(crop(image_from(canvas_b), BoundingBox(30, 20, 7, 9)))
        assert np.array_equal(da, db)

    def test_blocks_normalized_or_zero(self):
        rng = np.random.default_rng(41)
        for _ in range(20):
            w, h = rng.integers(1, 40, 2)
            img = image_from(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))
            d = builtin_descriptor(img)
            for start in (0, 32, 64, 96):
                block_sum = d[start : start + 32].sum()
                assert block_sum == pytest.approx(1.0, abs=1e-6) or block_sum == 0.0
            assert np.all(np.isfinite(d))


def proposals_for(img: RasterImage, boxes) -> ProposalSet:
    n = len(boxes)
    return ProposalSet(
        "img", tuple(Proposal(b, (n - i) / n) for i, b in enumerate(boxes))
    )


class TestDescribeRegions:
    def test_single_full_image_proposal(self):
        rng = np.random.default_rng(42)
        img = image_from(rng.integers(0, 256, size=(20, 30, 3), dtype=np.uint8))
        pset = proposals_for(img, [img.full_box()])
        feats = describe_regions(img, pset)
        assert feats.count == 1
        assert np.array_equal(feats.rows[0], builtin_descriptor(img))

    def test_duplicated_proposals_duplicate_rows(self):
        rng = np.random.default_rng(43)
        img = image_from(rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8))
        box = BoundingBox(2, 3, 8, 9)
        feats = describe_regions(img, proposals_for(img, [box, box]))
        assert np.array_equal(feats.rows[0], feats.rows[1])

    def test_rows_match_independent_calls(self):
        rng = np.random.default_rng(44)
        img = image_from(rng.integers(0, 256, size=(24, 24, 3), dtype=np.uint8))
        boxes = [BoundingBox(0, 0, 10, 10), BoundingBox(5, 5, 12, 12), BoundingBox(1, 9, 20, 8)]
        feats = describe_regions(img, proposals_for(img, boxes))
        for i, box in enumerate(boxes):
            assert np.array_equal(feats.rows[i], builtin_descriptor(crop(img, box)))

    def test_external_requires_features(self):
        img = image_from(np.zeros((4, 4, 3), dtype=np.uint8))
        pset = proposals_for(img, [img.full_box()])
        with pytest.raises(ConfigError):
            describe_regions(img, pset, descriptor="external")

    def test_external_count_mismatch(self):
        img = image_from(np.zeros((4, 4, 3), dtype=np.uint8))
        pset = proposals_for(img, [img.full_box()])
        wrong = FeatureMatrix("img", np.zeros((2, 8), dtype=np.float32))
        with pytest.raises(ConfigError):
            describe_regions(img, pset, descriptor="external", external=wrong)

    def test_external_passthrough(self):
        img = image_from(np.zeros((4, 4, 3), dtype=np.uint8))
        pset = proposals_for(img, [img.full_box()])
        ext = FeatureMatrix("img", np.arange(8, dtype=np.float32).reshape(1, 8))
        feats = describe_regions(img, pset, descriptor="external", external=ext)
        assert np.array_equal(feats.rows, ext.rows)


def small_fixture():
    pset = ProposalSet(
        "fix",
        (
            Proposal(BoundingBox(0, 0, 4, 4), 0.75),
            Proposal(BoundingBox(1, 2, 3, 2), 0.25),
        ),
    )
    rows = np.array([[1.5, -2.0, 0.0, 4.25], [0.5, 0.5, -0.5, 1e-7]], dtype=np.float32)
    return pset, FeatureMatrix("fix", rows)


class TestOfpf:
    def test_round_trip_byte_identical(self):
        pset, feats = small_fixture()
        payload = write_ofpf(pset, feats)
        pset2, feats2 = read_ofpf(payload, image_id="fix")
        assert write_ofpf(pset2, feats2) == payload
        assert np.array_equal(feats2.rows, feats.rows)
        assert [p.box for p in pset2.proposals] == [p.box for p in pset.proposals]

    def test_empty_set(self):
        pset = ProposalSet("fix", ())
        feats = FeatureMatrix("fix", np.zeros((0, 5), dtype=np.float32))
        pset2, feats2 = read_ofpf(write_ofpf(pset, feats), image_id="fix")
        assert len(pset2) == 0
        assert feats2.dim == 5

    def test_truncated_record(self):
        pset, feats = small_fixture()
        payload = write_ofpf(pset, feats)
        with pytest.raises(FormatError) as exc:
            read_ofpf(payload[:-3])
        assert "expected" in str(exc.value) and "got" in str(exc.value)

    def test_bad_magic(self):
        with pytest.raises(FormatError) as exc:
            read_ofpf(b"NOPE" + b"\x00" * 12)
        assert exc.value.offset == 0

    def test_version_mismatch(self):
        pset, feats = small_fixture()
        payload = bytearray(write_ofpf(pset, feats))
        payload[4] = 9
        with pytest.raises(FormatError):
            read_ofpf(bytes(payload))

    def test_trailing_bytes_rejected(self):
        pset, feats = small_fixture()
        with pytest.raises(FormatError):
            read_ofpf(write_ofpf(pset, feats) + b"\x00")

    def test_round_trip_random_payload(self):
        rng = np.random.default_rng(45)
        for count, dim in [(1, 1), (3, 17), (10, 4)]:
            rows = rng.normal(scale=100.0, size=(count, dim)).astype(np.float32)
            boxes = [
                BoundingBox(int(rng.integers(0, 9)), int(rng.integers(0, 9)),
                            int(rng.integers(1, 9)), int(rng.integers(1, 9)))
                for _ in range(count)
            ]
            scores = np.sort(rng.random(count).astype(np.float32))[::-1]
            pset = ProposalSet("r", tuple(Proposal(b, float(s)) for b, s in zip(boxes, scores)))
            feats = FeatureMatrix("r", rows)
            pset2, feats2 = read_ofpf(write_ofpf(pset, feats), image_id="r")
            assert np.array_equal(feats2.rows, rows)
            assert pset2 == pset

    def test_count_mismatch_rejected(self):
        pset, _ = small_fixture()
        with pytest.raises(ValueError):
            write_ofpf(pset, FeatureMatrix("fix", np.zeros((3, 4), dtype=np.float32)))
