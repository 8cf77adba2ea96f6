from pathlib import Path

import numpy as np
import pytest

from opr.synthetic import (
    Rect,
    corpus_ground_truth,
    corpus_images,
    paint_scene,
    rearrangement_pair,
    tiled_background,
    write_corpus,
)

DATA = Path(__file__).parent / "data" / "corpus"


def test_committed_corpus_matches_generator(tmp_path):
    written = write_corpus(tmp_path)
    assert len(written) == 13
    for path in written:
        committed = DATA / path.name
        assert committed.exists(), f"missing committed fixture {path.name}"
        assert committed.read_bytes() == path.read_bytes(), f"{path.name} drifted"


def test_corpus_structure():
    images = corpus_images()
    assert len(images) == 12
    for image_id, img in images:
        assert img.width == 128 and img.height == 128
    gt = corpus_ground_truth()
    assert len(gt) == 12
    for query, relevant in gt.items():
        assert query in relevant
        assert len(relevant) == 3
        assert {r[:2] for r in relevant} == {query[:2]}


def test_paint_scene_stripes_and_bounds():
    scene = paint_scene(
        [Rect(2, 3, 8, 4, (10, 10, 10), stripe_color=(200, 200, 200), stripe_period=2)],
        background=(0, 0, 0),
        size=16,
    )
    row = scene.pixels[3]
    assert tuple(row[2]) == (10, 10, 10)
    assert tuple(row[4]) == (200, 200, 200)
    assert tuple(row[6]) == (10, 10, 10)
    with pytest.raises(ValueError):
        paint_scene([Rect(10, 10, 10, 10, (1, 1, 1))], background=(0, 0, 0), size=16)


def test_tiled_background_deterministic():
    a = tiled_background((100, 100, 100), "imgX")
    b = tiled_background((100, 100, 100), "imgX")
    c = tiled_background((100, 100, 100), "imgY")
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_rearrangement_pair_preserves_pixel_multiset():
    a, b = rearrangement_pair()
    assert a.width == b.width == 128
    flat_a = np.sort(a.pixels.reshape(-1, 3).view([("r", "u1"), ("g", "u1"), ("b", "u1")]), axis=0)
    flat_b = np.sort(b.pixels.reshape(-1, 3).view([("r", "u1"), ("g", "u1"), ("b", "u1")]), axis=0)
    assert np.array_equal(flat_a, flat_b)
    assert not np.array_equal(a.pixels, b.pixels)
