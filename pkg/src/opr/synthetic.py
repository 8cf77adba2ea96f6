"""Deterministic synthetic scenes: a desk-scale retrieval corpus.

Twelve 128x128 images in four groups of three. Within a group the same
two objects appear translated, rearranged, and rescaled over a tiled
background whose shades are drawn around a shared group color, so group
membership survives layout changes. The shade jitter keeps segmentation
honest: each image yields well over a hundred initial regions rather
than a handful.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evaluation import format_ground_truth
from .raster import RasterImage, encode_ppm

SIZE = 128
TILE = 8
_SHADE_OFFSETS = (-16, -8, 0, 8, 16)


@dataclass(frozen=True)
class Rect:
    x: int
    y: int
    w: int
    h: int
    color: tuple[int, int, int]
    stripe_color: tuple[int, int, int] | None = None
    stripe_period: int = 4

    def scaled(self, factor: float) -> "Rect":
        return Rect(
            self.x,
            self.y,
            max(4, int(round(self.w * factor))),
            max(4, int(round(self.h * factor))),
            self.color,
            self.stripe_color,
            self.stripe_period,
        )

    def at(self, x: int, y: int) -> "Rect":
        return Rect(x, y, self.w, self.h, self.color, self.stripe_color, self.stripe_period)


def tiled_background(base: tuple[int, int, int], key: str, size: int = SIZE) -> np.ndarray:
    """Background of TILE x TILE squares whose shades jitter around `base`,
    drawn deterministically from `key`."""
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:16], "big"))
    tiles = size // TILE
    offsets = rng.choice(_SHADE_OFFSETS, size=(tiles, tiles))
    shades = np.clip(np.array(base)[None, None, :] + offsets[..., None], 0, 255)
    return np.repeat(np.repeat(shades, TILE, axis=0), TILE, axis=1).astype(np.uint8)


def paint_scene(
    rects: list[Rect],
    *,
    background: tuple[int, int, int] | np.ndarray,
    size: int = SIZE,
) -> RasterImage:
    """Fill the background (a solid color or a prepared pixel array), then
    draw rectangles in order; striped rectangles alternate colors in
    vertical bands of stripe_period columns."""
    pixels = np.empty((size, size, 3), dtype=np.uint8)
    pixels[:] = background
    for r in rects:
        if r.x + r.w > size or r.y + r.h > size:
            raise ValueError(f"rect {r} exceeds {size}x{size} scene")
        patch = np.empty((r.h, r.w, 3), dtype=np.uint8)
        patch[:] = r.color
        if r.stripe_color is not None:
            columns = (np.arange(r.w) // r.stripe_period) % 2 == 1
            patch[:, columns] = r.stripe_color
        pixels[r.y : r.y + r.h, r.x : r.x + r.w] = patch
    return RasterImage(pixels)


_GROUPS: dict[str, dict] = {
    "g0": {
        "background": (120, 120, 120),
        "objects": (
            Rect(0, 0, 28, 20, (200, 40, 40)),
            Rect(0, 0, 32, 24, (40, 60, 200), stripe_color=(230, 220, 60)),
        ),
    },
    "g1": {
        "background": (60, 80, 140),
        "objects": (
            Rect(0, 0, 30, 22, (220, 150, 40)),
            Rect(0, 0, 28, 26, (40, 200, 90), stripe_color=(245, 245, 245)),
        ),
    },
    "g2": {
        "background": (140, 70, 70),
        "objects": (
            Rect(0, 0, 26, 24, (30, 220, 220)),
            Rect(0, 0, 32, 20, (235, 235, 235), stripe_color=(30, 30, 30)),
        ),
    },
    "g3": {
        "background": (70, 140, 80),
        "objects": (
            Rect(0, 0, 28, 22, (200, 40, 200)),
            Rect(0, 0, 30, 24, (250, 250, 120), stripe_color=(90, 60, 20)),
        ),
    },
}

# per-variant object placements: base, translated, rearranged + rescaled
_PLACEMENTS = {
    "a": lambda first, second: [first.at(18, 20), second.at(74, 70)],
    "b": lambda first, second: [first.at(34, 46), second.at(58, 10)],
    "c": lambda first, second: [
        second.scaled(1.25).at(16, 18),
        first.scaled(0.8).at(78, 74),
    ],
}


def corpus_images() -> list[tuple[str, RasterImage]]:
    images = []
    for group_id, spec in _GROUPS.items():
        first, second = spec["objects"]
        for variant, place in _PLACEMENTS.items():
            image_id = f"{group_id}{variant}"
            scene = paint_scene(
                place(first, second),
                background=tiled_background(spec["background"], image_id),
            )
            images.append((image_id, scene))
    return images


def corpus_ground_truth() -> dict[str, set[str]]:
    gt: dict[str, set[str]] = {}
    for group_id in _GROUPS:
        members = {f"{group_id}{v}" for v in _PLACEMENTS}
        for member in sorted(members):
            gt[member] = set(members)
    return gt


def rearrangement_pair() -> tuple[RasterImage, RasterImage]:
    """Two scenes with the same two rectangles at swapped positions on a
    uniform background. The positions sit at different phases of the
    descriptor's downsampling grid, so a whole-image signature shifts
    while per-object crops stay pixel-identical."""
    striped = Rect(0, 0, 33, 24, (220, 50, 40), stripe_color=(240, 210, 60))
    solid = Rect(0, 0, 32, 24, (50, 80, 210))
    scene_a = paint_scene(
        [striped.at(18, 22), solid.at(79, 73)], background=(90, 90, 90)
    )
    scene_b = paint_scene(
        [striped.at(79, 73), solid.at(18, 22)], background=(90, 90, 90)
    )
    return scene_a, scene_b


def write_corpus(directory: str | Path) -> list[Path]:
    """Write the 12 PPM images plus groups.tsv; returns the paths written."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for image_id, image in corpus_images():
        path = directory / f"{image_id}.ppm"
        path.write_bytes(encode_ppm(image))
        written.append(path)
    gt_path = directory / "groups.tsv"
    gt_path.write_text(format_ground_truth(corpus_ground_truth()), encoding="utf-8")
    written.append(gt_path)
    return written
