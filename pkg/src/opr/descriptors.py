"""Fixed-length region descriptors and the OFPF interchange format.

The built-in descriptor is a deterministic 128-dim histogram signature so
the whole pipeline runs without any learned model; externally computed
activations (any dimension, 4096 in practice) enter through OFPF files
and flow through the same code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binio import Reader, f32s, u32
from .errors import ConfigError
from .gradients import central_gradients, orientation_bins
from .proposals import Proposal, ProposalSet
from .raster import BoundingBox, RasterImage, crop, resize_bilinear

BUILTIN_DIM = 128
_PATCH = 32
_INTENSITY_BINS = 32
_ORIENT_BINS = 32

OFPF_MAGIC = b"OFPF"
OFPF_VERSION = 1


@dataclass(frozen=True)
class FeatureMatrix:
    """N x dim float32 matrix; row i describes proposal i."""

    image_id: str
    rows: np.ndarray

    def __post_init__(self):
        r = self.rows
        if r.ndim != 2 or r.dtype != np.float32:
            raise ValueError(f"rows must be a 2-D float32 array, got {r.shape} {r.dtype}")
        if not np.all(np.isfinite(r)):
            raise ValueError("feature rows must be finite")
        r.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def count(self) -> int:
        return self.rows.shape[0]


def builtin_descriptor(region_crop: RasterImage) -> np.ndarray:
    """128-dim signature of a crop: per-channel intensity histograms plus a
    magnitude-weighted gradient-orientation histogram of the luma channel.

    The crop is resized to 32x32 first, so the signature depends only on
    crop content, not on where the crop came from. Each histogram block is
    l1-normalized on its own; an all-zero gradient block stays zero.
    """
    patch = resize_bilinear(region_crop, _PATCH, _PATCH).pixels
    blocks = []
    for c in range(3):
        hist = np.bincount(
            ((patch[..., c].astype(np.intp) * _INTENSITY_BINS) >> 8).ravel(),
            minlength=_INTENSITY_BINS,
        ).astype(np.float64)
        blocks.append(hist / hist.sum())
    luma = 0.299 * patch[..., 0] + 0.587 * patch[..., 1] + 0.114 * patch[..., 2]
    gx, gy = central_gradients(luma)
    magnitude = np.hypot(gx, gy)
    obins = orientation_bins(gx, gy, _ORIENT_BINS)
    ghist = np.bincount(obins.ravel(), weights=magnitude.ravel(), minlength=_ORIENT_BINS)
    total = ghist.sum()
    if total > 0:
        ghist = ghist / total
    blocks.append(ghist)
    return np.concatenate(blocks).astype(np.float32)


def describe_regions(
    img: RasterImage,
    pset: ProposalSet,
    descriptor: str = "builtin",
    external: FeatureMatrix | None = None,
) -> FeatureMatrix:
    """Descriptor row per proposal, in proposal order.

    descriptor "builtin" computes rows from the image; "external" passes
    through a pre-computed FeatureMatrix (a ConfigError if none is given
    or its row count disagrees with the proposal count).
    """
    if descriptor == "builtin":
        if len(pset) == 0:
            rows = np.zeros((0, BUILTIN_DIM), dtype=np.float32)
        else:
            rows = np.stack([builtin_descriptor(crop(img, p.box)) for p in pset.proposals])
        return FeatureMatrix(pset.image_id, rows)
    if descriptor == "external":
        if external is None:
            raise ConfigError("external descriptor selected but no feature file supplied")
        if external.count != len(pset):
            raise ConfigError(
                f"external features carry {external.count} rows for {len(pset)} proposals"
            )
        return FeatureMatrix(pset.image_id, external.rows)
    raise ValueError(f"unknown descriptor {descriptor!r}")


# ---------------------------------------------------------------------------
# OFPF: proposals + features, bit-exact
#
# magic "OFPF" | version u32=1 | dim u32 | count u32 | count records of
# x,y,w,h u32*4, score f32, dim f32 feature values. Little-endian, no padding.


def write_ofpf(pset: ProposalSet, feats: FeatureMatrix) -> bytes:
    if feats.count != len(pset):
        raise ValueError(f"feature rows ({feats.count}) != proposals ({len(pset)})")
    parts = [OFPF_MAGIC, u32(OFPF_VERSION), u32(feats.dim), u32(feats.count)]
    for p, row in zip(pset.proposals, feats.rows):
        parts.append(u32(p.box.x) + u32(p.box.y) + u32(p.box.w) + u32(p.box.h))
        parts.append(f32s([p.score]))
        parts.append(row.tobytes())
    return b"".join(parts)


def read_ofpf(data: bytes, image_id: str = "unnamed") -> tuple[ProposalSet, FeatureMatrix]:
    """Inverse of write_ofpf. The format stores no image id; callers pass one."""
    r = Reader(data)
    r.magic(OFPF_MAGIC)
    r.expect_version(OFPF_VERSION)
    dim = r.u32("dim")
    count = r.u32("count")
    proposals = []
    rows = np.empty((count, dim), dtype=np.float32)
    for i in range(count):
        x = r.u32(f"record {i} box")
        y = r.u32(f"record {i} box")
        w = r.u32(f"record {i} box")
        h = r.u32(f"record {i} box")
        (score,) = r.f32s(1, f"record {i} score")
        rows[i] = np.frombuffer(r.take(4 * dim, f"record {i} features"), dtype="<f4")
        proposals.append(Proposal(BoundingBox(x, y, w, h), score))
    r.expect_end()
    return ProposalSet(image_id, tuple(proposals)), FeatureMatrix(image_id, rows)
