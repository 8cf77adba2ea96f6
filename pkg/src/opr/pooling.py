"""Orderless aggregation of region descriptors into one image vector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptors import FeatureMatrix, read_ofpf, write_ofpf
from .errors import EmptyInputError
from .proposals import Proposal, ProposalSet
from .raster import BoundingBox


@dataclass(frozen=True)
class PooledRepresentation:
    image_id: str
    vector: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        v = self.vector
        if v.ndim != 1 or v.dtype != np.float32:
            raise ValueError(f"vector must be 1-D float32, got {v.shape} {v.dtype}")
        if not np.all(np.isfinite(v)):
            raise ValueError("pooled vector must be finite")
        v.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


def max_pool(feats: FeatureMatrix) -> PooledRepresentation:
    """Component-wise maximum over all rows. Zero rows is a pipeline fault:
    a silent zero vector would rank equally against everything."""
    if feats.count == 0:
        raise EmptyInputError(f"no descriptor rows to pool for {feats.image_id!r}")
    return PooledRepresentation(feats.image_id, feats.rows.max(axis=0))


def l2_normalize(rep: PooledRepresentation) -> PooledRepresentation:
    """Scale to unit l2 norm; an all-zero vector passes through unflagged."""
    norm = float(np.linalg.norm(rep.vector.astype(np.float64)))
    if norm == 0.0:
        return PooledRepresentation(rep.image_id, rep.vector, normalized=False)
    scaled = (rep.vector.astype(np.float64) / norm).astype(np.float32)
    return PooledRepresentation(rep.image_id, scaled, normalized=True)


def write_representation(rep: PooledRepresentation, box: BoundingBox) -> bytes:
    """Persist as an OFPF with a single record; `box` records the pooled extent."""
    pset = ProposalSet(rep.image_id, (Proposal(box, 1.0),))
    feats = FeatureMatrix(rep.image_id, rep.vector[np.newaxis, :].copy())
    return write_ofpf(pset, feats)


def read_representation(data: bytes, image_id: str = "unnamed") -> PooledRepresentation:
    pset, feats = read_ofpf(data, image_id)
    if feats.count != 1:
        raise EmptyInputError(
            f"representation file must hold exactly one record, found {feats.count}"
        )
    return PooledRepresentation(image_id, feats.rows[0].copy())
