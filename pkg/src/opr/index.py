"""Exact nearest-neighbor retrieval over float or binary payloads.

A brute-force scan is all the corpora here need; l2 ranking runs on
squared distances internally and reports true l2, Hamming runs on a
byte-wise popcount table. Ties resolve to earlier insertion order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binio import Reader, f32s, u32
from .compression import BinaryCode
from .errors import FormatError

INDEX_MAGIC = b"OFPI"
INDEX_VERSION = 1

METRIC_L2 = "l2"
METRIC_HAMMING = "hamming"
_METRIC_TAGS = {METRIC_L2: 0, METRIC_HAMMING: 1}
_TAG_METRICS = {v: k for k, v in _METRIC_TAGS.items()}

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint32)


@dataclass(frozen=True)
class RankedList:
    query_id: str
    hits: tuple[tuple[str, float], ...]

    def __post_init__(self):
        distances = [d for _, d in self.hits]
        if any(a > b for a, b in zip(distances, distances[1:])):
            raise ValueError("hit distances must be non-decreasing")
        ids = [i for i, _ in self.hits]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate image ids in ranked list")


class RetrievalIndex:
    """Ordered (image_id, payload) store; payloads are homogeneous width."""

    def __init__(self, metric: str, width: int):
        if metric not in _METRIC_TAGS:
            raise ValueError(f"metric must be one of {sorted(_METRIC_TAGS)}, got {metric!r}")
        if width < 1:
            raise ValueError(f"payload width must be positive, got {width}")
        self.metric = metric
        self.width = width
        self.ids: list[str] = []
        self._id_set: set[str] = set()
        self._rows: list[np.ndarray] = []

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def payload_bytes(self) -> int:
        # storage per entry; supports the memory-footprint arithmetic
        return (self.width + 7) // 8 if self.metric == METRIC_HAMMING else 4 * self.width

    def _check_id(self, image_id: str):
        if image_id in self._id_set:
            raise ValueError(f"duplicate image id {image_id!r}")
        if not image_id or any(ch.isspace() for ch in image_id):
            raise ValueError(f"image_id must be non-empty without whitespace: {image_id!r}")

    def add_vector(self, image_id: str, vector: np.ndarray):
        if self.metric != METRIC_L2:
            raise ValueError("add_vector requires an l2 index")
        vector = np.asarray(vector, dtype=np.float32)
        if vector.shape != (self.width,):
            raise ValueError(f"expected dim {self.width}, got {vector.shape}")
        self._check_id(image_id)
        self.ids.append(image_id)
        self._id_set.add(image_id)
        self._rows.append(vector)

    def add_code(self, image_id: str, code: BinaryCode):
        if self.metric != METRIC_HAMMING:
            raise ValueError("add_code requires a hamming index")
        if code.bits != self.width:
            raise ValueError(f"expected {self.width} bits, got {code.bits}")
        self._check_id(image_id)
        self.ids.append(image_id)
        self._id_set.add(image_id)
        self._rows.append(np.frombuffer(code.payload, dtype=np.uint8))

    def matrix(self) -> np.ndarray:
        if not self._rows:
            bytes_per = (self.width + 7) // 8 if self.metric == METRIC_HAMMING else self.width
            dtype = np.uint8 if self.metric == METRIC_HAMMING else np.float32
            return np.zeros((0, bytes_per), dtype=dtype)
        return np.stack(self._rows)


def hamming_distance(a: BinaryCode, b: BinaryCode) -> int:
    """Number of differing bits (popcount of the XOR)."""
    if a.bits != b.bits:
        raise ValueError(f"bit widths differ: {a.bits} vs {b.bits}")
    xored = np.frombuffer(a.payload, dtype=np.uint8) ^ np.frombuffer(b.payload, dtype=np.uint8)
    return int(_POPCOUNT[xored].sum())


def search(index: RetrievalIndex, query, k: int, *, query_id: str = "query") -> RankedList:
    """Exact top-k under the index metric; k is capped at the corpus size."""
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if len(index) == 0:
        return RankedList(query_id, ())
    if index.metric == METRIC_L2:
        q = np.asarray(query, dtype=np.float32)
        if q.shape != (index.width,):
            raise ValueError(f"query dim {q.shape} does not match index dim {index.width}")
        delta = index.matrix().astype(np.float64) - q.astype(np.float64)
        squared = (delta * delta).sum(axis=1)
        order = np.argsort(squared, kind="stable")[:k]
        hits = tuple((index.ids[i], float(np.sqrt(squared[i]))) for i in order)
    else:
        if not isinstance(query, BinaryCode):
            raise ValueError("hamming search expects a BinaryCode query")
        if query.bits != index.width:
            raise ValueError(f"query bits {query.bits} do not match index bits {index.width}")
        q = np.frombuffer(query.payload, dtype=np.uint8)
        counts = _POPCOUNT[index.matrix() ^ q].sum(axis=1)
        order = np.argsort(counts, kind="stable")[:k]
        hits = tuple((index.ids[i], float(counts[i])) for i in order)
    return RankedList(query_id, hits)


# ---------------------------------------------------------------------------
# OFPI file: magic, version u32, metric tag u8 (0 = l2, 1 = hamming),
# width u32, count u32, then per record: id length u32, UTF-8 id, payload
# (width f32 values for l2, ceil(width/8) bytes for hamming).


def save_index(index: RetrievalIndex) -> bytes:
    parts = [
        INDEX_MAGIC,
        u32(INDEX_VERSION),
        bytes([_METRIC_TAGS[index.metric]]),
        u32(index.width),
        u32(len(index)),
    ]
    for image_id, row in zip(index.ids, index._rows):
        encoded = image_id.encode("utf-8")
        parts.append(u32(len(encoded)))
        parts.append(encoded)
        parts.append(row.tobytes() if index.metric == METRIC_HAMMING else f32s(row))
    return b"".join(parts)


def load_index(data: bytes) -> RetrievalIndex:
    r = Reader(data)
    r.magic(INDEX_MAGIC)
    r.expect_version(INDEX_VERSION)
    tag = r.take(1, "metric tag")[0]
    if tag not in _TAG_METRICS:
        raise FormatError(f"unknown metric tag {tag}", r.pos - 1)
    metric = _TAG_METRICS[tag]
    width = r.u32("width")
    count = r.u32("count")
    index = RetrievalIndex(metric, width)
    for i in range(count):
        id_len = r.u32(f"record {i} id length")
        image_id = r.take(id_len, f"record {i} id").decode("utf-8")
        if metric == METRIC_HAMMING:
            payload = r.take((width + 7) // 8, f"record {i} payload")
            index.add_code(image_id, BinaryCode(width, payload))
        else:
            values = np.array(r.f32s(width, f"record {i} payload"), dtype=np.float32)
            index.add_vector(image_id, values)
    r.expect_end()
    return index


# ---------------------------------------------------------------------------
# Search results as text: `rank image_id distance`, rank starting at 1.


def format_results(ranked: RankedList) -> str:
    return "".join(
        f"{rank} {image_id} {distance!r}\n"
        for rank, (image_id, distance) in enumerate(ranked.hits, 1)
    )


def parse_results(text: str, query_id: str) -> RankedList:
    hits = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 3 fields, got {len(parts)}")
        rank, image_id, distance = parts
        if int(rank) != len(hits) + 1:
            raise ValueError(f"line {lineno}: rank {rank} out of order")
        hits.append((image_id, float(distance)))
    return RankedList(query_id, tuple(hits))
