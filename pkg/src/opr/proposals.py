"""Class-agnostic region proposals.

Pipeline: graph-based over-segmentation of the pixel grid, then greedy
hierarchical grouping of adjacent regions by color/texture/size/fill
similarity. Every region ever formed contributes one candidate box.
Scores combine merge depth with a seeded uniform draw, so runs are
bit-reproducible for a fixed (seed, image_id) pair.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .gradients import central_gradients, orientation_bins
from .raster import BoundingBox, RasterImage

COLOR_BINS_PER_CHANNEL = 25
TEXTURE_ORIENTATIONS = 8
DEFAULT_K = 100.0
DEFAULT_MIN_SIZE = 50
DEFAULT_NMS_IOU = 0.9
DEFAULT_TOP_N = 500


@dataclass(frozen=True)
class SegmentLabelMap:
    """Dense per-pixel segment ids, ids in [0, segment_count)."""

    width: int
    height: int
    labels: np.ndarray
    segment_count: int

    def __post_init__(self):
        if self.labels.shape != (self.height, self.width):
            raise ValueError("label map shape mismatch")
        self.labels.flags.writeable = False


@dataclass(frozen=True)
class Proposal:
    box: BoundingBox
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class ProposalSet:
    """Proposals for one image, ordered by non-increasing score."""

    image_id: str
    proposals: tuple[Proposal, ...]

    def __post_init__(self):
        if any(ch.isspace() for ch in self.image_id) or not self.image_id:
            raise ValueError(f"image_id must be non-empty without whitespace: {self.image_id!r}")
        object.__setattr__(self, "proposals", tuple(self.proposals))
        scores = [p.score for p in self.proposals]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("proposals must be sorted by non-increasing score")

    def __len__(self) -> int:
        return len(self.proposals)


@dataclass
class RegionNode:
    """Grouping state for one region: size, extent, appearance histograms.

    Histograms are l1-normalized over all bins (75 color bins = 25 per HSV
    channel; 24 texture bins = 8 orientations per RGB channel).
    """

    pixel_count: int
    box: BoundingBox
    color_hist: np.ndarray = field(repr=False)
    texture_hist: np.ndarray = field(repr=False)


# ---------------------------------------------------------------------------
# Graph-based segmentation


def _grid_edges(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    # 8-connectivity, each undirected edge once: east, south, south-east, south-west.
    idx = np.arange(h * w, dtype=np.intp).reshape(h, w)
    pairs = [
        (idx[:, :-1], idx[:, 1:]),
        (idx[:-1, :], idx[1:, :]),
        (idx[:-1, :-1], idx[1:, 1:]),
        (idx[:-1, 1:], idx[1:, :-1]),
    ]
    src = np.concatenate([a.ravel() for a, _ in pairs])
    dst = np.concatenate([b.ravel() for _, b in pairs])
    return src, dst


class _UnionFind:
    __slots__ = ("parent", "rank", "size", "count")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n
        self.size = [1] * n
        self.count = n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> int:
        if self.rank[a] < self.rank[b]:
            a, b = b, a
        self.parent[b] = a
        self.size[a] += self.size[b]
        if self.rank[a] == self.rank[b]:
            self.rank[a] += 1
        self.count -= 1
        return a


def felzenszwalb_segment(img: RasterImage, k: float = DEFAULT_K, min_size: int = DEFAULT_MIN_SIZE) -> SegmentLabelMap:
    """Segment the 8-connected pixel grid by the adaptive-threshold merging rule.

    Edges are weighted by Euclidean RGB distance and processed in
    non-decreasing weight order; two components merge when the edge weight
    does not exceed either component's internal difference plus k/|C|.
    A final pass over the same edge order folds components smaller than
    min_size into their most similar (lowest connecting weight) neighbor.
    """
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if min_size < 1:
        raise ValueError(f"min_size must be at least 1, got {min_size}")
    h, w = img.height, img.width
    n = h * w
    flat = img.pixels.reshape(n, 3).astype(np.float64)
    src, dst = _grid_edges(h, w)
    weights = np.sqrt(((flat[src] - flat[dst]) ** 2).sum(axis=1))
    order = np.argsort(weights, kind="stable")

    src_l = src.tolist()
    dst_l = dst.tolist()
    w_l = weights.tolist()
    order_l = order.tolist()

    uf = _UnionFind(n)
    threshold = [float(k)] * n
    for e in order_l:
        a = uf.find(src_l[e])
        b = uf.find(dst_l[e])
        if a == b:
            continue
        wgt = w_l[e]
        if wgt <= threshold[a] and wgt <= threshold[b]:
            root = uf.union(a, b)
            threshold[root] = wgt + k / uf.size[root]

    for e in order_l:
        a = uf.find(src_l[e])
        b = uf.find(dst_l[e])
        if a != b and (uf.size[a] < min_size or uf.size[b] < min_size):
            uf.union(a, b)

    labels = np.empty(n, dtype=np.int32)
    remap: dict[int, int] = {}
    for i in range(n):
        root = uf.find(i)
        label = remap.get(root)
        if label is None:
            label = len(remap)
            remap[root] = label
        labels[i] = label
    return SegmentLabelMap(w, h, labels.reshape(h, w), len(remap))


# ---------------------------------------------------------------------------
# Region appearance


def _rgb_to_hsv(pixels: np.ndarray) -> np.ndarray:
    rgb = pixels.astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    delta = maxc - minc
    safe_max = np.where(maxc > 0, maxc, 1.0)
    s = np.where(maxc > 0, delta / safe_max, 0.0)
    safe_delta = np.where(delta > 0, delta, 1.0)
    rc = (maxc - r) / safe_delta
    gc = (maxc - g) / safe_delta
    bc = (maxc - b) / safe_delta
    hue = np.select(
        [delta == 0, r == maxc, g == maxc],
        [0.0, bc - gc, 2.0 + rc - bc],
        default=4.0 + gc - rc,
    )
    hue = (hue / 6.0) % 1.0
    return np.stack([hue, s, maxc], axis=-1)


def build_region_nodes(img: RasterImage, seg: SegmentLabelMap) -> list[RegionNode]:
    """Per-segment size, bounding box, and normalized appearance histograms."""
    labels = seg.labels.ravel().astype(np.intp)
    count = seg.segment_count
    sizes = np.bincount(labels, minlength=count)

    xs = np.tile(np.arange(seg.width, dtype=np.intp), seg.height)
    ys = np.repeat(np.arange(seg.height, dtype=np.intp), seg.width)
    min_x = np.full(count, seg.width, dtype=np.intp)
    min_y = np.full(count, seg.height, dtype=np.intp)
    max_x = np.full(count, -1, dtype=np.intp)
    max_y = np.full(count, -1, dtype=np.intp)
    np.minimum.at(min_x, labels, xs)
    np.minimum.at(min_y, labels, ys)
    np.maximum.at(max_x, labels, xs)
    np.maximum.at(max_y, labels, ys)

    hsv = _rgb_to_hsv(img.pixels)
    color = np.zeros(count * 3 * COLOR_BINS_PER_CHANNEL, dtype=np.float64)
    for c in range(3):
        bins = np.minimum(
            (hsv[..., c] * COLOR_BINS_PER_CHANNEL).astype(np.intp), COLOR_BINS_PER_CHANNEL - 1
        ).ravel()
        flat_idx = labels * (3 * COLOR_BINS_PER_CHANNEL) + c * COLOR_BINS_PER_CHANNEL + bins
        color += np.bincount(flat_idx, minlength=color.size)
    color = color.reshape(count, 3 * COLOR_BINS_PER_CHANNEL)
    color /= (3 * sizes)[:, None]

    texture = np.zeros(count * 3 * TEXTURE_ORIENTATIONS, dtype=np.float64)
    for c in range(3):
        gx, gy = central_gradients(img.pixels[..., c])
        obins = orientation_bins(gx, gy, TEXTURE_ORIENTATIONS).ravel()
        flat_idx = labels * (3 * TEXTURE_ORIENTATIONS) + c * TEXTURE_ORIENTATIONS + obins
        texture += np.bincount(flat_idx, minlength=texture.size)
    texture = texture.reshape(count, 3 * TEXTURE_ORIENTATIONS)
    texture /= (3 * sizes)[:, None]

    nodes = []
    for i in range(count):
        box = BoundingBox(
            int(min_x[i]), int(min_y[i]), int(max_x[i] - min_x[i] + 1), int(max_y[i] - min_y[i] + 1)
        )
        nodes.append(RegionNode(int(sizes[i]), box, color[i], texture[i]))
    return nodes


def _clamp01(v: float) -> float:
    return 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)


def region_similarity(a: RegionNode, b: RegionNode, image_area: int) -> float:
    """Sum of color/texture histogram intersections plus size and fill terms.

    Each term is clamped to [0, 1], so the result lies in [0, 4].
    """
    s_color = float(np.minimum(a.color_hist, b.color_hist).sum())
    s_texture = float(np.minimum(a.texture_hist, b.texture_hist).sum())
    s_size = 1.0 - (a.pixel_count + b.pixel_count) / image_area
    joint = a.box.union(b.box)
    s_fill = 1.0 - (joint.area - a.pixel_count - b.pixel_count) / image_area
    return _clamp01(s_color) + _clamp01(s_texture) + _clamp01(s_size) + _clamp01(s_fill)


def _merge_nodes(a: RegionNode, b: RegionNode) -> RegionNode:
    total = a.pixel_count + b.pixel_count
    color = (a.pixel_count * a.color_hist + b.pixel_count * b.color_hist) / total
    texture = (a.pixel_count * a.texture_hist + b.pixel_count * b.texture_hist) / total
    return RegionNode(total, a.box.union(b.box), color, texture)


def _segment_adjacency(seg: SegmentLabelMap) -> set[tuple[int, int]]:
    labels = seg.labels
    h, w = seg.height, seg.width
    pairs: set[tuple[int, int]] = set()
    shifts = [(0, 1), (1, 0), (1, 1), (1, -1)]
    for dy, dx in shifts:
        if dx >= 0:
            a = labels[: h - dy, : w - dx]
            b = labels[dy:, dx:]
        else:
            a = labels[: h - dy, -dx:]
            b = labels[dy:, : w + dx]
        diff = a != b
        lo = np.minimum(a[diff], b[diff])
        hi = np.maximum(a[diff], b[diff])
        pairs.update(zip(lo.tolist(), hi.tolist()))
    return pairs


def _rng_for(seed: int, image_id: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}\x1f{image_id}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:16], "big"))


def selective_search(
    img: RasterImage,
    image_id: str,
    *,
    k: float = DEFAULT_K,
    min_size: int = DEFAULT_MIN_SIZE,
    seed: int = 0,
) -> ProposalSet:
    """Propose scored boxes by hierarchical grouping of an over-segmentation.

    Starting from felzenszwalb_segment, the most similar adjacent pair is
    merged repeatedly (histograms by pixel-count-weighted average, boxes by
    union) until one region remains. Every region ever created emits its
    box, deduplicated by exact equality keeping the earliest creation.
    Score = (creation step / total steps) * u with u drawn per kept region,
    in creation order, from a generator seeded by (seed, image_id); ties
    sort by earlier creation.
    """
    seg = felzenszwalb_segment(img, k, min_size)
    nodes = build_region_nodes(img, seg)
    n_initial = len(nodes)
    creation_step = [0] * n_initial
    area = img.area

    neighbors: dict[int, set[int]] = {i: set() for i in range(n_initial)}
    sims: dict[tuple[int, int], float] = {}
    for lo, hi in sorted(_segment_adjacency(seg)):
        neighbors[lo].add(hi)
        neighbors[hi].add(lo)
        sims[(lo, hi)] = region_similarity(nodes[lo], nodes[hi], area)

    total_steps = n_initial - 1
    step = 0
    while sims:
        step += 1
        (i, j), _ = max(sims.items(), key=lambda kv: (kv[1], -kv[0][0], -kv[0][1]))
        new_id = len(nodes)
        nodes.append(_merge_nodes(nodes[i], nodes[j]))
        creation_step.append(step)
        merged_nbrs = (neighbors[i] | neighbors[j]) - {i, j}
        for x in neighbors[i]:
            sims.pop((min(i, x), max(i, x)), None)
            neighbors[x].discard(i)
        for x in neighbors[j]:
            sims.pop((min(j, x), max(j, x)), None)
            neighbors[x].discard(j)
        del neighbors[i], neighbors[j]
        neighbors[new_id] = merged_nbrs
        for x in sorted(merged_nbrs):
            neighbors[x].add(new_id)
            sims[(x, new_id)] = region_similarity(nodes[x], nodes[new_id], area)

    seen: set[tuple[int, int, int, int]] = set()
    kept: list[int] = []
    for idx, node in enumerate(nodes):
        key = (node.box.x, node.box.y, node.box.w, node.box.h)
        if key not in seen:
            seen.add(key)
            kept.append(idx)

    rng = _rng_for(seed, image_id)
    scored: list[tuple[float, int, BoundingBox]] = []
    for idx in kept:
        u = float(rng.random())
        depth = creation_step[idx] / total_steps if total_steps > 0 else 1.0
        scored.append((depth * u, creation_step[idx], nodes[idx].box))
    scored.sort(key=lambda t: (-t[0], t[1]))
    return ProposalSet(image_id, tuple(Proposal(box, score) for score, _, box in scored))


# ---------------------------------------------------------------------------
# Filtering


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Jaccard overlap of two boxes; 0 when interiors are disjoint."""
    ix = max(a.x, b.x)
    iy = max(a.y, b.y)
    ix1 = min(a.x + a.w, b.x + b.w)
    iy1 = min(a.y + a.h, b.y + b.h)
    if ix1 <= ix or iy1 <= iy:
        return 0.0
    inter = (ix1 - ix) * (iy1 - iy)
    return inter / (a.area + b.area - inter)


def nms_filter(pset: ProposalSet, theta: float = DEFAULT_NMS_IOU, top_n: int = DEFAULT_TOP_N) -> ProposalSet:
    """Greedy suppression in score order; keeps at most top_n proposals,
    each overlapping every earlier kept proposal by at most theta."""
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must be in (0, 1], got {theta}")
    if top_n < 1:
        raise ValueError(f"top_n must be at least 1, got {top_n}")
    kept: list[Proposal] = []
    for p in pset.proposals:
        if len(kept) >= top_n:
            break
        if all(iou(p.box, q.box) <= theta for q in kept):
            kept.append(p)
    return ProposalSet(pset.image_id, tuple(kept))


# ---------------------------------------------------------------------------
# Text round trip: one `image_id x y w h score` record per line


def format_proposals(pset: ProposalSet) -> str:
    lines = [
        f"{pset.image_id} {p.box.x} {p.box.y} {p.box.w} {p.box.h} {p.score!r}"
        for p in pset.proposals
    ]
    return "".join(line + "\n" for line in lines)


def parse_proposals(text: str) -> ProposalSet:
    image_id = None
    proposals = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ValueError(f"line {lineno}: expected 6 fields, got {len(parts)}")
        pid, xs, ys, ws, hs, ss = parts
        if image_id is None:
            image_id = pid
        elif pid != image_id:
            raise ValueError(f"line {lineno}: mixed image ids {image_id!r} and {pid!r}")
        proposals.append(Proposal(BoundingBox(int(xs), int(ys), int(ws), int(hs)), float(ss)))
    if image_id is None:
        raise ValueError("no proposal records found")
    return ProposalSet(image_id, tuple(proposals))
