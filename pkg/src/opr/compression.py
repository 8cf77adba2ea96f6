"""PCA reduction and ITQ binarization of pooled representations.

Both fits are fully deterministic: PCA signs are fixed so the largest-
magnitude entry of every component is positive, ITQ randomness comes only
from the caller's seed, and sign(0) = +1 throughout so encoded bits are
exact. When the requested dimensionality exceeds the data rank (tiny
corpora), the remaining components come from the SVD null-space basis and
carry zero recorded variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binio import Reader, f64s, u32
from .errors import FormatError

PCA_MAGIC = b"OFPM"
ITQ_MAGIC = b"OFPQ"
MODEL_VERSION = 1

DEFAULT_ITQ_ITERS = 50


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    def __post_init__(self):
        if self.components.shape != (self.output_dim, self.input_dim):
            raise ValueError("components shape mismatch")
        if self.explained_variance.shape != (self.output_dim,):
            raise ValueError("explained_variance shape mismatch")
        variance = self.explained_variance
        if np.any(variance < 0) or np.any(variance[1:] > variance[:-1]):
            raise ValueError("explained_variance must be non-negative and non-increasing")

    @property
    def input_dim(self) -> int:
        return self.mean.shape[0]

    @property
    def output_dim(self) -> int:
        return self.components.shape[0]


@dataclass(frozen=True)
class ItqModel:
    rotation: np.ndarray
    pca: PcaModel
    loss_trace: tuple[float, ...]

    def __post_init__(self):
        c = self.bits
        if self.rotation.shape != (c, c):
            raise ValueError("rotation must be square with side = pca output dim")

    @property
    def bits(self) -> int:
        return self.pca.output_dim


@dataclass(frozen=True)
class BinaryCode:
    """Packed bit vector; bit j lives in byte j//8 at position 7 - j%8."""

    bits: int
    payload: bytes

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("bits must be positive")
        if len(self.payload) != (self.bits + 7) // 8:
            raise ValueError(
                f"payload must be {(self.bits + 7) // 8} bytes for {self.bits} bits, "
                f"got {len(self.payload)}"
            )
        tail = len(self.payload) * 8 - self.bits
        if tail and (self.payload[-1] & ((1 << tail) - 1)):
            raise ValueError("unused trailing bits must be zero")


def pack_bits(flags: np.ndarray) -> BinaryCode:
    flags = np.asarray(flags, dtype=bool)
    return BinaryCode(flags.size, np.packbits(flags).tobytes())


def unpack_bits(code: BinaryCode) -> np.ndarray:
    return np.unpackbits(np.frombuffer(code.payload, dtype=np.uint8))[: code.bits].astype(bool)


def fit_pca(data: np.ndarray, d: int) -> PcaModel:
    """Top-d principal directions of the rows of `data`.

    Components are the right singular vectors of the centered matrix,
    sign-fixed; explained variances are squared singular values over n-1.
    Requires n >= 2 rows and 1 <= d <= D columns; directions beyond the
    data rank are filled from the null-space basis with zero variance.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("data must be a 2-D matrix")
    n, dim = data.shape
    if n < 2:
        raise ValueError(f"need at least 2 rows to fit, got {n}")
    if not 1 <= d <= dim:
        raise ValueError(f"target dim must be in [1, {dim}], got {d}")
    mean = data.mean(axis=0)
    centered = data - mean
    full = d > min(n, dim)
    _, singulars, vt = np.linalg.svd(centered, full_matrices=full)
    components = vt[:d].copy()
    variance = np.zeros(d, dtype=np.float64)
    usable = min(d, singulars.shape[0])
    variance[:usable] = singulars[:usable] ** 2 / (n - 1)
    if variance[0] > 0:
        variance[variance < variance[0] * 1e-12] = 0.0
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(mean, components, variance)


def pca_project(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """Center by the model mean and project; accepts a vector or a matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise ValueError(f"expected dim {model.input_dim}, got {x.shape[-1]}")
    return (x - model.mean) @ model.components.T


def _seeded_orthogonal(c: int, seed: int) -> np.ndarray:
    gaussian = np.random.default_rng(seed).standard_normal((c, c))
    q, r = np.linalg.qr(gaussian)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def fit_itq(data: np.ndarray, c: int, iters: int = DEFAULT_ITQ_ITERS, *, seed: int) -> ItqModel:
    """Alternating minimization of the binary quantization error.

    Embeds a PCA to c dimensions, then repeats: assign codes B = sign(VR)
    with sign(0) = +1, and re-solve the orthogonal Procrustes problem for
    R from the SVD of B^T V. The squared Frobenius loss ||B - VR||^2 is
    recorded after each iteration and never increases.
    """
    if iters < 0:
        raise ValueError(f"iters must be non-negative, got {iters}")
    data = np.asarray(data, dtype=np.float64)
    pca = fit_pca(data, c)
    projected = pca_project(pca, data)
    rotation = _seeded_orthogonal(c, seed)
    trace: list[float] = []
    for _ in range(iters):
        rotated = projected @ rotation
        codes = np.where(rotated >= 0.0, 1.0, -1.0)
        left, _, right_t = np.linalg.svd(codes.T @ projected)
        rotation = right_t.T @ left.T
        trace.append(float(((codes - projected @ rotation) ** 2).sum()))
    return ItqModel(rotation, pca, tuple(trace))


def itq_encode(model: ItqModel, x: np.ndarray) -> BinaryCode:
    """bit j = 1 iff component j of the projected, rotated vector is >= 0."""
    rotated = pca_project(model.pca, x) @ model.rotation
    return pack_bits(rotated >= 0.0)


# ---------------------------------------------------------------------------
# Model files: "OFPM" (PCA) and "OFPQ" (ITQ), version u32 = 1, dims as u32,
# then row-major little-endian f64 matrices in declared order.


def write_pca_model(model: PcaModel) -> bytes:
    return b"".join(
        [
            PCA_MAGIC,
            u32(MODEL_VERSION),
            u32(model.input_dim),
            u32(model.output_dim),
            f64s(model.mean),
            f64s(model.components.ravel()),
            f64s(model.explained_variance),
        ]
    )


def _read_pca_body(r: Reader) -> PcaModel:
    input_dim = r.u32("input dim")
    output_dim = r.u32("output dim")
    mean = np.array(r.f64s(input_dim, "mean"))
    components = np.array(r.f64s(output_dim * input_dim, "components")).reshape(
        output_dim, input_dim
    )
    variance = np.array(r.f64s(output_dim, "explained variance"))
    return PcaModel(mean, components, variance)


def read_pca_model(data: bytes) -> PcaModel:
    r = Reader(data)
    r.magic(PCA_MAGIC)
    r.expect_version(MODEL_VERSION)
    model = _read_pca_body(r)
    r.expect_end()
    return model


def write_itq_model(model: ItqModel) -> bytes:
    return b"".join(
        [
            ITQ_MAGIC,
            u32(MODEL_VERSION),
            u32(model.pca.input_dim),
            u32(model.pca.output_dim),
            f64s(model.pca.mean),
            f64s(model.pca.components.ravel()),
            f64s(model.pca.explained_variance),
            u32(model.bits),
            f64s(model.rotation.ravel()),
            u32(len(model.loss_trace)),
            f64s(model.loss_trace),
        ]
    )


def read_itq_model(data: bytes) -> ItqModel:
    r = Reader(data)
    r.magic(ITQ_MAGIC)
    r.expect_version(MODEL_VERSION)
    pca = _read_pca_body(r)
    bits = r.u32("bit count")
    if bits != pca.output_dim:
        raise FormatError(
            f"bit count {bits} disagrees with embedded pca dim {pca.output_dim}", r.pos - 4
        )
    rotation = np.array(r.f64s(bits * bits, "rotation")).reshape(bits, bits)
    trace_len = r.u32("loss trace length")
    trace = tuple(r.f64s(trace_len, "loss trace"))
    r.expect_end()
    return ItqModel(rotation, pca, trace)
