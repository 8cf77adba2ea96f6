"""Object-level pooled image representations and compact-code retrieval."""

from .errors import (
    BoundsError,
    ConfigError,
    DecodeError,
    EmptyInputError,
    FormatError,
    PipelineError,
    ProtocolError,
)
from .raster import BoundingBox, RasterImage, crop, decode_ppm, encode_ppm, resize_bilinear

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "BoundsError",
    "ConfigError",
    "DecodeError",
    "EmptyInputError",
    "FormatError",
    "PipelineError",
    "ProtocolError",
    "RasterImage",
    "crop",
    "decode_ppm",
    "encode_ppm",
    "resize_bilinear",
    "__version__",
]
