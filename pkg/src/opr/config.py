"""Pipeline configuration: defaults, ranges, and the flat config-file format."""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError


@dataclass(frozen=True)
class PipelineConfig:
    """One bag of tunables covering every stage; flags override per run."""

    seed: int | None = None
    k: float = 100.0
    min_size: int = 50
    nms_iou: float = 0.9
    top_n: int = 500
    descriptor: str = "builtin"
    row_normalize: bool = False
    l2_normalize: bool = False
    pca_dim: int = 32
    itq_bits: int = 64
    itq_iters: int = 50
    metric: str = "l2"

    def __post_init__(self):
        if self.k <= 0:
            raise ConfigError(f"k must be positive, got {self.k}")
        if self.min_size < 1:
            raise ConfigError(f"min_size must be at least 1, got {self.min_size}")
        if not 0.0 < self.nms_iou <= 1.0:
            raise ConfigError(f"nms_iou must be in (0, 1], got {self.nms_iou}")
        if self.top_n < 1:
            raise ConfigError(f"top_n must be at least 1, got {self.top_n}")
        if self.descriptor not in ("builtin", "external"):
            raise ConfigError(f"descriptor must be builtin or external, got {self.descriptor!r}")
        if self.pca_dim < 1:
            raise ConfigError(f"pca_dim must be at least 1, got {self.pca_dim}")
        if self.itq_bits < 1:
            raise ConfigError(f"itq_bits must be at least 1, got {self.itq_bits}")
        if self.itq_iters < 0:
            raise ConfigError(f"itq_iters must be non-negative, got {self.itq_iters}")
        if self.metric not in ("l2", "hamming"):
            raise ConfigError(f"metric must be l2 or hamming, got {self.metric!r}")


_BOOL_WORDS = {"true": True, "yes": True, "on": True, "1": True,
               "false": False, "no": False, "off": False, "0": False}


def _convert(name: str, kind, raw: str):
    if kind is bool:
        if raw.lower() not in _BOOL_WORDS:
            raise ConfigError(f"config key {name}: expected a boolean, got {raw!r}")
        return _BOOL_WORDS[raw.lower()]
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"config key {name}: cannot parse {raw!r} as {kind.__name__}") from None


def parse_config_text(text: str) -> PipelineConfig:
    """Parse `key = value` lines ('#' comments allowed) into a PipelineConfig."""
    kinds = {}
    for f in fields(PipelineConfig):
        kinds[f.name] = int if f.name == "seed" else type(getattr(PipelineConfig(), f.name))
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"config line {lineno}: expected key = value, got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        name = key.replace("-", "_")
        if name not in kinds:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        if name in values:
            raise ConfigError(f"config line {lineno}: duplicate key {key!r}")
        values[name] = _convert(name, kinds[name], raw)
    return PipelineConfig(**values)
