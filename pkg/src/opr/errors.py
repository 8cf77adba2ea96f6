"""Exception types raised across the pipeline.

Argument validation failures raise plain ValueError; everything that can
be triggered by file contents or pipeline state gets a dedicated type so
callers (and the CLI) can report it precisely.
"""


class PipelineError(Exception):
    """Base class for all pipeline-specific failures."""


class DecodeError(PipelineError):
    """Malformed image bytes. Carries the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class FormatError(PipelineError):
    """Malformed binary artifact (OFPF/OFPM/OFPQ/OFPI). Carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class BoundsError(PipelineError):
    """A bounding box falls outside its image."""


class ConfigError(PipelineError):
    """Inconsistent pipeline configuration (e.g. external features missing)."""


class EmptyInputError(PipelineError):
    """An aggregation stage received zero rows."""


class ProtocolError(PipelineError):
    """Evaluation protocol violated (missing ground truth, short ranking, ...)."""
