"""
Exception hierarchy for the point-cloud classification toolkit.

Errors caused by bad values also derive from ValueError, so callers that only
care about "the input was wrong" can keep catching ValueError.
"""


class PointClsError(Exception):
    """Base class for every error raised by this package."""


class InvalidCloud(PointClsError, ValueError):
    """A point cloud is empty or holds non-finite coordinates."""


class InvalidRequest(PointClsError, ValueError):
    """A count, index or class id is out of its valid range."""


class InvalidConfig(PointClsError, ValueError):
    """A numeric configuration value is out of range (e.g. radius <= 0)."""


class ShapeError(PointClsError, ValueError):
    """Array shapes that must agree do not."""


class InvalidDataset(PointClsError, ValueError):
    """A dataset split is empty or inconsistent with the model."""


class InvalidSpec(PointClsError, ValueError):
    """A synthetic dataset description is invalid."""


class InvalidMesh(PointClsError, ValueError):
    """A mesh cannot be sampled (no faces or zero total area)."""


class IncompatibleCheckpoints(PointClsError):
    """Checkpoints with different config fingerprints were combined."""


class DivergedError(PointClsError, ArithmeticError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"Training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.loss = loss


class ParseError(PointClsError, ValueError):
    """A text file could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConfigError(PointClsError, ValueError):
    """A run configuration failed schema validation."""

    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = list(diagnostics)
