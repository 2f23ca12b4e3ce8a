"""Exception types shared across the package."""


class DawnError(Exception):
    """Base class for all dawnseg errors."""


class ShapeMismatch(DawnError, ValueError):
    """Two rasters that must share a shape do not."""


class EmptyPointSet(DawnError, ValueError):
    """An operation requiring at least one annotation point received none."""


class RasterTooSmall(DawnError, ValueError):
    """A stencil operation received a raster smaller than its support."""


class DimMismatch(DawnError, ValueError):
    """Two feature embeddings do not share a dimension."""


class EmptyOmega(DawnError, ValueError):
    """The weighted-loss pixel set is empty (no pixel has positive weight)."""


class RangeViolation(DawnError, ValueError):
    """A raster holds values outside its documented range (e.g. probabilities)."""


class MissingArtifact(DawnError, FileNotFoundError):
    """A file required by the predictor bundle layout is absent."""


class IdMismatch(DawnError, ValueError):
    """Prediction and ground-truth directories do not cover the same image ids."""


class PlacementInfeasible(DawnError, RuntimeError):
    """Scene generation exhausted its retry budget before placing all nuclei."""


class PredictorFailed(DawnError, RuntimeError):
    """An external predictor subprocess exited with a non-zero status."""


class ValidationFailed(DawnError, RuntimeError):
    """A predictor bundle failed shape/range validation."""
