"""Errors | Exception hierarchy shared by every subpackage"""


class ToolkitError(Exception):
    """Base class for all toolkit failures"""


class ConfigurationError(ToolkitError, ValueError):
    """Invalid experiment configuration, preset, override or missing resource"""


class InputError(ToolkitError, ValueError):
    """Invalid user-supplied data"""


class ShapeError(InputError):
    """Tensor or matrix dimensions do not line up"""


class EmptyVideoError(InputError):
    """Video has no frames"""


class DecodeError(InputError):
    """Video file is missing or cannot be opened by the decoder"""


class PreconditionError(ToolkitError, ValueError):
    """Operation called on input that violates its contract"""


class DegenerateFeatureError(ToolkitError, ArithmeticError):
    """Feature geometry is numerically degenerate (zero rows, antipodal pairs)"""


class UndefinedTermError(ToolkitError, ArithmeticError):
    """Loss term has no pairs or anchors to average over"""


class UndefinedMetricError(ToolkitError, ValueError):
    """Metric is undefined for the given labels (e.g. a single class)"""


class IntegrityError(ToolkitError):
    """Dataset bookkeeping is inconsistent (duplicate or leaking video ids)"""


class TrainingDivergedError(ToolkitError, RuntimeError):
    """Loss became NaN or infinite during optimization"""
