"""Exception types shared across the package."""


class ZcequantError(Exception):
    """Base class for all zcequant errors."""


class ParameterError(ZcequantError, ValueError):
    """A parameter is outside its mathematical domain."""


class DegenerateSummaryError(ZcequantError, ValueError):
    """Observation summary carries no information (sigma = 0)."""


class DataSizeError(ZcequantError, ValueError):
    """Too few observations for the requested operation."""


class TieError(ZcequantError, ValueError):
    """Ties at the threshold leave fewer strict exceedances than requested."""


class QuantileBelowThresholdError(ZcequantError, ValueError):
    """Requested quantile sits below the threshold's own percentile."""


class TruncationError(ZcequantError, RuntimeError):
    """A truncated series failed to capture the required tail mass."""
