"""Exception hierarchy shared by all structmark modules."""


class StructmarkError(Exception):
    """Base class for all library errors."""


class ParameterError(StructmarkError):
    """Invalid parameter combination or out-of-range configuration value."""


class EmptyRequestError(ParameterError):
    """A stream or permutation of zero length was requested."""


class DataError(StructmarkError):
    """Malformed input data: wrong length, non-finite values, corrupt file."""


class PayloadError(StructmarkError):
    """Payload of the wrong length, or a chunk value outside the codebook range."""


class NotACodewordError(StructmarkError):
    """A permutation was decoded that is not a member of the codebook."""


class CalibrationError(StructmarkError):
    """Threshold calibration could not proceed (e.g. too few tail exceedances)."""
