"""Exception hierarchy shared across the package."""


class SystolicDSEError(Exception):
    pass


class ParameterError(SystolicDSEError, ValueError):
    """Invalid enumeration or sampling parameters."""


class ShapeError(SystolicDSEError, ValueError):
    """Mismatched lengths or arities between related inputs."""


class InfeasibleError(SystolicDSEError):
    """No label-table entry satisfies the query's constraint."""


class DataError(SystolicDSEError, ValueError):
    """Malformed, inconsistent or stale dataset content."""


class SchemaError(DataError):
    """A dataset file's header does not match the expected case schema."""


class EncodingError(SystolicDSEError, ValueError):
    """A raw feature value falls outside its encoder domain."""


class CheckpointError(SystolicDSEError):
    """Unreadable, truncated or inconsistent model checkpoint."""
