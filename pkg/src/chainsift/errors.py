"""Exception hierarchy shared across the toolkit.

Three broad families, matching the CLI exit-code mapping:
ConfigError (bad configuration / arguments), DataError (bad input
files or values), RuntimeFailure (numeric or state failures at run
time).
"""


class ChainsiftError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ChainsiftError):
    """Invalid configuration, CLI arguments, or parameter maps."""


class DataError(ChainsiftError):
    """Malformed or inconsistent input data."""


class RuntimeFailure(ChainsiftError):
    """Failure during computation (numeric breakdown, bad state)."""


# --- dataset ---------------------------------------------------------------

class MissingFile(DataError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"missing input file: {self.path}")


class MalformedRow(DataError):
    def __init__(self, line, reason):
        self.line = line
        super().__init__(f"malformed row at line {line}: {reason}")


class UnknownClassToken(DataError):
    def __init__(self, token):
        self.token = token
        super().__init__(f"unknown class token: {token!r}")


class DuplicateTxId(DataError):
    def __init__(self, tx_id):
        self.tx_id = tx_id
        super().__init__(f"duplicate transaction id: {tx_id}")


class DanglingClassRow(DataError):
    def __init__(self, tx_id):
        self.tx_id = tx_id
        super().__init__(f"class row without a feature row: {tx_id}")


class BoundaryOutOfRange(ConfigError):
    def __init__(self, boundary):
        super().__init__(f"split boundary {boundary} outside 1..48")


class EmptySide(DataError):
    def __init__(self, side):
        super().__init__(f"temporal split produced an empty {side} side")


class TargetRateAboveCurrent(ConfigError):
    def __init__(self, target, current):
        super().__init__(
            f"target illicit rate {target:.4f} above current rate {current:.4f}"
        )


# --- numkit ----------------------------------------------------------------

class EmptyIndex(RuntimeFailure):
    pass


class SingularAfterRidge(RuntimeFailure):
    pass


class DimensionMismatch(RuntimeFailure):
    pass


class DecompositionFailure(RuntimeFailure):
    pass


# --- classifiers -----------------------------------------------------------

class SingleClassPool(RuntimeFailure):
    """Training pool contains only one class; caller should keep warming up."""


# --- detectors -------------------------------------------------------------

class InsufficientReference(DataError):
    def __init__(self, method, needed, got):
        super().__init__(
            f"{method} needs at least {needed} reference points, got {got}"
        )


# --- metrics ---------------------------------------------------------------

class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class GridMismatch(DataError):
    pass


# --- active learning -------------------------------------------------------

class EmptyPool(ConfigError):
    pass


class InvalidStop(ConfigError):
    pass


class BatchPending(RuntimeFailure):
    pass


class PoolExhausted(RuntimeFailure):
    pass


class BatchMismatch(DataError):
    def __init__(self, missing=(), extra=()):
        self.missing = sorted(missing)
        self.extra = sorted(extra)
        parts = []
        if self.missing:
            parts.append(f"missing ids {self.missing}")
        if self.extra:
            parts.append(f"extra ids {self.extra}")
        super().__init__("label submission does not match pending batch: "
                         + "; ".join(parts))


class UnknownTxId(DataError):
    def __init__(self, tx_id):
        self.tx_id = tx_id
        super().__init__(f"unknown transaction id: {tx_id}")


class UntrainedModel(RuntimeFailure):
    pass


# --- bench -----------------------------------------------------------------

class IoError(DataError):
    pass


class SchemaVersionMismatch(DataError):
    def __init__(self, found, expected):
        super().__init__(f"record schema version {found!r}, expected {expected!r}")
