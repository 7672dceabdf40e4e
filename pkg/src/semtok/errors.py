"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to:
2 = bad configuration/parameters, 3 = bad input data, 4 = numeric failure.
"""


class SemtokError(Exception):
    exit_code = 1


class ConfigError(SemtokError):
    """Invalid parameters or pipeline configuration."""

    exit_code = 2


class DataError(SemtokError):
    """Malformed or inconsistent input data."""

    exit_code = 3


class NumericError(SemtokError):
    """Numerically invalid state (NaN/Inf, zero vector under cosine, ...)."""

    exit_code = 4


class FormatError(DataError):
    """File does not parse under the declared format."""


class NonFiniteValueError(NumericError):
    def __init__(self, row: int, col: int | None = None):
        self.row = row
        self.col = col
        where = f"row {row}" if col is None else f"row {row}, col {col}"
        super().__init__(f"non-finite embedding value at {where}")


class DuplicateTokenError(DataError):
    def __init__(self, token: str, first_id: int, second_id: int):
        self.token = token
        self.first_id = first_id
        self.second_id = second_id
        super().__init__(f"duplicate token {token!r} at ids {first_id},{second_id}")


class RowCountMismatchError(DataError):
    def __init__(self, vocab_size: int, rows: int):
        self.vocab_size = vocab_size
        self.rows = rows
        super().__init__(f"vocabulary has {vocab_size} tokens but matrix has {rows} rows")


class EmptyVocabularyError(DataError):
    def __init__(self):
        super().__init__("vocabulary is empty")


class InvalidTokenError(DataError):
    def __init__(self, token: str, reason: str):
        self.token = token
        self.reason = reason
        super().__init__(f"invalid token {token!r}: {reason}")


class UnknownTokenError(DataError):
    def __init__(self, token: str):
        self.token = token
        super().__init__(f"token {token!r} not in vocabulary")


class MissingUnkTokenError(DataError):
    def __init__(self, unk_token: str):
        self.unk_token = unk_token
        super().__init__(
            f"unknown-token string {unk_token!r} not found in vocabulary; "
            "pass an explicit unk token present in the file"
        )


class IdOutOfRangeError(DataError):
    def __init__(self, value: int, limit: int):
        self.value = value
        self.limit = limit
        super().__init__(f"id {value} out of range [0, {limit})")


class ZeroRowError(NumericError):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} has zero norm; cosine distance undefined")
