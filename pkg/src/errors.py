from typing import Optional


class LensError(Exception):
    """Base class for every error raised by the scanner"""
    exit_code = 3
    stage: Optional[str] = None  # pipeline stage the error escaped from

    def __str__(self) -> str:
        message = super().__str__()
        if self.stage is None:
            return message
        return f"Stage '{self.stage}' failed: {message}"


class ConfigError(LensError):
    exit_code = 2


class RootNotFound(ConfigError):
    def __init__(self, root: str):
        super().__init__(f"Scan root not found or not a directory: {root}")
        self.root = root


class UnreadableFile(LensError):
    exit_code = 2

    def __init__(self, path: str, reason: str):
        super().__init__(f"Cannot read {path}: {reason}")
        self.path = path
        self.reason = reason


class SchemaError(LensError):
    """A data file (catalog, rules, library list) does not match its schema"""
    exit_code = 2

    def __init__(self, line: int, reason: str, path: Optional[str] = None):
        where = f"{path}:{line}" if path else f"line {line}"
        super().__init__(f"{where}: {reason}")
        self.line = line
        self.reason = reason
        self.path = path


class DuplicateEntry(LensError):
    exit_code = 2

    def __init__(self, pattern: str):
        super().__init__(f"Duplicate catalog entry: {pattern}")
        self.pattern = pattern


class BadRegex(LensError):
    exit_code = 2

    def __init__(self, category: str, pattern: str, reason: str):
        super().__init__(f"Bad regex in category {category!r}: {pattern!r} ({reason})")
        self.category = category
        self.pattern = pattern
        self.reason = reason


class ZeroTotal(LensError):
    def __init__(self):
        super().__init__("no methods")


class InvariantViolation(LensError):
    exit_code = 3


class StageError(LensError):
    """Unexpected failure inside a pipeline stage"""
    exit_code = 3

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(str(cause))
        self.stage = stage
        self.cause = cause
