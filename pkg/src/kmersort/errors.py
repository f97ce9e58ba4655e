"""Exception hierarchy and the CLI exit code each class maps to."""


class KmerSortError(Exception):
    exit_code = 1


class ConfigError(KmerSortError, ValueError):
    exit_code = 2


class IngestError(KmerSortError):
    exit_code = 3

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class SanitizationError(IngestError):
    """Raised when a base outside {A,C,G,T} reaches the encoder."""


class WireFormatError(KmerSortError):
    exit_code = 4

    def __init__(self, message, stream=None, offset=None):
        parts = [message]
        if stream is not None:
            parts.append(f"stream={stream}")
        if offset is not None:
            parts.append(f"offset={offset}")
        super().__init__(" ".join(parts))
        self.stream = stream
        self.offset = offset


class OutputError(KmerSortError, OSError):
    exit_code = 5


class PipelineError(KmerSortError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
