"""Error hierarchy shared by the engine, the service, and the CLI.

Every error carries a stable machine-readable ``code`` so that the service
can surface it in HTTP responses and tests can assert on the exact failure
class without string matching.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all deliberate engine failures."""

    code = "engine-error"

    def __init__(self, message: str, *, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class DimensionMismatchError(EngineError):
    code = "dimension-mismatch"


class DegenerateVectorError(EngineError):
    code = "degenerate-vector"


class DegenerateRankingError(EngineError):
    code = "degenerate-ranking"


class ContainerFormatError(EngineError):
    """Raised by the binary container reader/writer; ``code`` names the defect."""

    code = "container-format"


class ManifestError(EngineError):
    code = "manifest-error"


class DanglingIdError(EngineError):
    """One or more manifest ids did not resolve against the loaded containers."""

    code = "dangling-ids"

    def __init__(self, missing: list[str]):
        self.missing = sorted(set(missing))
        preview = ", ".join(self.missing[:10])
        more = "" if len(self.missing) <= 10 else f" (+{len(self.missing) - 10} more)"
        super().__init__(f"unresolved ids: {preview}{more}")


class TrainingDivergedError(EngineError):
    code = "training-diverged"
