"""Exception types raised across the package."""


class GridMotifError(Exception):
    """Base class; ``code`` is the machine-readable name used by the CLI."""

    code = "error"


class InvalidEdge(GridMotifError):
    code = "InvalidEdge"


class SelfLoop(GridMotifError):
    code = "SelfLoop"


class EmptySet(GridMotifError):
    code = "EmptySet"


class UnknownNode(GridMotifError):
    code = "UnknownNode"


class MissingBlock(GridMotifError):
    code = "MissingBlock"


class MalformedRow(GridMotifError):
    code = "MalformedRow"


class UnknownBus(GridMotifError):
    code = "UnknownBus"


class SchemaError(GridMotifError):
    code = "SchemaError"

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class ParseError(GridMotifError):
    code = "ParseError"

    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class CorpusError(GridMotifError):
    """Aggregated per-file failures from :func:`gridmotif.ingest.load_corpus`."""

    code = "CorpusError"

    def __init__(self, failures):
        self.failures = list(failures)
        msg = "; ".join(f"{name}: {err}" for name, err in self.failures)
        super().__init__(msg)


class TooSmall(GridMotifError):
    code = "TooSmall"


class RetryExhausted(GridMotifError):
    code = "RetryExhausted"


class DimMismatch(GridMotifError):
    code = "DimMismatch"


class NonFiniteLoss(GridMotifError):
    code = "NonFiniteLoss"


class DegenerateSplit(GridMotifError):
    code = "DegenerateSplit"


class EmptyReference(GridMotifError):
    code = "EmptyReference"


class VersionMismatch(GridMotifError):
    code = "VersionMismatch"


class CorruptPayload(GridMotifError):
    code = "CorruptPayload"


class EmptyGraph(GridMotifError):
    code = "EmptyGraph"


class TooLarge(GridMotifError):
    code = "TooLarge"


class OracleTimeout(GridMotifError):
    """Raised when an exact count exceeds its wall-clock budget.

    ``partial`` holds the number of occurrences found before the budget ran
    out, so callers can report an incomplete lower bound.
    """

    code = "Timeout"

    def __init__(self, partial, budget):
        super().__init__(f"exceeded {budget:g}s budget after {partial} occurrences")
        self.partial = partial
        self.budget = budget


class DegenerateVariance(GridMotifError):
    code = "DegenerateVariance"


class ConfigError(GridMotifError):
    code = "ConfigError"

    def __init__(self, keys, message="invalid configuration"):
        self.keys = list(keys)
        super().__init__(f"{message}: {', '.join(self.keys)}")
