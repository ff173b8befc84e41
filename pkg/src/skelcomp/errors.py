"""Exception hierarchy shared by all pipeline stages.

The CLI maps these onto distinct exit codes (see ``cli.EXIT_CODES``), so
stage code should raise the most specific class that applies.
"""


class SkelcompError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SkelcompError):
    """A parameter is outside its documented domain."""


class DatasetError(SkelcompError):
    """A dataset directory is missing files or contains malformed records."""


class DeadEndError(SkelcompError):
    """A random walk was started from a node with no neighbors."""


class InvalidPatternError(SkelcompError):
    """A subgraph pattern violates a precondition (e.g. disconnected)."""


class OracleScaleError(SkelcompError):
    """A brute-force oracle was invoked beyond its intended tiny-instance scale."""


class MalformedCodeError(SkelcompError):
    """An edge-tuple code is structurally invalid."""


class ResourceLimitError(SkelcompError):
    """Mining exceeded its configured search budget."""


class DegenerateGraphError(SkelcompError):
    """A graph has no positive features and cannot be trained on."""


class DegenerateFoldError(SkelcompError):
    """A cross-validation fold ended up with a single class."""
