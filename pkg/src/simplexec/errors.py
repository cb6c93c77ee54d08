"""Exception hierarchy. Each class carries the CLI exit code for its category."""


class SimplexecError(Exception):
    exit_code = 1


class GraphError(SimplexecError, ValueError):
    """Invalid graph construction or query (duplicate edge, bad endpoint, ...)."""

    exit_code = 3


class InfeasibleSpecError(SimplexecError, ValueError):
    exit_code = 4


class TraceError(SimplexecError, ValueError):
    exit_code = 4


class ShapeError(SimplexecError, ValueError):
    exit_code = 5


class NonFiniteError(SimplexecError, ArithmeticError):
    exit_code = 5


class FormatError(SimplexecError, ValueError):
    """Malformed or incompatible file (GFA, dataset, checkpoint)."""

    exit_code = 3
