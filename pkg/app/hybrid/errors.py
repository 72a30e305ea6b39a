"""Error hierarchy shared by the library, the CLI and the Celery tasks.

Every class carries the CLI exit code it maps to.
"""


class HybridGraphError(Exception):
    exit_code = 1


# --- Input problems (exit 2) ---


class InputError(HybridGraphError, ValueError):
    exit_code = 2


class ScenarioError(InputError):
    pass


class GraphError(InputError):
    pass


class DimensionError(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class StrategyError(InputError):
    pass


class MissingEventError(InputError):
    pass


# --- Caps (exit 3) ---


class CapExceededError(HybridGraphError):
    exit_code = 3

    def __init__(self, what: str, size: int, cap: int):
        self.what = what
        self.size = size
        self.cap = cap
        super().__init__(f"{what}: size {size} exceeds cap {cap}")


class UndecidedError(CapExceededError):
    """Perfectness could not be decided exactly within the configured cap."""


# --- Solver failures (exit 4) ---


class SolverError(HybridGraphError):
    exit_code = 4


class InfeasibleError(SolverError):
    def __init__(self, message: str = "LP is infeasible", certificate=None):
        # Farkas multipliers, one per original row (inequalities first, then equalities).
        self.certificate = certificate
        super().__init__(message)


class UnboundedError(SolverError):
    pass


class ThetaConvergenceError(SolverError):
    def __init__(self, result):
        self.result = result
        super().__init__(
            f"theta SDP did not converge: gap {result.gap:.3e} after {result.iterations} iterations"
        )


class InvariantViolation(SolverError):
    pass
