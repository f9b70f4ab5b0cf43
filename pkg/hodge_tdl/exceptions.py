"""
Errors raised by hodge-tdl.

Everything derives from HodgeTdlError so the CLI can report any of them as a
single line.
"""

from typing import Optional


class HodgeTdlError(Exception):
    """Base class for all hodge-tdl errors."""


class TopologyError(HodgeTdlError, ValueError):
    """Invalid skeleton, cycle, or an inconsistent pair of incidence matrices."""


class ConfigError(HodgeTdlError, ValueError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"invalid config field '{field}': {message}")


class DatasetError(HodgeTdlError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class QpInfeasibleError(HodgeTdlError, RuntimeError):
    def __init__(self, d: float, eps: float, status: str = "infeasible"):
        self.d = d
        self.eps = eps
        self.status = status
        super().__init__(
            f"dictionary QP is {status} for d={d!r}, eps={eps!r}; "
            "try a larger --eps (or --d)"
        )


class SynthesisError(HodgeTdlError, RuntimeError):
    """Random generation could not satisfy its constraints."""


class BoundsSelectionError(HodgeTdlError, ValueError):
    """No positive (d, eps) pair could be derived; pass them explicitly."""
