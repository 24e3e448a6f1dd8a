"""Exception types shared across the package.

Plain ``ValueError`` is used for malformed arguments (bad shapes, out-of-range
parameters).  The classes below mark failures that callers may want to catch
separately: capability limits, solver preconditions and iteration breakdowns.
"""

from __future__ import annotations


class CapabilityError(RuntimeError):
    """Requested computation exceeds a documented size or feature limit."""


class StabilityError(RuntimeError):
    """A time-step precondition is violated; the message names the bound."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to contract within its budget."""


class SupportError(ValueError):
    """A scaled mollifier support does not fit inside the grid box."""


class ResolutionError(ValueError):
    """A scaled mollifier support covers too few grid cells to be sampled."""


class DegenerateFieldError(ValueError):
    """An operation received a field it cannot normalise by (e.g. zero)."""


class ConfigError(ValueError):
    """A config file or config value could not be parsed."""
