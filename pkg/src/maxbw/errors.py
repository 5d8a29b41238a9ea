"""Exception types shared across the package.

The CLI maps ConfigError to exit code 1 and SolverError to exit code 2;
plain ValueError from domain validation is treated like ConfigError.
"""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (scenario keys, link modes, budgets)."""


class SolverError(RuntimeError):
    """Numerical search failed to converge; never returned silently."""
