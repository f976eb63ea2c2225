"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2,
NumericalCheckError -> 3, I/O failures -> 4.
"""


class ConfigError(ValueError):
    """Invalid run configuration."""


class NumericalCheckError(RuntimeError):
    """A built-in numerical self-check failed."""


class PostSelectionImpossibleError(RuntimeError):
    """No-click post-selection hit a branch with vanishing up probability."""


class NumericalUnderflowError(RuntimeError):
    """A selected branch probability underflowed (below 1e-300)."""
