"""Exception hierarchy shared by the solver and the CLI."""


class ConfigError(ValueError):
    """Invalid run configuration or parameter set."""


class SolverError(RuntimeError):
    """A linear or nonlinear solve failed to converge."""


class InvariantViolation(RuntimeError):
    """A maximum-principle or divergence invariant was broken beyond its hard limit."""


class CFLViolation(InvariantViolation):
    """The velocity grew past the advective stability bound for the chosen dt."""
