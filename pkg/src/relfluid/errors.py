"""Exception types shared across the package.

Two families matter to the command line driver: configuration problems
(bad input files, unknown keys, violated invariants) exit with code 2,
while runtime model failures (superluminal states, solver divergence)
exit with code 3.
"""

from __future__ import annotations


class RelfluidError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RelfluidError):
    """Base class for configuration problems (exit code 2)."""


class ParseError(ConfigError):
    """Config text could not be parsed; carries line number context."""


class ValidationError(ConfigError):
    """Config parsed but violates one or more invariants.

    ``problems`` lists every violated invariant, not just the first.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ModelError(RelfluidError):
    """Base class for runtime model failures (exit code 3)."""


class SuperluminalVelocity(ModelError):
    """A velocity exceeded the configured fraction of the speed of light."""


class NonPositiveDensity(ModelError):
    """A density field dropped to zero or below."""


class GammaBelowOne(ModelError):
    """A Lorentz-factor field contained values below one."""


class NonZeroMean(ModelError):
    """Periodic Poisson problem with a non-solvable (non-zero-mean) source."""


class InverterDiverged(ModelError):
    """The fixed-point inversion of the coefficient Laplacian did not converge."""


class ProjectionDiverged(ModelError):
    """The divergence-free projection loop did not converge."""


class IncompatibleFunctional(ModelError):
    """A functional was requested on a state that does not support it."""
