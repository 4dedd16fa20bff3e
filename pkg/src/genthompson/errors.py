"""Exception hierarchy shared by all modules."""


class GenThompsonError(Exception):
    """Base class for library errors."""


class UncoveredHistoryError(GenThompsonError, KeyError):
    """A conditional table has no row for the requested history."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return Exception.__str__(self)


class InvalidDistributionError(GenThompsonError, ValueError):
    """A probability vector is negative somewhere or does not sum to one."""


class ProtocolViolationError(GenThompsonError):
    """An agent or environment emitted an invalid distribution mid-run."""

    def __init__(self, side: str, round_index: int, detail: str):
        self.side = side
        self.round_index = round_index
        super().__init__(f"{side} emitted an invalid distribution at round {round_index}: {detail}")


class ImpossibleObservationError(GenThompsonError):
    """Every hypothesis assigns zero likelihood to the observed data."""


class DegenerateFitnessError(GenThompsonError, ValueError):
    """Total fitness on the population support is zero."""


class DivergenceError(GenThompsonError, ValueError):
    """A KL divergence is infinite because of a support violation."""


class ComplexityGuardError(GenThompsonError):
    """Exhaustive enumeration would exceed the configured budget."""


class RegistryError(GenThompsonError, KeyError):
    """Unknown variable or outcome in a probability tree."""

    def __str__(self) -> str:
        return Exception.__str__(self)


class ImpossibleEvidenceError(GenThompsonError):
    """Evidence has zero probability in the (intervened) tree."""


class ConfigError(GenThompsonError, ValueError):
    """Experiment configuration failed validation."""
