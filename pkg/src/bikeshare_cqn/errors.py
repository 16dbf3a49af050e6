"""Exception hierarchy for the bike-sharing network solver."""


class BikeShareError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(BikeShareError):
    """A model description violates one or more structural assumptions.

    ``violations`` collects every problem found, not just the first one.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class CapacityError(ModelError):
    pass


class RoutingError(ModelError):
    pass


class DegenerateStation(ModelError):
    pass


class DisconnectedStation(DegenerateStation):
    """Some station has no outgoing or no incoming road, so the path graph is reducible."""


class RateError(ModelError):
    pass


class ZeroPhaseRate(ModelError):
    pass


class SingularGenerator(BikeShareError):
    pass


class DimensionError(BikeShareError, ValueError):
    pass


class ReducibleMatrix(BikeShareError):
    pass


class StateSpaceTooLarge(BikeShareError):
    def __init__(self, count, cap):
        self.count = count
        self.cap = cap
        super().__init__(f"state space has {count} states, exceeding the cap of {cap}")


class NoConvergence(BikeShareError):
    """Raised when the fixed-point loop exhausts its iteration budget.

    The best iterate found is attached as ``result``.
    """

    def __init__(self, result):
        self.result = result
        super().__init__(
            f"no convergence after {result.iterations} iterations "
            f"(residual {result.residual:.3e})"
        )


class UnknownRoad(BikeShareError, KeyError):
    pass


class ConfigError(BikeShareError):
    pass
