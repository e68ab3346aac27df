class EtalonError(Exception):
    """Base class for errors raised by etalon_forge."""


class DomainError(EtalonError, ValueError):
    """An input lies outside the domain an operation accepts."""


class GridMismatchError(EtalonError, ValueError):
    pass


class InsufficientPeaksError(EtalonError):
    def __init__(self, count, needed):
        self.count = count
        self.needed = needed
        super().__init__(f"insufficient peaks: found {count}, need at least {needed}")


class RankDeficientError(EtalonError):
    def __init__(self, iteration, rank, columns):
        self.iteration = iteration
        self.rank = rank
        self.columns = columns
        super().__init__(
            f"rank-deficient least-squares system at iteration {iteration} "
            f"(rank {rank} < {columns} unknowns)"
        )


class SearchSpaceTooLarge(EtalonError):
    pass


class OutOfReflectorsError(EtalonError):
    pass


class ConfigError(EtalonError, ValueError):
    """A run configuration is malformed; the message names the offending key."""
