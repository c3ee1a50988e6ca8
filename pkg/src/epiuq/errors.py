"""Exception types shared across the package."""


class EpiuqError(Exception):
    """Base class for all package errors."""


class ConfigError(EpiuqError, ValueError):
    """Invalid configuration: bad shapes, inconsistent parameters, bad setup."""


class DomainError(EpiuqError, ValueError):
    """Input value outside the mathematical domain of an operation."""


class NumericsError(EpiuqError, RuntimeError):
    """Non-finite values or a failed numerical solve during time stepping.

    Carries enough context (step / stage / node) to locate the failure.
    """

    def __init__(self, message: str, *, step: int | None = None,
                 stage: int | None = None, node: int | None = None):
        parts = [message]
        if step is not None:
            parts.append(f"step={step}")
        if stage is not None:
            parts.append(f"stage={stage}")
        if node is not None:
            parts.append(f"node={node}")
        super().__init__(" ".join(parts))
        self.step = step
        self.stage = stage
        self.node = node


class UndefinedReproductionNumber(EpiuqError, ZeroDivisionError):
    """A reproduction-number denominator integral vanished."""


class RankDeficiencyError(EpiuqError, RuntimeError):
    """Candidate snapshot set ran out of numerically independent directions.

    ``achievable`` is the number of picks that succeeded before the residual
    diagonal dropped below threshold.
    """

    def __init__(self, message: str, achievable: int):
        super().__init__(f"{message} (achievable selection size: {achievable})")
        self.achievable = achievable


class ConditioningError(EpiuqError, RuntimeError):
    """Stored Gramian factor is too ill-conditioned to solve against."""
