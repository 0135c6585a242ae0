"""Resource caps and their defaults."""

from dataclasses import dataclass, replace

from .errors import ResourceGuardError


@dataclass(frozen=True)
class Limits:
    """Upper bounds on matrix dimensions.

    Dense eigensolves are cubic, so both sides of the Gram/dual pair are
    capped. ``max_smooth_order`` bounds Q for the smoothed transfer matrix,
    which is assembled by direct summation.
    """

    max_n: int = 20000
    max_farey: int = 20000
    max_smooth_order: int = 50
    max_trace_power: int = 8


DEFAULT_LIMITS = Limits()


def limits_with(**overrides):
    return replace(DEFAULT_LIMITS, **overrides)


def check_cap(name, value, cap):
    if value > cap:
        raise ResourceGuardError(f"{name}={value} exceeds cap {cap}")
