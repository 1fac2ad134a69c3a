"""Small types shared across modules."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum

from .errors import ValidationError

__all__ = ["Averaging", "Method", "ErrorEstimate", "check_half_integer", "is_integer_rotation"]


class Averaging(str, Enum):
    """Which initial states the gate error refers to.

    ``INITIAL_X`` starts from the computational state |g> (the +x Bloch state
    of the frame in which the drive defines the quantization axis);
    ``STATE_AVERAGED`` averages the x, y and z initial states.
    """

    INITIAL_X = "initial_x"
    STATE_AVERAGED = "state_averaged"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(
                f"averaging must be one of {[m.value for m in cls]}, got {value!r}"
            ) from None


class Method(str, Enum):
    MONTE_CARLO = "monte_carlo"
    ANALYTIC = "analytic"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class ErrorEstimate:
    """Gate error with its 1-sigma standard error of the mean."""

    mean_error: float
    std_error: float
    n_trials: int
    method: Method

    def __post_init__(self):
        if self.std_error < 0:
            raise ValidationError("std_error must be >= 0")

    def __float__(self):
        return float(self.mean_error)

    def to_dict(self):
        d = asdict(self)
        d["method"] = self.method.value
        return d


def check_half_integer(N):
    """Return ``N`` as float if it is a positive multiple of 1/2."""
    twoN = 2 * float(N)
    if twoN <= 0 or abs(twoN - round(twoN)) > 1e-9:
        raise ValidationError(f"N must be a positive half-integer (1/2, 1, 3/2, ...), got {N!r}")
    return round(twoN) / 2


def is_integer_rotation(N):
    return round(2 * N) % 2 == 0
