"""Special functions in sign-tracked log space.

Rising and falling factorial powers of a real base with an integer order,
log-gamma, and the large-order asymptotics of ratios of rising factorials.
Negative bases are handled by multiplying out the factors that sit left of
zero; everything to the right of zero goes through ``lgamma``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

# below this order the product is cheaper and slightly more accurate than lgamma
_DIRECT_ORDER = 32


@dataclass(frozen=True)
class LogValue:
    """A real number stored as ``sign * exp(log_magnitude)``.

    ``sign == 0`` encodes an exact zero; ``log_magnitude`` is then ignored
    (conventionally ``-inf``).
    """

    log_magnitude: float
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign}")

    @classmethod
    def from_float(cls, x: float) -> "LogValue":
        if x == 0:
            return ZERO
        return cls(math.log(abs(x)), 1 if x > 0 else -1)

    @property
    def value(self) -> float:
        """Plain float; overflows to +-inf and underflows to 0."""
        if self.sign == 0:
            return 0.0
        if self.log_magnitude > 709.78:
            return self.sign * math.inf
        return self.sign * math.exp(self.log_magnitude)

    def __float__(self) -> float:
        return self.value

    def __mul__(self, other: "LogValue") -> "LogValue":
        if self.sign == 0 or other.sign == 0:
            return ZERO
        return LogValue(self.log_magnitude + other.log_magnitude, self.sign * other.sign)

    def __truediv__(self, other: "LogValue") -> "LogValue":
        if other.sign == 0:
            raise ZeroDivisionError("division by an exact zero LogValue")
        if self.sign == 0:
            return ZERO
        return LogValue(self.log_magnitude - other.log_magnitude, self.sign * other.sign)

    def __neg__(self) -> "LogValue":
        return LogValue(self.log_magnitude, -self.sign)


ZERO = LogValue(-math.inf, 0)
ONE = LogValue(0.0, 1)


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"log_gamma needs x > 0, got {x!r}")
    return math.lgamma(x)


def log_beta(x: float, y: float) -> float:
    if not (x > 0 and y > 0):
        raise DomainError(f"log_beta needs positive arguments, got {x!r}, {y!r}")
    return math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y)


def _direct_product(x: float, k: int) -> LogValue:
    log_mag = 0.0
    sign = 1
    for j in range(k):
        f = x + j
        if f == 0:
            return ZERO
        if f < 0:
            sign = -sign
        log_mag += math.log(abs(f))
    return LogValue(log_mag, sign)


def rising(x: float, k: int) -> LogValue:
    """Rising factorial power x (x+1) ... (x+k-1); order 0 gives 1."""
    if k < 0:
        raise DomainError(f"order must be non-negative, got {k}")
    if k == 0:
        return ONE
    if x > 0:
        if k <= _DIRECT_ORDER:
            return _direct_product(x, k)
        return LogValue(math.lgamma(x + k) - math.lgamma(x), 1)
    # factors x, x+1, ... through the first one that is >= 0 (zero for integer x)
    n_neg = min(k, math.floor(-x) + 1)
    head = _direct_product(x, n_neg)
    if head.sign == 0 or n_neg == k:
        return head
    return head * rising(x + n_neg, k - n_neg)


def falling(x: float, k: int) -> LogValue:
    """Falling factorial power x (x-1) ... (x-k+1) = (-1)^k (-x)^(rising k)."""
    r = rising(-x, k)
    return -r if k % 2 else r


def rising_float(x: float, k: int) -> float:
    return rising(x, k).value


def falling_float(x: float, k: int) -> float:
    return falling(x, k).value


def rising_ratio(x: float, k: int, y: float, j: int) -> float:
    """x^(rising k) / y^(rising j) as a float, computed in log space."""
    return (rising(x, k) / rising(y, j)).value


def log_rising_array(x: float, k: np.ndarray) -> np.ndarray:
    """Vectorised ln(x^(rising k)) for x > 0 and integer orders k >= 0."""
    if not x > 0:
        raise DomainError(f"log_rising_array needs x > 0, got {x!r}")
    k = np.asarray(k, dtype=float)
    return gammaln(x + k) - gammaln(x)


def log_binomial_array(m: int, k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return gammaln(m + 1.0) - gammaln(k + 1.0) - gammaln(m - k + 1.0)


def rising_ratio_asymptotic(a: float, b: float, z: int, n: int) -> float:
    """Large-n approximation (Gamma(b)/Gamma(a)) n^(a-b-z) of a^(rising n) / b^(rising n+z)."""
    if not (a > 0 and b > 0):
        raise DomainError(f"a and b must be positive, got {a!r}, {b!r}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return math.exp(math.lgamma(b) - math.lgamma(a) + (a - b - z) * math.log(n))
