"""Standard normal CDF and quantile."""

import math
from statistics import NormalDist

_STD = NormalDist()


def normal_cdf(x: float) -> float:
    """Phi(x) through the complementary error function.

    ``erfc`` keeps full relative precision in both tails, so
    ``normal_cdf(-x) == 1 - normal_cdf(x)`` to rounding.
    """
    x = float(x)
    if math.isnan(x):
        raise ValueError("normal_cdf of NaN")
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_upper_tail(x: float) -> float:
    """1 - Phi(x) without cancellation for large x."""
    return normal_cdf(-x)


def normal_quantile(a: float) -> float:
    """Upper-tail quantile ``z_a`` with ``P(N(0,1) > z_a) = a``.

    >>> round(normal_quantile(0.05), 4)
    1.6449
    """
    a = float(a)
    if not 0.0 < a < 1.0:
        raise ValueError(f"tail probability must lie in (0, 1), got {a}")
    return _STD.inv_cdf(1.0 - a) if a >= 0.5 else -_STD.inv_cdf(a)
