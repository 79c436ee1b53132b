# "bound/hyperbound.py" from libBOCDPy by the libBOCDPy Contributors
#
# Guidance for choosing q0 and lambda_a. Right after a change point the anomaly posterior is at least the spurious
# alarm rate below, whatever the data, so lambda_a must stay above it. The rate increases with q0, which turns the
# condition into an upper bound on q0 found by bisection.

from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..errors import ConfigError
from ..shared import _check_probability


_BISECTION_STEPS = 200
_BISECTION_TOL = 1e-10


@dataclass(frozen=True)
class BoundQuery:
    """
    The inputs of the spurious alarm bound.

    Attributes
    ----------
    p0 : float
        Prior change probability.
    q0 : float
        Prior anomaly-end probability.
    delta_t : int
        The longest admissible anomaly.
    lambda_a : float
        The anomaly posterior threshold.
    """
    p0: float
    q0: float
    delta_t: int
    lambda_a: float = 0.5

    def __post_init__(self):
        _check_probability("p0", self.p0)
        _check_probability("q0", self.q0)
        _check_probability("lambda_a", self.lambda_a)
        if self.delta_t < 1:
            raise ConfigError(f"delta_t must be at least 1, got {self.delta_t}.")

    @property
    def satisfied(self) -> bool:
        """Whether lambda_a lies above the spurious alarm rate."""
        return spurious_alarm_rate(self.p0, self.q0, self.delta_t) < self.lambda_a


def spurious_alarm_rate(p0: float, q0, delta_t: int):
    """
    Computes the anomaly posterior that a clean change point produces delta_t steps after it happened, before the data
    has any say. Accepts an array of q0 values.

    Parameters
    ----------
    p0 : float
        Prior change probability.
    q0 : float or np.ndarray
        Prior anomaly-end probability.
    delta_t : int
        The longest admissible anomaly.

    Returns
    -------
    float or np.ndarray
        The rate, strictly between 0 and 1 and increasing in q0.
    """
    q = np.asarray(q0, dtype=float)
    i = np.arange(delta_t)
    stay_q = (1.0 - q)[..., None] ** i
    stay_p = (1.0 - p0) ** (delta_t - 1 - i)
    ends = q * np.sum(stay_q * stay_p, axis=-1)
    rate = ends / (ends + (1.0 - q) ** delta_t)
    return float(rate) if rate.ndim == 0 else rate


def q0_upper_bound(p0: float, delta_t: int, lambda_a: float) -> float:
    """
    Finds the q0 at which the spurious alarm rate reaches lambda_a. Every smaller q0 keeps the rate strictly below it.

    Parameters
    ----------
    p0 : float
        Prior change probability.
    delta_t : int
        The longest admissible anomaly.
    lambda_a : float
        The anomaly posterior threshold.

    Returns
    -------
    float
        The upper bound on q0.
    """
    _check_probability("p0", p0)
    _check_probability("lambda_a", lambda_a)
    if delta_t < 1:
        raise ConfigError(f"delta_t must be at least 1, got {delta_t}.")
    lo, hi = 0.0, 1.0
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if spurious_alarm_rate(p0, mid, delta_t) < lambda_a:
            lo = mid
        else:
            hi = mid
        if hi - lo < _BISECTION_TOL:
            break
    return 0.5 * (lo + hi)


def lambda_a_lower_bound(p0: float, q0: float, delta_t: int) -> float:
    """
    Returns the smallest lambda_a that keeps spurious alarms from being triggered by the prior alone. Any threshold
    above it satisfies the bound.
    """
    BoundQuery(p0, q0, delta_t)
    return spurious_alarm_rate(p0, q0, delta_t)


def bound_table(p0_values, delta_t_values, lambda_a_values) -> pd.DataFrame:
    """
    Tabulates the q0 upper bound over a grid of settings.

    Parameters
    ----------
    p0_values : iterable of float
        Prior change probabilities.
    delta_t_values : iterable of int
        Longest admissible anomalies.
    lambda_a_values : iterable of float
        Anomaly posterior thresholds.

    Returns
    -------
    pd.DataFrame
        One row per combination with columns p0, delta_t, lambda_a and q0_upper_bound.
    """
    rows = [{"p0": p0, "delta_t": dt, "lambda_a": lam, "q0_upper_bound": q0_upper_bound(p0, dt, lam)}
            for p0 in p0_values for dt in delta_t_values for lam in lambda_a_values]
    return pd.DataFrame(rows, columns=["p0", "delta_t", "lambda_a", "q0_upper_bound"])
