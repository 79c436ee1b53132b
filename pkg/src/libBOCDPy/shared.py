# "shared.py" from libBOCDPy by the libBOCDPy Contributors
#
# This file defines general functions that are useful in other modules of libBOCDPy, mostly small log-domain helpers
# shared by the recursion engines. Putting them here cuts down on clutter in other files.

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError


_NEG_INF = -np.inf
_EMPTY_ROW = np.empty(0, dtype=float)


def _log_sum(values) -> float:
    """
    Sums probabilities held in the log domain. Private function used by other libBOCDPy modules.

    Parameters
    ----------
    values : array_like
        Log probabilities (or log densities). May be empty or contain -inf.

    Returns
    -------
    float
        The log of the summed probabilities, or -inf when nothing carries mass.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return _NEG_INF
    # logsumexp warns on log(0) when every entry is -inf.
    if not np.any(values > _NEG_INF):
        return _NEG_INF
    return float(logsumexp(values))


def _log_add(a: float, b: float) -> float:
    return float(np.logaddexp(a, b))


def _normalize_log(values: np.ndarray) -> np.ndarray:
    """
    Turns a vector of log masses into a probability vector. An all -inf vector is returned as all zeros.
    """
    total = _log_sum(values)
    if total == _NEG_INF:
        return np.zeros(len(values))
    return np.exp(np.asarray(values, dtype=float) - total)


def _first_argmax(values) -> int:
    # np.argmax already returns the first of several equal maxima, which is the tie rule everywhere in the package.
    return int(np.argmax(values))


def _log_ratio(numerator: float, denominator: float) -> float:
    if numerator == _NEG_INF or denominator == _NEG_INF:
        return 0.0
    return float(min(1.0, np.exp(numerator - denominator)))


def _column_log_sums(rows, width: int) -> np.ndarray:
    """
    Sums ragged rows column by column in the log domain. Row ``i`` may be shorter than ``width``; missing cells count as
    -inf. Private function used by the quadratic recursion.

    Parameters
    ----------
    rows : sequence of np.ndarray
        The ragged rows.
    width : int
        The number of columns in the result.

    Returns
    -------
    np.ndarray
        The per-column log sums.
    """
    acc = np.full(width, _NEG_INF)
    for row in rows:
        n = min(len(row), width)
        if n:
            acc[:n] = np.logaddexp(acc[:n], row[:n])
    return acc


def _check_probability(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise ConfigError(f"{name} must be strictly between 0 and 1, got {value}.")


def _check_positive(name: str, value: float) -> None:
    if not value > 0:
        raise ConfigError(f"{name} must be positive, got {value}.")
