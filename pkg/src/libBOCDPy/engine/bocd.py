# "engine/bocd.py" from libBOCDPy by the libBOCDPy Contributors
#
# The exact recursion over (change point duration, run length) pairs. Every table is held in the log domain. W_a(d, r)
# is the joint likelihood of the data with the most recent change point d steps ago and the most recent change, an
# anomaly end, r steps ago. W_c(d) covers the histories with no anomaly since the change point, and Q_c(d) sums both.
# Per step cost grows with the square of the change point search range.

from dataclasses import dataclass

import numpy as np

from ..errors import HorizonError, InputError
from ..model.cache import SegmentCache
from ..shared import (_NEG_INF, _EMPTY_ROW, _log_sum, _normalize_log, _first_argmax, _log_ratio, _column_log_sums)
from .hyperparams import Hyperparams


def r_max(t: int, d: int, delta_t: int) -> int:
    """
    Computes the largest run length that can be shorter than a change point duration of d at time t. Anything below 1
    means that no anomaly fits between the change point and now.

    Parameters
    ----------
    t : int
        The current time step.
    d : int
        The change point duration.
    delta_t : int
        The longest admissible anomaly.

    Returns
    -------
    int
        The bound, possibly negative.
    """
    if d == t - 1:
        return d - 1
    return d - delta_t - 1


def a_max(t: int, d: int, delta_t: int) -> int:
    """
    Computes the largest admissible run length at t - 1 for an anomaly that ends at t, given a change point duration of
    d at time t.

    Parameters
    ----------
    t : int
        The current time step.
    d : int
        The change point duration.
    delta_t : int
        The longest admissible anomaly.

    Returns
    -------
    int
        The bound, possibly negative.
    """
    return min(delta_t - 1, r_max(t, d, delta_t) - 1)


def _growth_log_factors(t: int, n: int, hp: Hyperparams) -> np.ndarray:
    # Prior factor for a segment that started d = 1..n steps ago and did not change at t. Right after a start-type
    # change the anomaly-end probability q0 applies instead of p0, except for the series start at time 1.
    d = np.arange(1, n + 1)
    return np.where((d > hp.delta_t) | (d == t - 1), np.log1p(-hp.p0), np.log1p(-hp.q0))


def _change_birth_base(prev: np.ndarray, t: int, delta_t: int) -> float:
    # Mass at t - 1 that may be followed by a change point at t.
    if t >= delta_t + 3:
        return _log_sum(prev[delta_t:])
    if t - 2 < len(prev):
        return float(prev[t - 2])
    return _NEG_INF


def _truncation_length(log_mass: np.ndarray, hp: Hyperparams) -> int:
    """
    Finds the last index to keep when the posterior tail beyond it carries less than trunc_mass, never going below
    min_range_len entries. Private function used by both recursions.
    """
    n = len(log_mass) - 1
    if hp.trunc_mass is None:
        return n
    probs = _normalize_log(log_mass)
    beyond = np.append(np.cumsum(probs[::-1])[::-1][1:], 0.0)
    cut = int(np.argmax(beyond < hp.trunc_mass))
    return min(n, max(cut, hp.min_range_len - 1))


@dataclass(frozen=True, eq=False)
class BocdState:
    """
    The recursion tables at one time step. Instances are never modified after construction, so a state can be stored
    in a checkpoint and stepped again later.

    Attributes
    ----------
    t : int
        The current time step, in effective time (removed observations do not count).
    n_a : int
        The anomaly search range holds run lengths 0 to n_a.
    n_c : int
        The change point search range holds durations 0 to n_c.
    log_wa : tuple[np.ndarray, ...]
        Row d holds log W_a(d, r) for r = 0 .. r_max(t, d) - 1. Rows with no admissible r are empty.
    log_wc : np.ndarray
        log W_c(d) for d = 0 .. n_c.
    log_qc : np.ndarray
        log Q_c(d) for d = 0 .. n_c.
    q_history : tuple[np.ndarray, ...]
        The last delta_t + 1 log Q_c vectors, oldest first. The last one is log_qc.
    seg_log_l : np.ndarray
        Log marginal likelihoods of the delta_t shortest segments that end now.
    wc_history : tuple[tuple[int, np.ndarray], ...]
        Pairs of a past time step and the first delta_t entries of log W_c at that time.
    """
    t: int
    n_a: int
    n_c: int
    log_wa: tuple
    log_wc: np.ndarray
    log_qc: np.ndarray
    q_history: tuple
    seg_log_l: np.ndarray
    wc_history: tuple

    def wa(self, d: int, r: int) -> float:
        """Returns log W_a(d, r), or -inf for a cell that does not exist."""
        if 0 <= d <= self.n_c and 0 <= r < len(self.log_wa[d]):
            return float(self.log_wa[d][r])
        return _NEG_INF

    def wc(self, d: int) -> float:
        if 0 <= d <= self.n_c:
            return float(self.log_wc[d])
        return _NEG_INF

    def qc(self, d: int) -> float:
        if 0 <= d <= self.n_c:
            return float(self.log_qc[d])
        return _NEG_INF

    def wc_at(self, time: int) -> np.ndarray:
        """
        Looks up the stored leading entries of log W_c at an earlier time step.

        Parameters
        ----------
        time : int
            The effective time step to look up.

        Returns
        -------
        np.ndarray
            The first delta_t entries of log W_c at that time.
        """
        for when, values in reversed(self.wc_history):
            if when == time:
                return values
        raise HorizonError(f"W_c at time {time} is no longer retained (current time {self.t}).")


def bocd_init(cache: SegmentCache, hp: Hyperparams) -> BocdState:
    """
    Creates the tables after the first observation.

    Parameters
    ----------
    cache : SegmentCache
        The segment cache holding only the first observation.
    hp : Hyperparams
        The hyperparameters.

    Returns
    -------
    BocdState
        The state at time 1.
    """
    if cache.t != 1:
        raise InputError(f"The recursion starts from a cache at time 1, got time {cache.t}.")
    first = np.array([cache.log_l[0]])
    return BocdState(t=1, n_a=0, n_c=0, log_wa=(_EMPTY_ROW,), log_wc=first, log_qc=first.copy(),
                     q_history=(first,), seg_log_l=cache.log_l[:hp.delta_t].copy(),
                     wc_history=((1, first[:hp.delta_t].copy()),))


def _anomaly_births(state: BocdState, cache: SegmentCache, hp: Hyperparams, t: int, n_c: int) -> np.ndarray:
    # log W_a(d, 0) for every d: an anomaly of r' + 1 points ends at t, started right after t - 2 - r', and the change
    # point before it is d steps back. Each r' adds one shifted slice of an older Q_c vector.
    births = np.full(n_c + 1, _NEG_INF)
    log_q0 = np.log(hp.q0)
    log_stay = np.log1p(-hp.q0)
    head = cache.log_l[0] + np.log(hp.p0)
    for rp in range(min(hp.delta_t, len(state.seg_log_l), len(state.q_history) - 1)):
        source = state.q_history[-(rp + 2)]
        const = state.seg_log_l[rp] + head + rp * log_stay + log_q0
        lo = rp + hp.delta_t + 2
        hi = min(n_c, t - 2, len(source) + 1 + rp)
        if hi >= lo:
            births[lo:hi + 1] = np.logaddexp(births[lo:hi + 1], source[lo - 2 - rp:hi - 1 - rp] + const)
        # The change point at time 1 may sit right before the anomaly.
        if t - 1 <= n_c and rp <= t - 3 and t - 3 - rp < len(source):
            births[t - 1] = np.logaddexp(births[t - 1], source[t - 3 - rp] + const)
    return births


def bocd_step(state: BocdState, cache: SegmentCache, hp: Hyperparams) -> BocdState:
    """
    Advances the tables by one observation.

    Parameters
    ----------
    state : BocdState
        The state at time t - 1.
    cache : SegmentCache
        The segment cache at time t, holding at most state.n_c + 2 segments.
    hp : Hyperparams
        The hyperparameters.

    Returns
    -------
    BocdState
        The state at time t.
    """
    t = state.t + 1
    if cache.t != t:
        raise InputError(f"Segment cache is at time {cache.t} but the recursion expects time {t}.")
    n_c = len(cache) - 1
    if n_c > state.n_c + 1:
        raise InputError(f"Segment cache holds {n_c + 1} segments but at most {state.n_c + 2} are usable.")
    log_p0 = np.log(hp.p0)
    log_stay = np.log1p(-hp.p0)

    log_wc = np.empty(n_c + 1)
    log_wc[0] = _change_birth_base(state.log_qc, t, hp.delta_t) + cache.log_l[0] + log_p0
    log_wc[1:] = state.log_wc[:n_c] + cache.log_p[1:] + _growth_log_factors(t, n_c, hp)

    births = _anomaly_births(state, cache, hp, t, n_c)
    rows = []
    log_qc = log_wc.copy()
    for d in range(n_c + 1):
        limit = r_max(t, d, hp.delta_t)
        if limit < 1:
            rows.append(_EMPTY_ROW)
            continue
        row = np.empty(limit)
        row[0] = births[d]
        if limit > 1:
            row[1:] = state.log_wa[d - 1] + cache.log_p[1:limit] + log_stay
        rows.append(row)
        log_qc[d] = np.logaddexp(_log_sum(row), log_wc[d])

    keep = _truncation_length(log_qc, hp)
    if keep < n_c:
        n_c = keep
        log_wc, log_qc, rows = log_wc[:n_c + 1], log_qc[:n_c + 1], rows[:n_c + 1]
    n_a = min(state.n_a + 1, hp.u_a, n_c)
    horizon = hp.checkpoint_horizon
    return BocdState(t=t, n_a=n_a, n_c=n_c, log_wa=tuple(rows), log_wc=log_wc, log_qc=log_qc,
                     q_history=(state.q_history + (log_qc,))[-(hp.delta_t + 1):],
                     seg_log_l=cache.log_l[:hp.delta_t].copy(),
                     wc_history=(state.wc_history + ((t, log_wc[:hp.delta_t].copy()),))[-horizon:])


def _run_length_log_mass(state: BocdState) -> tuple[np.ndarray, np.ndarray]:
    # Column sums of W_a (anomaly-end mass per run length) and the total mass per run length.
    anomaly = _column_log_sums(state.log_wa, state.n_c + 1)
    return anomaly, np.logaddexp(anomaly, state.log_wc)


def posterior_run_length(state: BocdState) -> tuple[np.ndarray, int]:
    """
    Computes the posterior distribution of the run length, the time since the most recent change of any kind.

    Parameters
    ----------
    state : BocdState
        The current state.

    Returns
    -------
    tuple[np.ndarray, int]
        The posterior over run lengths 0 to n_c, and its MAP index r*.
    """
    _, total = _run_length_log_mass(state)
    return _normalize_log(total), _first_argmax(total)


def posterior_change_point(state: BocdState) -> np.ndarray:
    """
    Computes the posterior distribution of the time since the most recent change point.
    """
    return _normalize_log(state.log_qc)


def _anomaly_window(r_star: int, delta_t: int) -> slice:
    return slice(max(0, r_star - delta_t), r_star + 1)


def anomaly_posterior(state: BocdState, r_star: int, hp: Hyperparams) -> float | None:
    """
    Computes the posterior probability that the most recent change is an anomaly end, given that it lies within
    delta_t steps before the MAP change.

    Parameters
    ----------
    state : BocdState
        The current state.
    r_star : int
        The MAP run length.
    hp : Hyperparams
        The hyperparameters.

    Returns
    -------
    float or None
        The probability, or None when r_star is outside the anomaly search range and nothing can be checked.
    """
    if r_star > state.n_a:
        return None
    anomaly, total = _run_length_log_mass(state)
    window = _anomaly_window(r_star, hp.delta_t)
    return _log_ratio(_log_sum(anomaly[window]), _log_sum(total[window]))


def anomaly_endpoints_sequential(state: BocdState, r_star: int, hp: Hyperparams) -> tuple[int, int]:
    """
    Locates the most recent anomaly. The end offset r1 maximises the anomaly-end mass inside the window before r_star,
    and the duration offset r2 maximises the W_c values stored when the anomaly's last point arrived. The anomaly then
    covers effective times (t - r1 - 1) - r2 to t - r1 - 1.

    Parameters
    ----------
    state : BocdState
        The current state.
    r_star : int
        The MAP run length.
    hp : Hyperparams
        The hyperparameters.

    Returns
    -------
    tuple[int, int]
        The offsets (r1, r2).
    """
    anomaly, _ = _run_length_log_mass(state)
    window = _anomaly_window(r_star, hp.delta_t)
    r1 = window.start + _first_argmax(anomaly[window])
    last = state.t - r1 - 1
    stored = state.wc_at(last)
    limit = max(0, min(hp.delta_t - 1, last - 2, len(stored) - 1))
    r2 = _first_argmax(stored[:limit + 1])
    return r1, r2


def map_change_point(state: BocdState, delta: int) -> tuple[int, float]:
    """
    Finds the MAP change point duration and the posterior mass within delta steps of it.

    Parameters
    ----------
    state : BocdState
        The current state.
    delta : int
        The localization tolerance.

    Returns
    -------
    tuple[int, float]
        The MAP duration d* and the windowed posterior probability.
    """
    d_star = _first_argmax(state.log_qc)
    window = slice(max(0, d_star - delta), d_star + delta + 1)
    return d_star, _log_ratio(_log_sum(state.log_qc[window]), _log_sum(state.log_qc))


class BocdEngine:
    """
    Adapter that gives the quadratic recursion the interface the detector drives.

    Attributes
    ----------
    hp : Hyperparams
        The hyperparameters.
    """
    name = "bocd"
    detects_anomalies = True

    def __init__(self, hp: Hyperparams):
        self.hp = hp

    def init(self, cache: SegmentCache) -> BocdState:
        return bocd_init(cache, self.hp)

    def step(self, state: BocdState, cache: SegmentCache) -> BocdState:
        return bocd_step(state, cache, self.hp)

    def run_length_posterior(self, state: BocdState) -> np.ndarray:
        return posterior_run_length(state)[0]

    def most_recent_change(self, state: BocdState) -> int:
        return posterior_run_length(state)[1]

    def anomaly_probability(self, state: BocdState, r_star: int) -> float | None:
        return anomaly_posterior(state, r_star, self.hp)

    def anomaly_endpoints(self, state: BocdState, r_star: int) -> tuple[int, int]:
        return anomaly_endpoints_sequential(state, r_star, self.hp)

    def change_point(self, state: BocdState) -> tuple[int, float]:
        return map_change_point(state, self.hp.delta)

    def table_size(self, state: BocdState) -> int:
        """Number of log-probability cells the state holds."""
        return sum(len(row) for row in state.log_wa) + len(state.log_wc) + len(state.log_qc)
