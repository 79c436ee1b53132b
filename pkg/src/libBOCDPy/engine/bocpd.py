# "engine/bocpd.py" from libBOCDPy by the libBOCDPy Contributors
#
# The classical run length recursion with a constant hazard, used as the baseline in benchmarks. It has no notion of
# anomalies, so every short anomalous segment shows up as a pair of change points.

from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from ..model.cache import SegmentCache
from ..shared import _log_sum, _normalize_log, _first_argmax, _log_ratio
from .bocd import _truncation_length
from .hyperparams import Hyperparams


@dataclass(frozen=True, eq=False)
class BocpdState:
    """
    Run length joint likelihoods at one time step.

    Attributes
    ----------
    t : int
        The current time step.
    n_c : int
        The search range holds run lengths 0 to n_c.
    log_r : np.ndarray
        The log joint likelihood of the data and each run length.
    """
    t: int
    n_c: int
    log_r: np.ndarray


def bocpd_init(cache: SegmentCache) -> BocpdState:
    if cache.t != 1:
        raise InputError(f"The recursion starts from a cache at time 1, got time {cache.t}.")
    return BocpdState(t=1, n_c=0, log_r=np.array([cache.log_l[0]]))


def bocpd_step(state: BocpdState, cache: SegmentCache, hp: Hyperparams) -> BocpdState:
    """
    Advances the run length recursion by one observation, with hazard p0.

    Parameters
    ----------
    state : BocpdState
        The state at time t - 1.
    cache : SegmentCache
        The segment cache at time t.
    hp : Hyperparams
        The hyperparameters. Only p0 and the truncation settings are used.

    Returns
    -------
    BocpdState
        The state at time t.
    """
    t = state.t + 1
    if cache.t != t:
        raise InputError(f"Segment cache is at time {cache.t} but the recursion expects time {t}.")
    n_c = len(cache) - 1
    log_r = np.empty(n_c + 1)
    log_r[0] = _log_sum(state.log_r) + cache.log_l[0] + np.log(hp.p0)
    log_r[1:] = state.log_r[:n_c] + cache.log_p[1:] + np.log1p(-hp.p0)
    n_c = _truncation_length(log_r, hp)
    return BocpdState(t=t, n_c=n_c, log_r=log_r[:n_c + 1])


def bocpd_posterior_run_length(state: BocpdState) -> tuple[np.ndarray, int]:
    return _normalize_log(state.log_r), _first_argmax(state.log_r)


def bocpd_change_window_posterior(state: BocpdState, r_star: int, delta: int) -> float:
    window = slice(max(0, r_star - delta), r_star + delta + 1)
    return _log_ratio(_log_sum(state.log_r[window]), _log_sum(state.log_r))


class BocpdEngine:
    """
    Adapter that lets the detector drive the baseline. It never reports anomalies, so the detector only confirms
    change points with it, under the same lag and threshold rules as the other engines.
    """
    name = "bocpd"
    detects_anomalies = False

    def __init__(self, hp: Hyperparams):
        self.hp = hp

    def init(self, cache: SegmentCache) -> BocpdState:
        return bocpd_init(cache)

    def step(self, state: BocpdState, cache: SegmentCache) -> BocpdState:
        return bocpd_step(state, cache, self.hp)

    def run_length_posterior(self, state: BocpdState) -> np.ndarray:
        return bocpd_posterior_run_length(state)[0]

    def most_recent_change(self, state: BocpdState) -> int:
        return bocpd_posterior_run_length(state)[1]

    def anomaly_probability(self, state: BocpdState, r_star: int) -> None:
        return None

    def anomaly_endpoints(self, state: BocpdState, r_star: int) -> tuple[int, int]:
        raise NotImplementedError("The baseline recursion does not locate anomalies.")

    def change_point(self, state: BocpdState) -> tuple[int, float]:
        r_star = self.most_recent_change(state)
        return r_star, bocpd_change_window_posterior(state, r_star, self.hp.delta)

    def table_size(self, state: BocpdState) -> int:
        return len(state.log_r)
