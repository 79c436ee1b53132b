# "engine/bocd_ar.py" from libBOCDPy by the libBOCDPy Contributors
#
# The linear-cost recursion used together with anomaly removal. Once anomalies are removed as soon as they are found,
# the most recent change is a change point, so the time since the last change point is approximated by the run length
# and only vectors over run lengths need to be kept: H_a(r) when the most recent change is an anomaly end and H_c(r)
# when it is a start-type change. G(r', r) optionally splits H_a by the duration offset of the anomaly that ended.

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, HorizonError, InputError
from ..model.cache import SegmentCache
from ..shared import _NEG_INF, _log_sum, _normalize_log, _first_argmax, _log_ratio
from .bocd import _growth_log_factors, _change_birth_base, _truncation_length, _anomaly_window
from .hyperparams import Hyperparams


@dataclass(frozen=True, eq=False)
class BocdArState:
    """
    The linear recursion vectors at one time step.

    Attributes
    ----------
    t : int
        The current time step, in effective time.
    n_a : int
        The anomaly search range holds run lengths 0 to n_a.
    n_c : int
        The change point search range holds run lengths 0 to n_c.
    log_ha : np.ndarray
        log H_a(r) for r = 0 .. n_c.
    log_hc : np.ndarray
        log H_c(r) for r = 0 .. n_c.
    log_g : np.ndarray, optional
        log G(r', r) stored as an (n_a + 1, delta_t) array indexed [r, r']. Cells past the admissible duration offset
        hold -inf. None unless joint endpoints are enabled.
    hc_history : tuple[tuple[int, np.ndarray], ...]
        Pairs of a past time step and the first delta_t entries of log H_c at that time.
    """
    t: int
    n_a: int
    n_c: int
    log_ha: np.ndarray
    log_hc: np.ndarray
    log_g: np.ndarray | None
    hc_history: tuple

    def g(self, r_prime: int, r: int) -> float:
        """Returns log G(r', r), or -inf for a cell that does not exist."""
        if self.log_g is None:
            raise ConfigError("G is only maintained when joint endpoints are enabled.")
        if 0 <= r < self.log_g.shape[0] and 0 <= r_prime < self.log_g.shape[1]:
            return float(self.log_g[r, r_prime])
        return _NEG_INF

    def hc_at(self, time: int) -> np.ndarray:
        """
        Looks up the stored leading entries of log H_c at an earlier time step.
        """
        for when, values in reversed(self.hc_history):
            if when == time:
                return values
        raise HorizonError(f"H_c at time {time} is no longer retained (current time {self.t}).")


def ar_init(cache: SegmentCache, hp: Hyperparams, joint: bool = False) -> BocdArState:
    """
    Creates the vectors after the first observation.

    Parameters
    ----------
    cache : SegmentCache
        The segment cache holding only the first observation.
    hp : Hyperparams
        The hyperparameters.
    joint : bool
        Whether to maintain G for joint endpoints and the joint anomaly posterior.

    Returns
    -------
    BocdArState
        The state at time 1.
    """
    if cache.t != 1:
        raise InputError(f"The recursion starts from a cache at time 1, got time {cache.t}.")
    log_hc = np.array([cache.log_l[0]])
    log_g = np.full((1, hp.delta_t), _NEG_INF) if joint else None
    return BocdArState(t=1, n_a=0, n_c=0, log_ha=np.array([_NEG_INF]), log_hc=log_hc, log_g=log_g,
                       hc_history=((1, log_hc[:hp.delta_t].copy()),))


def ar_step(state: BocdArState, cache: SegmentCache, hp: Hyperparams) -> BocdArState:
    """
    Advances the vectors, and G when it is maintained, by one observation.

    Parameters
    ----------
    state : BocdArState
        The state at time t - 1.
    cache : SegmentCache
        The segment cache at time t, holding at most state.n_c + 2 segments.
    hp : Hyperparams
        The hyperparameters.

    Returns
    -------
    BocdArState
        The state at time t.
    """
    t = state.t + 1
    if cache.t != t:
        raise InputError(f"Segment cache is at time {cache.t} but the recursion expects time {t}.")
    n_c = len(cache) - 1
    if n_c > state.n_c + 1:
        raise InputError(f"Segment cache holds {n_c + 1} segments but at most {state.n_c + 2} are usable.")
    log_stay = np.log1p(-hp.p0)
    log_q0 = np.log(hp.q0)
    # Largest run length at t - 1 of an anomaly that ends now.
    a_limit = min(hp.delta_t - 1, t - 3)

    log_hc = np.empty(n_c + 1)
    log_hc[0] = (np.logaddexp(_change_birth_base(state.log_hc, t, hp.delta_t), _log_sum(state.log_ha))
                 + cache.log_l[0] + np.log(hp.p0))
    log_hc[1:] = state.log_hc[:n_c] + cache.log_p[1:] + _growth_log_factors(t, n_c, hp)

    log_ha = np.empty(n_c + 1)
    birth_terms = state.log_hc[:a_limit + 1] + cache.log_l[0] + log_q0 if a_limit >= 0 else np.empty(0)
    log_ha[0] = _log_sum(birth_terms)
    log_ha[1:] = state.log_ha[:n_c] + cache.log_p[1:] + log_stay

    keep = _truncation_length(np.logaddexp(log_ha, log_hc), hp)
    if keep < n_c:
        n_c = keep
        log_ha, log_hc = log_ha[:n_c + 1], log_hc[:n_c + 1]
    n_a = min(state.n_a + 1, hp.u_a, n_c)

    log_g = None
    if state.log_g is not None:
        log_g = np.full((n_a + 1, hp.delta_t), _NEG_INF)
        log_g[0, :len(birth_terms)] = birth_terms
        if n_a:
            log_g[1:] = state.log_g[:n_a] + cache.log_p[1:n_a + 1, None] + log_stay

    return BocdArState(t=t, n_a=n_a, n_c=n_c, log_ha=log_ha, log_hc=log_hc, log_g=log_g,
                       hc_history=(state.hc_history + ((t, log_hc[:hp.delta_t].copy()),))[-hp.checkpoint_horizon:])


def _total_log_mass(state: BocdArState) -> np.ndarray:
    return np.logaddexp(state.log_ha, state.log_hc)


def ar_posterior_run_length(state: BocdArState) -> tuple[np.ndarray, int]:
    """
    Computes the posterior distribution of the run length.

    Parameters
    ----------
    state : BocdArState
        The current state.

    Returns
    -------
    tuple[np.ndarray, int]
        The posterior over run lengths 0 to n_c, and its MAP index r*.
    """
    total = _total_log_mass(state)
    return _normalize_log(total), _first_argmax(total)


def ar_anomaly_posterior_fast(state: BocdArState, r_star: int, hp: Hyperparams) -> float | None:
    """
    Computes the posterior probability that the most recent change is an anomaly end, given that it lies within
    delta_t steps before r_star. Returns None when r_star is outside the anomaly search range.
    """
    if r_star > state.n_a:
        return None
    window = _anomaly_window(r_star, hp.delta_t)
    return _log_ratio(_log_sum(state.log_ha[window]), _log_sum(_total_log_mass(state)[window]))


def _joint_numerator_cells(state: BocdArState, r_star: int, hp: Hyperparams) -> np.ndarray:
    # G cells whose anomaly ends inside the window and starts no later than t - r_star.
    window = _anomaly_window(r_star, hp.delta_t)
    cells = state.log_g[window].copy()
    offsets = np.arange(hp.delta_t)
    for i, r in enumerate(range(window.start, window.stop)):
        cells[i, offsets < r_star - r - 1] = _NEG_INF
    return cells


def ar_anomaly_posterior_joint(state: BocdArState, r_star: int, hp: Hyperparams) -> float | None:
    """
    Computes the posterior probability that an anomaly ends inside the window before r_star and also started no later
    than t - r_star, which is the event the fast variant approximates. Needs G.

    Parameters
    ----------
    state : BocdArState
        The current state.
    r_star : int
        The MAP run length.
    hp : Hyperparams
        The hyperparameters.

    Returns
    -------
    float or None
        The probability, or None when r_star is outside the anomaly search range.
    """
    if state.log_g is None:
        raise ConfigError("The joint anomaly posterior needs G, which is only kept in joint mode.")
    if r_star > state.n_a:
        return None
    window = _anomaly_window(r_star, hp.delta_t)
    numerator = _log_sum(_joint_numerator_cells(state, r_star, hp))
    return _log_ratio(numerator, _log_sum(_total_log_mass(state)[window]))


def ar_anomaly_endpoints(state: BocdArState, r_star: int, hp: Hyperparams, mode: str = "sequential") \
        -> tuple[int, int]:
    """
    Locates the most recent anomaly inside the window before r_star. The anomaly covers effective times
    (t - r1 - 1) - r2 to t - r1 - 1.

    Parameters
    ----------
    state : BocdArState
        The current state.
    r_star : int
        The MAP run length.
    hp : Hyperparams
        The hyperparameters.
    mode : str
        "sequential" picks r1 from H_a and then r2 from the stored H_c at the anomaly's last point. "joint" picks both
        at once from G; ties go to the smallest (r1, r2).

    Returns
    -------
    tuple[int, int]
        The offsets (r1, r2).
    """
    window = _anomaly_window(r_star, hp.delta_t)
    if mode == "joint":
        if state.log_g is None:
            raise ConfigError("Joint endpoints need G, which is only kept in joint mode.")
        cells = state.log_g[window]
        row, col = np.unravel_index(_first_argmax(cells.reshape(-1)), cells.shape)
        return window.start + int(row), int(col)
    if mode != "sequential":
        raise ValueError(f"Unknown endpoint mode: {mode!r}.")
    r1 = window.start + _first_argmax(state.log_ha[window])
    last = state.t - r1 - 1
    stored = state.hc_at(last)
    limit = max(0, min(hp.delta_t - 1, last - 2, len(stored) - 1))
    return r1, _first_argmax(stored[:limit + 1])


def ar_change_window_posterior(state: BocdArState, r_star: int, delta: int) -> float:
    """
    Computes the posterior mass of run lengths within delta steps of r_star.
    """
    total = _total_log_mass(state)
    window = slice(max(0, r_star - delta), r_star + delta + 1)
    return _log_ratio(_log_sum(total[window]), _log_sum(total))


class BocdArEngine:
    """
    Adapter that gives the linear recursion the interface the detector drives.

    Attributes
    ----------
    hp : Hyperparams
        The hyperparameters.
    endpoint_mode : str
        "sequential" (the default) or "joint". Joint mode maintains G and uses it both for the anomaly posterior and
        for the endpoints.
    """
    name = "bocd-ar"
    detects_anomalies = True

    def __init__(self, hp: Hyperparams, endpoint_mode: str = "sequential"):
        if endpoint_mode not in ("sequential", "joint"):
            raise ValueError(f"Unknown endpoint mode: {endpoint_mode!r}.")
        self.hp = hp
        self.endpoint_mode = endpoint_mode

    @property
    def joint(self) -> bool:
        return self.endpoint_mode == "joint"

    def init(self, cache: SegmentCache) -> BocdArState:
        return ar_init(cache, self.hp, joint=self.joint)

    def step(self, state: BocdArState, cache: SegmentCache) -> BocdArState:
        return ar_step(state, cache, self.hp)

    def run_length_posterior(self, state: BocdArState) -> np.ndarray:
        return ar_posterior_run_length(state)[0]

    def most_recent_change(self, state: BocdArState) -> int:
        return ar_posterior_run_length(state)[1]

    def anomaly_probability(self, state: BocdArState, r_star: int) -> float | None:
        if self.joint:
            return ar_anomaly_posterior_joint(state, r_star, self.hp)
        return ar_anomaly_posterior_fast(state, r_star, self.hp)

    def anomaly_endpoints(self, state: BocdArState, r_star: int) -> tuple[int, int]:
        return ar_anomaly_endpoints(state, r_star, self.hp, self.endpoint_mode)

    def change_point(self, state: BocdArState) -> tuple[int, float]:
        r_star = self.most_recent_change(state)
        return r_star, ar_change_window_posterior(state, r_star, self.hp.delta)

    def table_size(self, state: BocdArState) -> int:
        extra = 0 if state.log_g is None else state.log_g.size
        return len(state.log_ha) + len(state.log_hc) + extra
