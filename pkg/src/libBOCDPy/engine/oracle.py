# "engine/oracle.py" from libBOCDPy by the libBOCDPy Contributors
#
# Brute force ground truth for the recursions on very short series. Every history of change indicators is enumerated,
# weighted by its prior probability times the product of independent segment marginal likelihoods, and added into the
# table cells its most recent changes select. Cost doubles with every observation, so series are capped at 12 points.

from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError
from ..model.obsmodel import ObsModelConfig, empty_stats, push, log_marginal
from ..shared import _NEG_INF, _log_sum, _normalize_log, _first_argmax, _log_ratio
from .hyperparams import Hyperparams


MAX_ORACLE_LENGTH = 12


@dataclass(frozen=True)
class PathLaw:
    """
    The prior over change histories, in one of two transcriptions.

    "recursion" follows the branches the chosen recursion actually takes: the tables of the variant decide, through
    the change point duration ("bocd") or the run length ("bocd-ar") of the last start-type change, whether the next
    change is an anomaly end. "prior" follows the plain description of the generative prior: a change at time s is an
    anomaly end, drawn with probability q0, when the most recent change is a start-type change other than the series
    start at most delta_t steps back; otherwise it is a start-type change drawn with probability p0.

    Attributes
    ----------
    variant : str
        "bocd" (W_a, W_c, Q_c) or "bocd-ar" (H_a, H_c, G). Every table is always computed.
    p0 : float
        Prior change probability.
    q0 : float
        Prior anomaly-end probability.
    delta_t : int
        The longest admissible anomaly.
    semantics : str
        "recursion" (the default) or "prior".
    """
    variant: str = "bocd"
    p0: float = 0.1
    q0: float = 0.2
    delta_t: int = 4
    semantics: str = "recursion"

    def __post_init__(self):
        if self.variant not in ("bocd", "bocd-ar"):
            raise InputError(f"Unknown path law variant: {self.variant!r}.")
        if self.semantics not in ("recursion", "prior"):
            raise InputError(f"Unknown path law semantics: {self.semantics!r}.")

    @classmethod
    def from_hyperparams(cls, hp: Hyperparams, variant: str = "bocd", semantics: str = "recursion") -> "PathLaw":
        return cls(variant, hp.p0, hp.q0, hp.delta_t, semantics)

    def ends_anomaly(self, changes: list, s: int) -> bool:
        """
        Tells whether a change at time s would be an anomaly end, given the changes up to s - 1 as (time, kind) pairs
        with kind 1 for an anomaly end.
        """
        last_time, last_kind = changes[-1]
        if self.semantics == "prior":
            return last_time != 1 and last_kind == 0 and s - last_time <= self.delta_t
        if last_kind == 1:
            # W_a and H_a rows only grow or give birth to a change point.
            return False
        if self.variant == "bocd":
            span = _change_point_duration(changes, s - 1)
        else:
            span = (s - 1) - last_time
        # The series start row grows with 1 - p0, and anomaly births read start-type mass at most delta_t - 1 old.
        return span != s - 2 and span <= self.delta_t - 1


@dataclass
class OracleTables:
    """
    Exact log-domain tables at one time step. Cells that no history reaches hold -inf.

    Attributes
    ----------
    t : int
        The time step.
    delta_t : int
        The longest admissible anomaly.
    log_wa : np.ndarray
        log W_a indexed [d, r].
    log_wc : np.ndarray
        log W_c indexed [d].
    log_qc : np.ndarray
        log Q_c indexed [d].
    log_ha : np.ndarray
        log H_a indexed [r].
    log_hc : np.ndarray
        log H_c indexed [r].
    log_g : np.ndarray
        log G indexed [r, r'].
    path_evidence : float
        Log of the total likelihood, summed directly over histories.
    prior_mass : float
        Log of the summed prior probability of all histories, which must be 0.
    """
    t: int
    delta_t: int
    log_wa: np.ndarray
    log_wc: np.ndarray
    log_qc: np.ndarray
    log_ha: np.ndarray
    log_hc: np.ndarray
    log_g: np.ndarray
    path_evidence: float = 0.0
    prior_mass: float = 0.0
    paths: int = field(default=0)

    @property
    def evidence(self) -> float:
        """Log of the total likelihood, marginalised from the change point table."""
        return _log_sum(self.log_qc)

    def run_length_posterior(self) -> np.ndarray:
        return _normalize_log(np.logaddexp(self.log_ha, self.log_hc))

    def change_point_posterior(self) -> np.ndarray:
        return _normalize_log(self.log_qc)

    def anomaly_posterior(self, r_star: int) -> float:
        """
        The probability that the most recent change is an anomaly end given a run length in the window before r_star.
        """
        window = slice(max(0, r_star - self.delta_t), r_star + 1)
        total = np.logaddexp(self.log_ha, self.log_hc)
        return _log_ratio(_log_sum(self.log_ha[window]), _log_sum(total[window]))

    def joint_anomaly_posterior(self, r_star: int) -> float:
        """
        As anomaly_posterior(), but the anomaly must also have started no later than t - r_star.
        """
        window = range(max(0, r_star - self.delta_t), r_star + 1)
        terms = [self.log_g[r, r_prime] for r in window for r_prime in range(max(0, r_star - r - 1), self.delta_t)]
        total = np.logaddexp(self.log_ha, self.log_hc)
        return _log_ratio(_log_sum(terms), _log_sum(total[window.start:window.stop]))

    def map_run_length(self) -> int:
        return _first_argmax(np.logaddexp(self.log_ha, self.log_hc))

    def as_dict(self, variant: str = "bocd") -> dict:
        """
        Converts the tables picked by a law variant into plain lists, with -inf cells as None.
        """
        def clean(values):
            return [clean(v) for v in values] if np.ndim(values) else (None if values == _NEG_INF else float(values))
        if variant == "bocd-ar":
            tables = {"log_ha": self.log_ha, "log_hc": self.log_hc, "log_g": self.log_g}
        else:
            tables = {"log_wa": self.log_wa, "log_wc": self.log_wc, "log_qc": self.log_qc}
        record = {"t": self.t, "evidence": self.evidence}
        record.update({name: clean(np.asarray(values).tolist()) for name, values in tables.items()})
        return record


def _segment_log_marginals(y: np.ndarray, x: np.ndarray | None, cfg: ObsModelConfig) -> np.ndarray:
    # seg[i, j] = log marginal of y[i..j], 0-based and inclusive.
    n = len(y)
    seg = np.full((n, n), _NEG_INF)
    for i in range(n):
        stats = empty_stats(cfg)
        for j in range(i, n):
            stats = push(stats, y[j], () if x is None else x[j])
            seg[i, j] = log_marginal(stats, cfg)
    return seg


def _change_point_duration(changes: list, t: int) -> int:
    # The most recent start-type change that is not immediately followed by an anomaly end.
    for i in range(len(changes) - 1, -1, -1):
        if changes[i][1] == 0 and (i == len(changes) - 1 or changes[i + 1][1] == 0):
            return t - changes[i][0]
    raise AssertionError("every history starts with a change point at time 1")


def enumerate_joint(y, law: PathLaw, cfg: ObsModelConfig, x=None) -> list[OracleTables]:
    """
    Computes the exact tables at every time step of a short series by enumerating all change histories.

    Parameters
    ----------
    y : array_like
        The observations, at most 12 of them.
    law : PathLaw
        The prior over change histories.
    cfg : ObsModelConfig
        The observation model.
    x : array_like, optional
        One feature row per observation for the regression model.

    Returns
    -------
    list[OracleTables]
        The tables at times 1 to len(y).
    """
    y = np.asarray(y, dtype=float)
    if len(y) > MAX_ORACLE_LENGTH:
        raise InputError(f"Path enumeration supports at most {MAX_ORACLE_LENGTH} observations, got {len(y)}.")
    if len(y) == 0:
        return []
    features = None if x is None else np.asarray(x, dtype=float).reshape(len(y), -1)
    seg = _segment_log_marginals(y, features, cfg)
    log_p0, log_stay_p = np.log(law.p0), np.log1p(-law.p0)
    log_q0, log_stay_q = np.log(law.q0), np.log1p(-law.q0)

    # Per time step, per cell, the log weights of contributing histories, summed at the end.
    terms = [{"wa": {}, "wc": {}, "qc": {}, "ha": {}, "hc": {}, "g": {}, "evidence": [], "prior": []}
             for _ in range(len(y))]

    def add(bucket: dict, key, value: float):
        bucket.setdefault(key, []).append(value)

    def visit(t: int, changes: list, log_prior: float):
        bounds = [time for time, _ in changes] + [t + 1]
        log_lik = sum(seg[bounds[k] - 1, bounds[k + 1] - 2] for k in range(len(changes)))
        weight = log_prior + log_lik
        cell = terms[t - 1]
        cell["evidence"].append(weight)
        cell["prior"].append(log_prior)
        last_time, last_kind = changes[-1]
        r = t - last_time
        d = _change_point_duration(changes, t)
        if last_kind == 0:
            add(cell["wc"], r, weight)
            add(cell["hc"], r, weight)
        else:
            add(cell["wa"], (d, r), weight)
            add(cell["ha"], r, weight)
            add(cell["g"], (r, (t - r - 1) - changes[-2][0]), weight)
        add(cell["qc"], d, weight)
        if t == len(y):
            return
        s = t + 1
        if law.ends_anomaly(changes, s):
            visit(s, changes, log_prior + log_stay_q)
            visit(s, changes + [(s, 1)], log_prior + log_q0)
        else:
            visit(s, changes, log_prior + log_stay_p)
            visit(s, changes + [(s, 0)], log_prior + log_p0)

    visit(1, [(1, 0)], 0.0)

    tables = []
    for t, cell in enumerate(terms, start=1):
        def vector(bucket):
            out = np.full(t, _NEG_INF)
            for key, values in bucket.items():
                out[key] = _log_sum(values)
            return out
        log_wa = np.full((t, t), _NEG_INF)
        for key, values in cell["wa"].items():
            log_wa[key] = _log_sum(values)
        log_g = np.full((t, law.delta_t), _NEG_INF)
        for key, values in cell["g"].items():
            log_g[key] = _log_sum(values)
        tables.append(OracleTables(t=t, delta_t=law.delta_t, log_wa=log_wa, log_wc=vector(cell["wc"]),
                                   log_qc=vector(cell["qc"]), log_ha=vector(cell["ha"]), log_hc=vector(cell["hc"]),
                                   log_g=log_g, path_evidence=_log_sum(cell["evidence"]),
                                   prior_mass=_log_sum(cell["prior"]), paths=len(cell["evidence"])))
    return tables
