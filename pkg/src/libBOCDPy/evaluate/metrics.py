# "evaluate/metrics.py" from libBOCDPy by the libBOCDPy Contributors
#
# Matches emitted events against the ground truth of a series and derives precision, recall, F1, the type-confusion
# false positive rate and the detection delay for change points and collective anomalies. Counts are kept in
# additive tallies so that results from many series reduce in any order.

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..types import DetectionEvent, EventKind


@dataclass(frozen=True)
class GroundTruth:
    """
    The true changes of one series in original time.

    Attributes
    ----------
    change_points : tuple[int, ...]
        Times at which a new segment starts.
    anomalies : tuple[tuple[int, int], ...]
        Inclusive (start, end) intervals of the collective anomalies.
    """
    change_points: tuple
    anomalies: tuple

    @classmethod
    def of(cls, truth) -> "GroundTruth":
        """
        Accepts a GroundTruth, a SimSeries or a ground truth dictionary as written next to simulated series.
        """
        if isinstance(truth, GroundTruth):
            return truth
        if isinstance(truth, dict):
            anomalies = tuple((int(a["start"]), int(a["end"])) for a in truth.get("anomalies", [])
                              if a.get("kind", EventKind.COLLECTIVE_ANOMALY.value) ==
                              EventKind.COLLECTIVE_ANOMALY.value)
            return cls(tuple(int(c) for c in truth.get("change_points", [])), anomalies)
        return cls(tuple(int(c) for c in truth.change_points),
                   tuple((a.start, a.end) for a in truth.collective_anomalies))


@dataclass(frozen=True)
class MatchedPair:
    """
    A detection matched to a true change of the same kind.

    Attributes
    ----------
    kind : EventKind
        CHANGE_POINT or COLLECTIVE_ANOMALY.
    truth : tuple[int, int]
        The true (start, end). Both equal the location for change points.
    event : DetectionEvent
        The matched detection.
    """
    kind: EventKind
    truth: tuple
    event: DetectionEvent

    @property
    def delay(self) -> int:
        """Alert time minus the change point, or minus the first time after the anomaly, floored at 0."""
        if self.kind is EventKind.CHANGE_POINT:
            return self.event.alert_time - self.truth[0]
        return max(0, self.event.alert_time - (self.truth[1] + 1))


@dataclass
class Matching:
    """
    The outcome of matching one event list against one ground truth.

    Attributes
    ----------
    pairs : list[MatchedPair]
        Detections matched to a truth of their kind.
    false_positives : list[DetectionEvent]
        Detections left unmatched.
    missed_change_points : list[int]
        True change points without a detection.
    missed_anomalies : list[tuple[int, int]]
        True collective anomalies without a detection.
    anomaly_as_change : set
        True anomalies that were reported as change points.
    change_as_anomaly : set
        True change points that were reported as collective anomalies.
    n_change_points : int
        The number of true change points.
    n_anomalies : int
        The number of true collective anomalies.
    """
    pairs: list = field(default_factory=list)
    false_positives: list = field(default_factory=list)
    missed_change_points: list = field(default_factory=list)
    missed_anomalies: list = field(default_factory=list)
    anomaly_as_change: set = field(default_factory=set)
    change_as_anomaly: set = field(default_factory=set)
    n_change_points: int = 0
    n_anomalies: int = 0

    def tally(self, change_lag: int = 0, anomaly_lag: int = 0) -> "Tally":
        """
        Reduces the matching to counts.

        Parameters
        ----------
        change_lag : int
            The change point confirmation lag, subtracted for the excess delay.
        anomaly_lag : int
            The anomaly confirmation lag, subtracted for the excess delay.

        Returns
        -------
        Tally
            The counts of this matching.
        """
        tally = Tally(n_series=1)
        for kind, lag, n_truth, missed, confused in (
                (EventKind.CHANGE_POINT, change_lag, self.n_change_points, self.missed_change_points,
                 self.anomaly_as_change),
                (EventKind.COLLECTIVE_ANOMALY, anomaly_lag, self.n_anomalies, self.missed_anomalies,
                 self.change_as_anomaly)):
            delays = [pair.delay for pair in self.pairs if pair.kind is kind]
            counts = tally.counts[kind.value]
            counts["tp"] = len(delays)
            counts["fp"] = sum(1 for event in self.false_positives if event.kind is kind)
            counts["fn"] = len(missed)
            counts["n_truth"] = n_truth
            counts["confused"] = len(confused)
            counts["delay_sum"] = float(np.sum(delays)) if delays else 0.0
            counts["excess_sum"] = float(np.sum(np.maximum(0, np.asarray(delays) - lag))) if delays else 0.0
        tally.counts[EventKind.CHANGE_POINT.value]["n_other"] = self.n_anomalies
        tally.counts[EventKind.COLLECTIVE_ANOMALY.value]["n_other"] = self.n_change_points
        return tally


_COUNT_KEYS = ("tp", "fp", "fn", "n_truth", "confused", "n_other", "delay_sum", "excess_sum")
_KINDS = (EventKind.CHANGE_POINT.value, EventKind.COLLECTIVE_ANOMALY.value)


def _empty_counts() -> dict:
    return {kind: {key: 0 for key in _COUNT_KEYS} for kind in _KINDS}


@dataclass
class Tally:
    """
    Additive counts over any number of series. Adding tallies is associative and commutative.

    Attributes
    ----------
    counts : dict
        Per kind value: tp, fp, fn, n_truth, confused, n_other, delay_sum and excess_sum.
    n_series : int
        The number of series counted.
    """
    counts: dict = field(default_factory=_empty_counts)
    n_series: int = 0

    def __add__(self, other: "Tally") -> "Tally":
        counts = {kind: {key: self.counts[kind][key] + other.counts[kind][key] for key in _COUNT_KEYS}
                  for kind in _KINDS}
        return Tally(counts, self.n_series + other.n_series)

    def report(self) -> "MetricsReport":
        kinds = {}
        for kind in _KINDS:
            c = self.counts[kind]
            detected = c["tp"] + c["fp"]
            precision_defined = detected > 0
            precision = c["tp"] / detected if precision_defined else 0.0
            recall = c["tp"] / c["n_truth"] if c["n_truth"] else 0.0
            f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
            kinds[kind] = KindMetrics(
                precision=precision,
                recall=recall,
                f1=f1,
                false_positive_rate=c["confused"] / c["n_other"] if c["n_other"] else 0.0,
                mean_delay=c["delay_sum"] / c["tp"] if c["tp"] else 0.0,
                mean_excess_delay=c["excess_sum"] / c["tp"] if c["tp"] else 0.0,
                tp=int(c["tp"]),
                fp=int(c["fp"]),
                fn=int(c["fn"]),
                confusions=int(c["confused"]),
                precision_defined=precision_defined,
            )
        return MetricsReport(kinds[EventKind.CHANGE_POINT.value], kinds[EventKind.COLLECTIVE_ANOMALY.value],
                             self.n_series)


@dataclass(frozen=True)
class KindMetrics:
    """
    The criteria for one kind of change.

    Attributes
    ----------
    precision : float
        Matched detections over all detections of this kind. 0 when nothing was detected.
    recall : float
        Matched detections over true changes of this kind.
    f1 : float
        The harmonic mean of precision and recall.
    false_positive_rate : float
        The share of true changes of the other kind that were reported as this kind.
    mean_delay : float
        The mean raw alert lag of matched detections.
    mean_excess_delay : float
        The mean alert lag beyond the confirmation lag.
    tp : int
        Matched detections.
    fp : int
        Unmatched detections.
    fn : int
        Missed true changes.
    confusions : int
        True changes of the other kind reported as this kind.
    precision_defined : bool
        False when there were no detections and precision is reported as 0.
    """
    precision: float
    recall: float
    f1: float
    false_positive_rate: float
    mean_delay: float
    mean_excess_delay: float
    tp: int
    fp: int
    fn: int
    confusions: int
    precision_defined: bool = True

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class MetricsReport:
    """
    The criteria for change points and collective anomalies over a set of series.

    Attributes
    ----------
    change_point : KindMetrics
        Criteria for change points.
    anomaly : KindMetrics
        Criteria for collective anomalies.
    n_series : int
        The number of series evaluated.
    """
    change_point: KindMetrics
    anomaly: KindMetrics
    n_series: int

    def to_dict(self) -> dict:
        return {"n_series": self.n_series, EventKind.CHANGE_POINT.value: self.change_point.to_dict(),
                EventKind.COLLECTIVE_ANOMALY.value: self.anomaly.to_dict()}


def _event_order(event: DetectionEvent) -> tuple:
    return event.alert_time, event.kind.value, event.start, event.end


def _interval_distance(start: int, end: int, point: int) -> int:
    if start <= point <= end:
        return 0
    return min(abs(point - start), abs(point - end))


def match_events(truth, events: list, tol_cp: int = 0, tol_anomaly: int = 4) -> Matching:
    """
    Matches detections to true changes one to one. Detections are taken in alert order and each claims the closest
    unclaimed true change of its kind within tolerance. Spurious anomaly events are ignored.

    A change point matches a true change point at most tol_cp steps away. An anomaly matches a true anomaly when the
    intervals overlap or their midpoints lie at most tol_anomaly steps apart. A detection of the wrong kind close to
    a true change of the other kind is recorded as a type confusion and also counts as a false positive.

    Parameters
    ----------
    truth : GroundTruth, SimSeries or dict
        The ground truth.
    events : list[DetectionEvent]
        The emitted events.
    tol_cp : int
        The change point tolerance.
    tol_anomaly : int
        The anomaly midpoint tolerance.

    Returns
    -------
    Matching
        The matching.
    """
    if tol_cp < 0 or tol_anomaly < 0:
        raise ConfigError(f"Matching tolerances must be nonnegative, got {tol_cp} and {tol_anomaly}.")
    truth = GroundTruth.of(truth)
    matching = Matching(n_change_points=len(truth.change_points), n_anomalies=len(truth.anomalies))
    open_changes = list(truth.change_points)
    open_anomalies = list(truth.anomalies)

    for event in sorted(events, key=_event_order):
        if event.kind is EventKind.SPURIOUS_ANOMALY:
            continue
        if event.kind is EventKind.CHANGE_POINT:
            candidates = [(abs(event.location - cp), cp) for cp in open_changes
                          if abs(event.location - cp) <= tol_cp]
            if candidates:
                _, cp = min(candidates)
                open_changes.remove(cp)
                matching.pairs.append(MatchedPair(event.kind, (cp, cp), event))
                continue
            matching.false_positives.append(event)
            for interval in truth.anomalies:
                if _interval_distance(*interval, event.location) <= tol_anomaly:
                    matching.anomaly_as_change.add(interval)
            continue

        middle = (event.start + event.end) / 2
        candidates = []
        for start, end in open_anomalies:
            distance = abs(middle - (start + end) / 2)
            if (event.start <= end and start <= event.end) or distance <= tol_anomaly:
                candidates.append((distance, (start, end)))
        if candidates:
            _, interval = min(candidates)
            open_anomalies.remove(interval)
            matching.pairs.append(MatchedPair(event.kind, interval, event))
            continue
        matching.false_positives.append(event)
        for cp in truth.change_points:
            if _interval_distance(event.start, event.end, cp) <= tol_anomaly:
                matching.change_as_anomaly.add(cp)

    matching.missed_change_points = open_changes
    matching.missed_anomalies = open_anomalies
    return matching


def detection_delay(matching: Matching, kind: EventKind = EventKind.CHANGE_POINT, lag: int = 0) -> float:
    """
    Computes the mean alert lag over the matched pairs of one kind. Change point lags run from the change point,
    anomaly lags from the first time after the anomaly.

    Parameters
    ----------
    matching : Matching
        The matching.
    kind : EventKind
        CHANGE_POINT or COLLECTIVE_ANOMALY.
    lag : int
        A confirmation lag to subtract, floored at 0. The default 0 gives the raw delay.

    Returns
    -------
    float
        The mean delay, or 0.0 without matched pairs.
    """
    delays = [pair.delay for pair in matching.pairs if pair.kind is kind]
    if not delays:
        return 0.0
    return float(np.mean(np.maximum(0, np.asarray(delays) - lag)))


def evaluate_events(truth, events: list, tol_cp: int = 0, tol_anomaly: int = 4, change_lag: int = 0,
                    anomaly_lag: int = 0) -> MetricsReport:
    """
    Matches the events of one series and reports the criteria.
    """
    return match_events(truth, events, tol_cp, tol_anomaly).tally(change_lag, anomaly_lag).report()
