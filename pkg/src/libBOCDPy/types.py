# "types.py" from libBOCDPy by the libBOCDPy Contributors
#
# Record types shared between the detector, the evaluation tools and the command line.

from dataclasses import dataclass, field
from enum import Enum


class EventKind(str, Enum):
    """
    The kinds of events a detector can emit.
    """
    CHANGE_POINT = "change_point"
    COLLECTIVE_ANOMALY = "collective_anomaly"
    SPURIOUS_ANOMALY = "spurious_anomaly"


@dataclass(frozen=True)
class Observation:
    """
    A single observation fed to a detector.

    Attributes
    ----------
    time : int
        The original time index of the observation. Must be strictly increasing within a stream.
    value : float
        The observed value.
    features : tuple[float, ...]
        The feature row for the regression observation model. Empty for the intercept-only model.
    """
    time: int
    value: float
    features: tuple = field(default_factory=tuple)


@dataclass(frozen=True)
class DetectionEvent:
    """
    A change point alert or an anomaly record emitted by a detector.

    Attributes
    ----------
    kind : EventKind
        What was detected.
    start : int
        The original time of the change point, or the first time of the anomalous segment.
    end : int
        Equal to start for change points, or the last time of the anomalous segment.
    posterior : float
        The posterior probability that triggered the event.
    alert_time : int
        The original time of the observation whose processing emitted the event.
    engine : str
        The name of the recursion engine that produced the event.
    """
    kind: EventKind
    start: int
    end: int
    posterior: float
    alert_time: int
    engine: str = ""

    @property
    def location(self) -> int:
        """The original time of a change point, or the start of an anomaly."""
        return self.start

    @property
    def is_anomaly(self) -> bool:
        return self.kind is not EventKind.CHANGE_POINT

    def to_dict(self) -> dict:
        """
        Converts the event into the versioned record written by the command line.

        Returns
        -------
        dict
            The event record.
        """
        return {
            "schema": 1,
            "kind": self.kind.value,
            "start": self.start,
            "end": self.end,
            "posterior": self.posterior,
            "alert_time": self.alert_time,
            "engine": self.engine,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "DetectionEvent":
        return cls(EventKind(record["kind"]), int(record["start"]), int(record["end"]), float(record["posterior"]),
                   int(record["alert_time"]), record.get("engine", ""))
