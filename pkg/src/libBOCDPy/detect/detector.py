# "detect/detector.py" from libBOCDPy by the libBOCDPy Contributors
#
# The online detection procedure. Each observation extends the segment cache, steps the recursion, then runs the
# anomaly loop (detect, locate, remove, replay) and finally decides whether the most recent change point is confirmed.
# Removed observations vanish from the recursion's effective time, while every event is reported in original time.

import itertools
import logging
import time as _time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..engine.bocd import BocdEngine
from ..engine.bocd_ar import BocdArEngine
from ..engine.bocpd import BocpdEngine
from ..engine.hyperparams import Hyperparams
from ..errors import ConfigError, HorizonError, InputError
from ..model.cache import SegmentCache
from ..model.obsmodel import ObsModelConfig
from ..types import DetectionEvent, EventKind, Observation
from .checkpoint import Checkpoint, CheckpointRing

_LOG = logging.getLogger(__name__)

ENGINES = ("bocd", "bocd-ar", "bocpd")
PHASES = ("likelihoods", "recursion", "anomaly", "change_point")


def make_engine(name: str, hp: Hyperparams, endpoint_mode: str = "sequential"):
    """
    Creates the engine adapter with the given name.

    Parameters
    ----------
    name : str
        One of "bocd", "bocd-ar" or "bocpd".
    hp : Hyperparams
        The hyperparameters.
    endpoint_mode : str
        "sequential" or "joint". Joint endpoints are only available with "bocd-ar".

    Returns
    -------
    BocdEngine, BocdArEngine or BocpdEngine
        The engine adapter.
    """
    if endpoint_mode not in ("sequential", "joint"):
        raise ConfigError(f"Unknown endpoint mode: {endpoint_mode!r}.")
    if name == "bocd-ar":
        return BocdArEngine(hp, endpoint_mode)
    if endpoint_mode == "joint":
        raise ConfigError(f"Joint endpoints are only supported by the bocd-ar engine, not {name!r}.")
    if name == "bocd":
        return BocdEngine(hp)
    if name == "bocpd":
        return BocpdEngine(hp)
    raise ConfigError(f"Unknown engine {name!r}; expected one of {', '.join(ENGINES)}.")


@dataclass
class PhaseTimings:
    """
    Wall clock time spent per phase of each processed observation, in seconds.

    Attributes
    ----------
    samples : dict[str, list[float]]
        One entry per processed observation for every phase.
    """
    samples: dict = field(default_factory=lambda: {phase: [] for phase in PHASES})

    def record(self, phase: str, seconds: float) -> None:
        self.samples[phase].append(seconds)

    @property
    def steps(self) -> int:
        return len(self.samples["recursion"])

    def totals(self) -> dict:
        return {phase: float(np.sum(values)) for phase, values in self.samples.items()}

    def per_step_mean(self) -> dict:
        return {phase: float(np.mean(values)) if values else 0.0 for phase, values in self.samples.items()}

    def per_step_median(self) -> dict:
        return {phase: float(np.median(values)) if values else 0.0 for phase, values in self.samples.items()}

    def __add__(self, other: "PhaseTimings") -> "PhaseTimings":
        return PhaseTimings({phase: self.samples[phase] + other.samples[phase] for phase in PHASES})


@dataclass(frozen=True)
class RemovedInterval:
    """
    A stretch of original time taken out of the recursion.

    Attributes
    ----------
    start : int
        The first original time removed.
    end : int
        The last original time removed.
    reason : str
        "pending" until the anomaly is classified, then the event kind value.
    """
    start: int
    end: int
    reason: str


@dataclass(frozen=True)
class SearchRanges:
    """
    The current search ranges in original time.

    Attributes
    ----------
    timestamps : tuple[int, ...]
        The original times inside the change point search range, oldest first.
    n_a : int
        The anomaly search range holds the last n_a + 1 of them.
    n_c : int
        The change point search range holds all n_c + 1 of them.
    removed : tuple[RemovedInterval, ...]
        Every interval removed so far and still removed.
    """
    timestamps: tuple
    n_a: int
    n_c: int
    removed: tuple


@dataclass
class _PendingAnomaly:
    start: int
    end: int
    posterior: float
    observations: list


class Detector:
    """
    Online detector for change points and collective anomalies in one stream. Feed observations with process() in
    strictly increasing time order.

    Parameters
    ----------
    hp : Hyperparams
        The hyperparameters.
    obs_cfg : ObsModelConfig
        The observation model.
    engine : str
        "bocd-ar" (the default), "bocd", or the anomaly-free baseline "bocpd".
    endpoint_mode : str
        "sequential" (the default) or "joint" anomaly endpoint estimation.
    retain_collective : bool
        Put collective anomalies back into the series once classified, instead of keeping them removed.
    callback : function
        A callback function that receives every emitted DetectionEvent.

    Attributes
    ----------
    timings : PhaseTimings
        Time spent in each phase so far.
    """
    def __init__(self, hp: Hyperparams | None = None, obs_cfg: ObsModelConfig | None = None, engine: str = "bocd-ar",
                 endpoint_mode: str = "sequential", retain_collective: bool = False, callback: callable = None):
        self.hp = hp if hp is not None else Hyperparams()
        self.obs_cfg = obs_cfg if obs_cfg is not None else ObsModelConfig()
        self.engine = make_engine(engine, self.hp, endpoint_mode)
        self.retain_collective = retain_collective
        self.emit = callback
        self.timings = PhaseTimings()

        self._state = None
        self._cache = SegmentCache.empty(self.obs_cfg)
        self._checkpoints = CheckpointRing(self.hp.checkpoint_horizon, Checkpoint(0, None, None, self._cache))
        # Original time of every retained effective step, newest last.
        self._times: deque[int] = deque(maxlen=self.hp.u_c + self.hp.checkpoint_horizon + 2)
        self._last_time: int | None = None
        self._alerted: deque[int] = deque(maxlen=64)
        # Located change points waiting to become confirm_lag steps old, by original time. Engines without anomaly
        # removal only.
        self._candidates: dict[int, float] = {}
        self._pending: list[_PendingAnomaly] = []
        self._removed: list[RemovedInterval] = []
        self._retained: list[tuple[int, int]] = []

    @property
    def engine_name(self) -> str:
        return self.engine.name

    @property
    def t(self) -> int:
        """The current effective time step."""
        return 0 if self._state is None else self._state.t

    @property
    def state(self):
        return self._state

    @property
    def cache(self) -> SegmentCache:
        return self._cache

    @property
    def search_ranges(self) -> SearchRanges:
        if self._state is None:
            return SearchRanges((), 0, 0, tuple(self._removed))
        n_c = self._state.n_c
        n_a = getattr(self._state, "n_a", 0)
        timestamps = tuple(self._times)[-(n_c + 1):]
        return SearchRanges(timestamps, n_a, n_c, tuple(self._removed))

    def run_length_posterior(self) -> np.ndarray:
        """
        Returns the current posterior over run lengths, index r meaning the most recent change happened r effective
        steps ago. Empty before the first observation.
        """
        if self._state is None:
            return np.empty(0)
        return self.engine.run_length_posterior(self._state)

    def original_time(self, t: int) -> int:
        """
        Maps an effective time step to the original time of its observation.

        Parameters
        ----------
        t : int
            The effective time step.

        Returns
        -------
        int
            The original time.
        """
        index = len(self._times) - 1 - (self.t - t)
        if t < 1 or t > self.t or index < 0:
            raise HorizonError(f"Effective time {t} is outside the retained range ending at {self.t}.")
        return self._times[index]

    def process(self, obs: Observation) -> list[DetectionEvent]:
        """
        Processes one observation and returns the events it triggered, anomalies first.

        Parameters
        ----------
        obs : Observation
            The observation. Its time must exceed every earlier time, removed observations included.

        Returns
        -------
        list[DetectionEvent]
            The emitted events. At most one of them is a change point.
        """
        if self._last_time is not None and obs.time <= self._last_time:
            raise InputError(f"Observation time {obs.time} does not follow the previous time {self._last_time}.")
        started = _time.perf_counter()
        cache = self._cache.extend(obs.value, obs.features, cap=self.hp.u_c)
        extended = _time.perf_counter()
        state = self.engine.init(cache) if self._state is None else self.engine.step(self._state, cache)
        stepped = _time.perf_counter()
        self._last_time = obs.time
        self._commit(obs, state, cache)

        events = []
        if self.engine.detects_anomalies:
            self._anomaly_loop()
        events.extend(self._release_pending(obs.time))
        looped = _time.perf_counter()
        change = self._confirm_change(obs.time)
        if change is not None:
            events.append(change)
        finished = _time.perf_counter()

        self.timings.record("likelihoods", extended - started)
        self.timings.record("recursion", stepped - extended)
        self.timings.record("anomaly", looped - stepped)
        self.timings.record("change_point", finished - looped)
        for event in events:
            _LOG.info("%s at %d-%d (posterior %.3f) alerted at %d", event.kind.value, event.start, event.end,
                      event.posterior, event.alert_time)
            if self.emit is not None:
                self.emit(event)
        return events

    def run(self, observations) -> list[DetectionEvent]:
        """
        Processes a whole sequence of observations and returns every event in emission order.
        """
        events = []
        for obs in observations:
            events.extend(self.process(obs))
        return events

    def _commit(self, obs: Observation, state, cache: SegmentCache) -> None:
        cache = cache.truncate(state.n_c + 1)
        self._state, self._cache = state, cache
        self._checkpoints.append(Checkpoint(state.t, obs, state, cache))
        self._times.append(obs.time)

    def _replay(self, base: Checkpoint, observations: list) -> None:
        self._state, self._cache = base.state, base.cache
        for obs in observations:
            cache = self._cache.extend(obs.value, obs.features, cap=self.hp.u_c)
            state = self.engine.init(cache) if self._state is None else self.engine.step(self._state, cache)
            self._commit(obs, state, cache)

    def remove_segment(self, start: int, end: int) -> list[Observation]:
        """
        Removes the observations at effective times start to end and replays the ones after them from the checkpoint
        just before start. The result equals running the recursion on the series without them from the beginning.

        Parameters
        ----------
        start : int
            The first effective time to remove.
        end : int
            The last effective time to remove.

        Returns
        -------
        list[Observation]
            The removed observations. Empty when the interval is empty.
        """
        if end < start:
            return []
        if start < 1 or end > self.t:
            raise InputError(f"Cannot remove effective times {start} to {end}; the series covers 1 to {self.t}.")
        current = self.t
        observations = self._checkpoints.observations_after(start - 1)
        if len(observations) != current - start + 1:
            raise HorizonError(f"Observations from effective time {start} are no longer retained.")
        base = self._checkpoints.rewind(start - 1)
        for _ in range(current - start + 1):
            self._times.pop()
        removed, replay = observations[:end - start + 1], observations[end - start + 1:]
        _LOG.debug("Removing original times %d-%d, replaying %d observations from effective time %d",
                   removed[0].time, removed[-1].time, len(replay), start - 1)
        self._replay(base, replay)
        return removed

    def _reinsert(self, observations: list) -> None:
        # Puts removed observations back in time order and replays everything after them.
        first = observations[0].time
        later = sum(1 for time in self._times if time > first)
        base_t = self.t - later
        if base_t < self._checkpoints.oldest:
            raise HorizonError(f"Cannot reinsert original time {first}; checkpoints start at effective time "
                               f"{self._checkpoints.oldest}.")
        replay = sorted(observations + self._checkpoints.observations_after(base_t), key=lambda obs: obs.time)
        base = self._checkpoints.rewind(base_t)
        for _ in range(later):
            self._times.pop()
        _LOG.debug("Reinserting original times %d-%d, replaying %d observations", first, observations[-1].time,
                   len(replay))
        self._replay(base, replay)

    def _overlaps_retained(self, start: int, end: int) -> bool:
        return any(start <= hi and lo <= end for lo, hi in self._retained)

    def _anomaly_loop(self) -> None:
        # The current point is never removed, so the anomaly search range leaves at most u_a removable points.
        for removals in itertools.count():
            r_star = self.engine.most_recent_change(self._state)
            probability = self.engine.anomaly_probability(self._state, r_star)
            if probability is None or probability <= self.hp.lambda_a:
                return
            r1, r2 = self.engine.anomaly_endpoints(self._state, r_star)
            last = self.t - r1 - 1
            first = last - r2
            start, end = self.original_time(first), self.original_time(last)
            if self._overlaps_retained(start, end):
                return
            if removals == self.hp.u_a:
                raise RuntimeError(f"Anomaly loop exceeded {self.hp.u_a} removals at effective time {self.t}.")
            removed = self.remove_segment(first, last)
            self._removed.append(RemovedInterval(start, end, "pending"))
            self._pending.append(_PendingAnomaly(start, end, probability, removed))

    def _classify(self, start: int, end: int) -> EventKind:
        # Collective when the re-estimated most recent change lies more than delta_t away from the interval.
        r_star = self.engine.most_recent_change(self._state)
        change = self.original_time(self.t - r_star)
        if start <= change <= end:
            distance = 0
        else:
            distance = min(abs(change - start), abs(change - end))
        return EventKind.COLLECTIVE_ANOMALY if distance > self.hp.delta_t else EventKind.SPURIOUS_ANOMALY

    def _release_pending(self, alert_time: int) -> list[DetectionEvent]:
        events = []
        waiting = []
        for pending in self._pending:
            after = sum(1 for time in self._times if time > pending.end)
            if after < self.hp.anomaly_confirm_lag:
                waiting.append(pending)
                continue
            kind = self._classify(pending.start, pending.end)
            self._removed = [item for item in self._removed if (item.start, item.end) != (pending.start, pending.end)]
            if kind is EventKind.COLLECTIVE_ANOMALY and self.retain_collective:
                self._reinsert(pending.observations)
                self._retained.append((pending.start, pending.end))
            else:
                self._removed.append(RemovedInterval(pending.start, pending.end, kind.value))
            events.append(DetectionEvent(kind, pending.start, pending.end, pending.posterior, alert_time,
                                         self.engine.name))
        self._pending = waiting
        # Most recent first.
        events.sort(key=lambda event: event.end, reverse=True)
        return events

    def _confirm_change(self, alert_time: int) -> DetectionEvent | None:
        offset, probability = self.engine.change_point(self._state)
        located = self.t - offset
        if not self.engine.detects_anomalies:
            return self._confirm_candidate(located, probability, alert_time)
        # The series start is not a change point.
        if probability <= self.hp.lambda_c or offset < self.hp.confirm_lag or located <= 1:
            return None
        return self._alert_change(self._change_location(located), probability, alert_time)

    def _confirm_candidate(self, located: int, probability: float, alert_time: int) -> DetectionEvent | None:
        # A later change can take over the MAP before an earlier one is confirm_lag steps old, so every located change
        # waits on its own. At most one is alerted per step; the rest wait for the next.
        if probability > self.hp.lambda_c and located > 1:
            location = self._change_location(located)
            self._candidates[location] = max(probability, self._candidates.get(location, 0.0))
        for location in sorted(self._candidates):
            if sum(1 for time in self._times if time > location) < self.hp.confirm_lag:
                break
            event = self._alert_change(location, self._candidates.pop(location), alert_time)
            if event is not None:
                return event
        return None

    def _change_location(self, located: int) -> int:
        # A spurious anomaly removed right before the located change is where the new segment starts.
        location = self.original_time(located)
        previous = self.original_time(located - 1)
        starts = [item.start for item in self._removed if item.reason != EventKind.COLLECTIVE_ANOMALY.value
                  and previous < item.start and item.end < location]
        return min(starts, default=location)

    def _alert_change(self, location: int, probability: float, alert_time: int) -> DetectionEvent | None:
        if any(abs(location - earlier) <= self.hp.delta for earlier in self._alerted):
            return None
        self._alerted.append(location)
        return DetectionEvent(EventKind.CHANGE_POINT, location, location, probability, alert_time, self.engine.name)
