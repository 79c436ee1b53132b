# "detect/checkpoint.py" from libBOCDPy by the libBOCDPy Contributors
#
# A bounded ring of per-step snapshots. Removing or reinserting observations restores the snapshot taken just before
# the affected time and replays the observations that follow it, instead of keeping every past table around.

from collections import deque
from dataclasses import dataclass
from typing import Any

from ..errors import HorizonError
from ..model.cache import SegmentCache
from ..types import Observation


@dataclass(frozen=True)
class Checkpoint:
    """
    The engine state and segment cache right after one effective time step was processed.

    Attributes
    ----------
    t : int
        The effective time step. 0 marks the state before any observation.
    obs : Observation, optional
        The observation processed at this step. None for time 0.
    state : Any
        The engine state after the step. None for time 0.
    cache : SegmentCache
        The segment cache after the step.
    """
    t: int
    obs: Observation | None
    state: Any
    cache: SegmentCache


class CheckpointRing:
    """
    The most recent checkpoints, one per effective time step.

    Parameters
    ----------
    horizon : int
        How many steps back removals may reach. The ring holds horizon + 1 checkpoints.
    base : Checkpoint
        The checkpoint at time 0.
    """
    def __init__(self, horizon: int, base: Checkpoint):
        self.horizon = horizon
        self._ring: deque[Checkpoint] = deque([base], maxlen=horizon + 1)

    def __len__(self) -> int:
        return len(self._ring)

    def append(self, checkpoint: Checkpoint) -> None:
        if self._ring and checkpoint.t != self._ring[-1].t + 1:
            raise ValueError(f"Checkpoint for time {checkpoint.t} does not follow time {self._ring[-1].t}.")
        self._ring.append(checkpoint)

    @property
    def oldest(self) -> int:
        return self._ring[0].t

    @property
    def latest(self) -> Checkpoint:
        return self._ring[-1]

    def at(self, t: int) -> Checkpoint:
        """
        Returns the checkpoint taken at an effective time step.

        Parameters
        ----------
        t : int
            The effective time step.

        Returns
        -------
        Checkpoint
            The checkpoint.
        """
        index = t - self._ring[0].t
        if index < 0 or index >= len(self._ring):
            raise HorizonError(f"No checkpoint for time {t}; checkpoints cover times {self._ring[0].t} to "
                               f"{self._ring[-1].t}.")
        return self._ring[index]

    def observations_after(self, t: int) -> list[Observation]:
        """
        Returns the observations of every checkpoint after an effective time step, oldest first.
        """
        if t + 1 < self._ring[0].t:
            raise HorizonError(f"Observations after time {t} are no longer retained.")
        return [checkpoint.obs for checkpoint in self._ring if checkpoint.t > t]

    def rewind(self, t: int) -> Checkpoint:
        """
        Drops every checkpoint after an effective time step and returns the one at it.
        """
        checkpoint = self.at(t)
        while self._ring[-1].t > t:
            self._ring.pop()
        return checkpoint
