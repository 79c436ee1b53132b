# "model/cache.py" from libBOCDPy by the libBOCDPy Contributors
#
# The segment cache holds the sufficient statistics of every suffix segment that ends at the current time and starts
# inside the change point search range, together with their log marginal likelihoods and log predictive densities.

from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from .obsmodel import ObsModelConfig, SuffStats, _check_features, _intercept_log_marginal, _regression_log_marginal


@dataclass(frozen=True, eq=False)
class SegmentCache:
    """
    Suffix segment statistics at one time step. Entry ``d`` describes the segment that starts ``d`` steps before the
    current time and ends at it. Instances are immutable, so a cache can be kept in a checkpoint and extended again
    later with identical results.

    Attributes
    ----------
    cfg : ObsModelConfig
        The observation model.
    t : int
        The time step the cache belongs to (0 before the first observation).
    n : np.ndarray
        Segment lengths, ``n[d] = d + 1``.
    log_l : np.ndarray
        Log marginal likelihood of each suffix segment.
    log_p : np.ndarray
        Log predictive density of the newest value given the rest of each suffix segment. ``log_p[0]`` is the marginal
        likelihood of the newest value alone.
    """
    cfg: ObsModelConfig
    t: int
    n: np.ndarray
    log_l: np.ndarray
    log_p: np.ndarray
    mean: np.ndarray | None = None
    m2: np.ndarray | None = None
    xtx: np.ndarray | None = None
    xty: np.ndarray | None = None
    yty: np.ndarray | None = None

    @classmethod
    def empty(cls, cfg: ObsModelConfig) -> "SegmentCache":
        """
        Creates the cache that precedes the first observation.

        Parameters
        ----------
        cfg : ObsModelConfig
            The observation model.

        Returns
        -------
        SegmentCache
            An empty cache at time 0.
        """
        nothing = np.empty(0)
        if cfg.is_regression:
            p = cfg.feature_dim
            return cls(cfg, 0, np.empty(0, dtype=int), nothing, nothing, xtx=np.empty((0, p, p)),
                       xty=np.empty((0, p)), yty=nothing)
        return cls(cfg, 0, np.empty(0, dtype=int), nothing, nothing, mean=nothing, m2=nothing)

    def __len__(self) -> int:
        return len(self.log_l)

    def extend(self, y: float, x=(), cap: int | None = None) -> "SegmentCache":
        """
        Advances the cache by one observation. Every retained suffix segment gets the new observation appended and a
        new single-observation segment is added at the front.

        Parameters
        ----------
        y : float
            The new value.
        x : array_like
            The new feature row.
        cap : int, optional
            Keep at most ``cap + 1`` segments after the update, dropping the oldest starts.

        Returns
        -------
        SegmentCache
            The cache at the next time step.
        """
        y = float(y)
        if not np.isfinite(y):
            raise InputError(f"Observation value must be finite, got {y}.")
        keep = len(self) if cap is None else min(len(self), cap)
        n = np.concatenate(([0], self.n[:keep])) + 1
        if self.cfg.is_regression:
            x = _check_features(x, self.cfg.feature_dim)
            p = self.cfg.feature_dim
            xtx = np.concatenate((np.zeros((1, p, p)), self.xtx[:keep])) + np.outer(x, x)
            xty = np.concatenate((np.zeros((1, p)), self.xty[:keep])) + y * x
            yty = np.concatenate(([0.0], self.yty[:keep])) + y * y
            log_l = _regression_log_marginal(self.cfg, n, xtx, xty, yty)
            extra = {"xtx": xtx, "xty": xty, "yty": yty}
        else:
            _check_features(x, 0)
            mean_prev = np.concatenate(([0.0], self.mean[:keep]))
            m2_prev = np.concatenate(([0.0], self.m2[:keep]))
            delta = y - mean_prev
            mean = mean_prev + delta / n
            m2 = m2_prev + delta * (y - mean)
            log_l = _intercept_log_marginal(self.cfg, n, mean, m2)
            extra = {"mean": mean, "m2": m2}
        log_p = np.empty_like(log_l)
        log_p[0] = log_l[0]
        log_p[1:] = log_l[1:] - self.log_l[:keep]
        return SegmentCache(self.cfg, self.t + 1, n, log_l, log_p, **extra)

    def truncate(self, length: int) -> "SegmentCache":
        """
        Drops the oldest segment starts so that at most ``length`` segments remain.

        Parameters
        ----------
        length : int
            The number of segments to keep.

        Returns
        -------
        SegmentCache
            The truncated cache, or this cache when nothing needs dropping.
        """
        if length >= len(self):
            return self
        fields = {}
        for name in ("mean", "m2", "xtx", "xty", "yty"):
            value = getattr(self, name)
            fields[name] = None if value is None else value[:length]
        return SegmentCache(self.cfg, self.t, self.n[:length], self.log_l[:length], self.log_p[:length], **fields)

    def stats(self, d: int) -> SuffStats:
        """
        Returns the statistics of the segment that starts ``d`` steps before the current time.
        """
        if self.cfg.is_regression:
            return SuffStats(n=int(self.n[d]), xtx=self.xtx[d].copy(), xty=self.xty[d].copy(),
                             yty=float(self.yty[d]))
        return SuffStats(n=int(self.n[d]), mean=float(self.mean[d]), m2=float(self.m2[d]))
