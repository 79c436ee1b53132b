# "sim/simgen.py" from libBOCDPy by the libBOCDPy Contributors
#
# Synthetic series with known ground truth: the mean-shift benchmark with planted change points and anomalies, a
# single-anomaly series for signal-to-noise sweeps, and direct samples from the generative model behind the detector.

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..engine.hyperparams import Hyperparams
from ..errors import ConfigError
from ..model.obsmodel import ObsModelConfig
from ..types import EventKind, Observation


@dataclass(frozen=True)
class PlantedAnomaly:
    """
    A ground truth anomaly.

    Attributes
    ----------
    start : int
        The first anomalous time.
    end : int
        The last anomalous time.
    kind : EventKind
        Collective or spurious.
    mean_shift : float
        The shift added to the segment mean while the anomaly lasts.
    """
    start: int
    end: int
    kind: EventKind = EventKind.COLLECTIVE_ANOMALY
    mean_shift: float = 0.0

    @property
    def duration(self) -> int:
        return self.end - self.start + 1

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end, "kind": self.kind.value, "mean_shift": self.mean_shift}

    @classmethod
    def from_dict(cls, record: dict) -> "PlantedAnomaly":
        return cls(int(record["start"]), int(record["end"]), EventKind(record["kind"]),
                   float(record.get("mean_shift", 0.0)))


@dataclass(frozen=True, eq=False)
class SimSeries:
    """
    A generated series together with its ground truth. Times run from 1 to len(values).

    Attributes
    ----------
    values : np.ndarray
        The observations.
    change_points : tuple[int, ...]
        Times at which a new segment starts, excluding time 1.
    anomalies : tuple[PlantedAnomaly, ...]
        The planted anomalies, in time order.
    seed : int
        The seed the series was generated from.
    features : np.ndarray, optional
        One feature row per observation for the regression model.
    latent : pd.DataFrame, optional
        The sampled change indicators, change types and segment parameters, for generative samples.
    """
    values: np.ndarray
    change_points: tuple
    anomalies: tuple
    seed: int
    features: np.ndarray | None = None
    latent: pd.DataFrame | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return np.arange(1, len(self.values) + 1)

    @property
    def collective_anomalies(self) -> tuple:
        return tuple(a for a in self.anomalies if a.kind is EventKind.COLLECTIVE_ANOMALY)

    def observations(self) -> list[Observation]:
        """
        Returns the series as observations ready for a detector.
        """
        if self.features is None:
            return [Observation(int(t), float(y)) for t, y in zip(self.times, self.values)]
        return [Observation(int(t), float(y), tuple(float(v) for v in x))
                for t, y, x in zip(self.times, self.values, self.features)]

    def to_frame(self) -> pd.DataFrame:
        """
        Returns the series as a table with time and value columns, followed by feature columns x1, x2, ... if any.
        """
        frame = pd.DataFrame({"time": self.times, "value": self.values})
        if self.features is not None:
            for j in range(self.features.shape[1]):
                frame[f"x{j + 1}"] = self.features[:, j]
        return frame

    def truth_dict(self) -> dict:
        """
        Returns the ground truth as a plain dictionary, as written next to simulated CSV files.
        """
        return {"schema": 1, "seed": self.seed, "length": len(self), "change_points": list(self.change_points),
                "anomalies": [a.to_dict() for a in self.anomalies]}


@dataclass(frozen=True)
class BenchmarkSimConfig:
    """
    Settings of the mean-shift benchmark series. An anomaly starts anomaly_offset steps into every block of
    anomaly_every steps. The block holding spurious_at gets a spurious anomaly starting exactly there instead, and an
    anomaly that would come within anomaly_guard steps of a change point is pushed past it.

    Attributes
    ----------
    length : int
        The series length.
    change_points : tuple[int, ...]
        Times at which a new segment starts.
    segment_means : tuple[float, ...]
        Candidate segment means. Adjacent segments always get different ones.
    noise_sd : float
        Standard deviation of the Gaussian noise.
    anomaly_every : int
        Block length of the anomaly cadence.
    anomaly_offset : int
        Offset of each anomaly inside its block.
    anomaly_durations : tuple[int, ...]
        Candidate anomaly durations.
    anomaly_shifts : tuple[float, ...]
        Candidate anomaly mean shifts.
    spurious_at : int, optional
        Start of the spurious anomaly, normally a change point. None plants no spurious anomaly.
    spurious_duration : int
        Duration of the spurious anomaly.
    anomaly_guard : int
        Minimum distance between a collective anomaly and any change point.
    """
    length: int = 1000
    change_points: tuple = (75, 175, 300, 450, 625, 825)
    segment_means: tuple = (2.0, 4.0, 6.0, 8.0)
    noise_sd: float = 0.5
    anomaly_every: int = 100
    anomaly_offset: int = 52
    anomaly_durations: tuple = (1, 4)
    anomaly_shifts: tuple = (-4.0, -2.0, 2.0, 4.0)
    spurious_at: int | None = 300
    spurious_duration: int = 4
    anomaly_guard: int = 5

    def __post_init__(self):
        if self.length < 1:
            raise ConfigError(f"length must be positive, got {self.length}.")
        if list(self.change_points) != sorted(set(self.change_points)) or \
                any(not 1 < c <= self.length for c in self.change_points):
            raise ConfigError("change_points must be strictly increasing times between 2 and length.")
        if len(set(self.segment_means)) < 2 and self.change_points:
            raise ConfigError("At least two distinct segment means are needed to keep adjacent segments apart.")
        if not self.noise_sd > 0:
            raise ConfigError(f"noise_sd must be positive, got {self.noise_sd}.")
        if self.anomaly_every < 1 or not 0 <= self.anomaly_offset < self.anomaly_every:
            raise ConfigError("anomaly_offset must lie inside a block of anomaly_every steps.")
        if not self.anomaly_durations or min(self.anomaly_durations) < 1 or self.spurious_duration < 1:
            raise ConfigError("Anomaly durations must be positive.")
        if not self.anomaly_shifts or 0.0 in self.anomaly_shifts:
            raise ConfigError("Anomaly shifts must be nonzero.")

    @property
    def max_duration(self) -> int:
        return max(max(self.anomaly_durations), self.spurious_duration if self.spurious_at is not None else 0)


def _segment_means(cfg: BenchmarkSimConfig, rng: np.random.Generator) -> list[float]:
    means = [float(rng.choice(cfg.segment_means))]
    for _ in cfg.change_points:
        choices = [m for m in cfg.segment_means if m != means[-1]]
        means.append(float(rng.choice(choices)))
    return means


def _spurious_shifts(cfg: BenchmarkSimConfig, means: list[float]) -> list[float]:
    # The spurious level must differ from the segments on both sides, otherwise the change point moves to its end.
    after = np.searchsorted(np.asarray(cfg.change_points), cfg.spurious_at, side="right")
    before = np.searchsorted(np.asarray(cfg.change_points), cfg.spurious_at - 1, side="right")
    levels = {means[after], means[before]}
    shifts = [s for s in cfg.anomaly_shifts if means[after] + s not in levels]
    return shifts or list(cfg.anomaly_shifts)


def _place_anomalies(cfg: BenchmarkSimConfig, rng: np.random.Generator, means: list[float]) -> list[PlantedAnomaly]:
    planted = []
    for block in range(0, cfg.length, cfg.anomaly_every):
        spurious = cfg.spurious_at is not None and block <= cfg.spurious_at < block + cfg.anomaly_every
        shift = float(rng.choice(_spurious_shifts(cfg, means) if spurious else cfg.anomaly_shifts))
        duration = int(rng.choice(cfg.anomaly_durations))
        if spurious:
            start, duration, kind = cfg.spurious_at, cfg.spurious_duration, EventKind.SPURIOUS_ANOMALY
        else:
            start, kind = block + cfg.anomaly_offset, EventKind.COLLECTIVE_ANOMALY
            for c in cfg.change_points:
                if start - cfg.anomaly_guard <= c <= start + duration - 1 + cfg.anomaly_guard:
                    start = c + cfg.anomaly_guard + 1
        end = start + duration - 1
        if start < 2 or end > cfg.length:
            continue
        planted.append(PlantedAnomaly(start, end, kind, shift))
    return planted


def generate_benchmark_series(cfg: BenchmarkSimConfig | None = None, seed: int = 0) -> SimSeries:
    """
    Generates one mean-shift benchmark series.

    Parameters
    ----------
    cfg : BenchmarkSimConfig, optional
        The settings. Defaults reproduce the benchmark: six change points and one anomaly per 100 steps.
    seed : int
        The random seed. The same seed always gives the same series.

    Returns
    -------
    SimSeries
        The series and its ground truth.
    """
    cfg = cfg if cfg is not None else BenchmarkSimConfig()
    rng = np.random.default_rng(seed)
    means = _segment_means(cfg, rng)
    anomalies = _place_anomalies(cfg, rng, means)

    times = np.arange(1, cfg.length + 1)
    segment = np.searchsorted(np.asarray(cfg.change_points), times, side="right")
    level = np.asarray(means)[segment]
    for anomaly in anomalies:
        level[anomaly.start - 1:anomaly.end] += anomaly.mean_shift
    values = level + rng.normal(0.0, cfg.noise_sd, size=cfg.length)
    return SimSeries(values, tuple(cfg.change_points), tuple(anomalies), seed)


def generate_snr_series(snr: float, duration: int = 4, length: int = 200, anomaly_start: int = 100,
                        noise_sd: float = 0.5, seed: int = 0) -> SimSeries:
    """
    Generates a flat series with a single collective anomaly whose mean shift is snr times the noise standard
    deviation. Useful for sweeping detection power against signal strength.

    Parameters
    ----------
    snr : float
        The anomaly mean shift in units of the noise standard deviation.
    duration : int
        The anomaly duration.
    length : int
        The series length.
    anomaly_start : int
        The first anomalous time.
    noise_sd : float
        Standard deviation of the Gaussian noise.
    seed : int
        The random seed.

    Returns
    -------
    SimSeries
        The series and its ground truth.
    """
    if duration < 1 or anomaly_start < 2 or anomaly_start + duration - 1 > length:
        raise ConfigError("The anomaly must fit inside the series after its first point.")
    rng = np.random.default_rng(seed)
    level = np.zeros(length)
    shift = snr * noise_sd
    level[anomaly_start - 1:anomaly_start - 1 + duration] = shift
    values = level + rng.normal(0.0, noise_sd, size=length)
    anomaly = PlantedAnomaly(anomaly_start, anomaly_start + duration - 1, EventKind.COLLECTIVE_ANOMALY, shift)
    return SimSeries(values, (), (anomaly,), seed)


def _draw_parameters(cfg: ObsModelConfig, rng: np.random.Generator) -> tuple[float, np.ndarray]:
    # Noise variance from the scaled inverse chi-squared prior, then the mean or coefficients given it.
    variance = cfg.v0 * cfg.sigma0_sq / rng.chisquare(cfg.v0)
    if cfg.is_regression:
        coef = rng.normal(0.0, np.sqrt(variance / cfg.k0), size=cfg.feature_dim)
    else:
        coef = np.array([rng.normal(cfg.mu0, np.sqrt(variance / cfg.k0))])
    return variance, coef


def sample_generative(hp: Hyperparams, obs_cfg: ObsModelConfig, length: int, seed: int = 0,
                      features=None) -> SimSeries:
    """
    Samples a series from the generative model the detector assumes. The latent trace holds, per time, the change
    indicator c, the change type a (1 for an anomaly end), the noise variance and the mean.

    Parameters
    ----------
    hp : Hyperparams
        Supplies p0, q0 and delta_t.
    obs_cfg : ObsModelConfig
        The prior over segment parameters.
    length : int
        The series length.
    seed : int
        The random seed.
    features : array_like, optional
        One feature row per time, required for the regression model.

    Returns
    -------
    SimSeries
        The series, with change points, anomalies and the latent trace filled in.
    """
    if obs_cfg.is_regression:
        if features is None:
            raise ConfigError("The regression model needs one feature row per time step.")
        features = np.asarray(features, dtype=float).reshape(length, obs_cfg.feature_dim)
    rng = np.random.default_rng(seed)
    c = np.zeros(length, dtype=int)
    a = np.zeros(length, dtype=int)
    variances = np.empty(length)
    coefs = []
    values = np.empty(length)
    last_change, last_kind = 1, 0
    c[0] = 1
    variance, coef = _draw_parameters(obs_cfg, rng)

    for index in range(length):
        t = index + 1
        if t > 1:
            anomaly_regime = last_change != 1 and last_kind == 0 and t - last_change <= hp.delta_t
            if rng.random() < (hp.q0 if anomaly_regime else hp.p0):
                c[index], a[index] = 1, int(anomaly_regime)
                if anomaly_regime:
                    # Back to the parameters in force just before the anomaly started.
                    variance, coef = variances[last_change - 2], coefs[last_change - 2]
                else:
                    variance, coef = _draw_parameters(obs_cfg, rng)
                last_change, last_kind = t, a[index]
        variances[index] = variance
        coefs.append(coef)
        mean = float(features[index] @ coef) if obs_cfg.is_regression else float(coef[0])
        values[index] = rng.normal(mean, np.sqrt(variance))

    change_points, anomalies, start = [], [], None
    for index in range(1, length):
        if c[index] and a[index]:
            anomalies.append(PlantedAnomaly(start, index, EventKind.COLLECTIVE_ANOMALY,
                                            float(coefs[start - 1][0] - coefs[index][0])))
            change_points.remove(start)
        elif c[index]:
            change_points.append(index + 1)
            start = index + 1
    latent = pd.DataFrame({"time": np.arange(1, length + 1), "c": c, "a": a, "variance": variances,
                           "mean": [float(features[i] @ coefs[i]) if obs_cfg.is_regression else float(coefs[i][0])
                                    for i in range(length)]})
    return SimSeries(values, tuple(change_points), tuple(anomalies), seed, features=features, latent=latent)
