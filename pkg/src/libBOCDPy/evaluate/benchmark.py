# "evaluate/benchmark.py" from libBOCDPy by the libBOCDPy Contributors
#
# Runs detectors over batches of simulated series, in parallel across series, and aggregates the criteria and the
# per-phase timings. Also home to the hyperparameter sensitivity sweep, the complexity slope fit and the BOCD over
# BOCD-AR runtime ratio.

import logging
import time as _time
from dataclasses import dataclass
from functools import partial
from multiprocessing import Pool

import numpy as np
import pandas as pd

from ..detect.detector import PHASES, Detector, PhaseTimings
from ..engine.hyperparams import Hyperparams
from ..errors import ConfigError
from ..model.obsmodel import ObsModelConfig
from ..sim.simgen import BenchmarkSimConfig, generate_benchmark_series
from ..types import Observation
from .metrics import MetricsReport, Tally, match_events

_LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchmarkResult:
    """
    The outcome of a benchmark run.

    Attributes
    ----------
    engine : str
        The engine that was run.
    report : MetricsReport
        The criteria aggregated over every series.
    timings : PhaseTimings
        Per-step phase timings pooled over every series.
    series_seconds : tuple[float, ...]
        Wall clock time of each series.
    """
    engine: str
    report: MetricsReport
    timings: PhaseTimings
    series_seconds: tuple

    @property
    def total_seconds(self) -> float:
        return float(np.sum(self.series_seconds))

    @property
    def mean_series_seconds(self) -> float:
        return float(np.mean(self.series_seconds)) if self.series_seconds else 0.0

    def metrics_table(self) -> pd.DataFrame:
        """
        Returns the criteria with one row per kind of change.
        """
        rows = []
        for label, metrics in (("change_point", self.report.change_point), ("anomaly", self.report.anomaly)):
            rows.append({"kind": label, "precision": metrics.precision, "recall": metrics.recall, "f1": metrics.f1,
                         "false_positive_rate": metrics.false_positive_rate, "mean_delay": metrics.mean_delay,
                         "mean_excess_delay": metrics.mean_excess_delay, "tp": metrics.tp, "fp": metrics.fp,
                         "fn": metrics.fn})
        return pd.DataFrame(rows).set_index("kind")

    def timing_table(self) -> pd.DataFrame:
        """
        Returns the time spent per phase: the total per series and the mean and median per step, in seconds.
        """
        n_series = max(len(self.series_seconds), 1)
        totals = self.timings.totals()
        means = self.timings.per_step_mean()
        medians = self.timings.per_step_median()
        rows = [{"phase": phase, "per_series": totals[phase] / n_series, "per_step_mean": means[phase],
                 "per_step_median": medians[phase]} for phase in PHASES]
        return pd.DataFrame(rows).set_index("phase")

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "engine": self.engine,
            "metrics": self.report.to_dict(),
            "timings": self.timing_table().reset_index().to_dict(orient="records"),
            "total_seconds": self.total_seconds,
            "mean_series_seconds": self.mean_series_seconds,
        }


def _run_series(seed: int, hp: Hyperparams, obs_cfg: ObsModelConfig, engine: str, endpoint_mode: str,
                sim_cfg: BenchmarkSimConfig, tol_cp: int, tol_anomaly: int,
                retain_collective: bool) -> tuple[Tally, PhaseTimings, float]:
    # Module level so worker processes can unpickle it.
    series = generate_benchmark_series(sim_cfg, seed)
    detector = Detector(hp, obs_cfg, engine, endpoint_mode, retain_collective)
    started = _time.perf_counter()
    events = detector.run(series.observations())
    seconds = _time.perf_counter() - started
    tally = match_events(series, events, tol_cp, tol_anomaly).tally(hp.confirm_lag, hp.anomaly_confirm_lag)
    return tally, detector.timings, seconds


def run_benchmark(n_series: int = 100, hp: Hyperparams | None = None, obs_cfg: ObsModelConfig | None = None,
                  engine: str = "bocd-ar", sim_cfg: BenchmarkSimConfig | None = None, seed: int = 0,
                  endpoint_mode: str = "sequential", workers: int | None = 1, tol_cp: int | None = None,
                  tol_anomaly: int | None = None, retain_collective: bool = False) -> BenchmarkResult:
    """
    Runs a detector over simulated benchmark series and aggregates the criteria and timings. Series i is generated
    from seed + i, so runs with different engines see identical data.

    Parameters
    ----------
    n_series : int
        The number of series. Must be at least 1.
    hp : Hyperparams, optional
        The hyperparameters. Defaults to the simulation setting.
    obs_cfg : ObsModelConfig, optional
        The observation model. Defaults to the simulation setting.
    engine : str
        "bocd-ar", "bocd" or "bocpd".
    sim_cfg : BenchmarkSimConfig, optional
        The series layout.
    seed : int
        The seed of the first series.
    endpoint_mode : str
        "sequential" or "joint".
    workers : int, optional
        Worker processes. 1 runs every series in this process, None uses one per CPU.
    tol_cp : int, optional
        The change point matching tolerance. Defaults to hp.delta.
    tol_anomaly : int, optional
        The anomaly matching tolerance. Defaults to hp.delta_t.
    retain_collective : bool
        Passed to each Detector.

    Returns
    -------
    BenchmarkResult
        The aggregated result.
    """
    if n_series < 1:
        raise ConfigError(f"n_series must be at least 1, got {n_series}.")
    if workers is not None and workers < 1:
        raise ConfigError(f"workers must be at least 1, got {workers}.")
    hp = hp if hp is not None else Hyperparams()
    obs_cfg = obs_cfg if obs_cfg is not None else ObsModelConfig()
    sim_cfg = sim_cfg if sim_cfg is not None else BenchmarkSimConfig()
    tol_cp = hp.delta if tol_cp is None else tol_cp
    tol_anomaly = hp.delta_t if tol_anomaly is None else tol_anomaly

    run_func = partial(_run_series, hp=hp, obs_cfg=obs_cfg, engine=engine, endpoint_mode=endpoint_mode,
                       sim_cfg=sim_cfg, tol_cp=tol_cp, tol_anomaly=tol_anomaly, retain_collective=retain_collective)
    seeds = [seed + i for i in range(n_series)]
    _LOG.info("Running %s over %d series with %s worker(s)", engine, n_series, workers or "all")
    if workers == 1:
        results = [run_func(s) for s in seeds]
    else:
        with Pool(processes=workers) as pool:
            results = pool.map(run_func, seeds)

    tally, timings = Tally(), PhaseTimings()
    for series_tally, series_timings, _ in results:
        tally = tally + series_tally
        timings = timings + series_timings
    return BenchmarkResult(engine, tally.report(), timings, tuple(seconds for _, _, seconds in results))


def sensitivity_sweep(param: str, values, n_series: int = 30, hp: Hyperparams | None = None,
                      engine: str = "bocd-ar", seed: int = 0, workers: int | None = 1, **kwargs) -> pd.DataFrame:
    """
    Re-runs the benchmark with one hyperparameter set to each of the given values. The matching tolerances stay at
    the values implied by the base hyperparameters so every row is scored the same way.

    Parameters
    ----------
    param : str
        The Hyperparams field to vary, such as "delta_t".
    values : iterable
        The values to try.
    n_series : int
        Series per value.
    hp : Hyperparams, optional
        The base hyperparameters.
    engine : str
        The engine to run.
    seed : int
        The seed of the first series, shared by every value.
    workers : int, optional
        Worker processes per benchmark run.
    **kwargs
        Further arguments for run_benchmark.

    Returns
    -------
    pd.DataFrame
        One row per value with the anomaly and change point precision, recall and F1.
    """
    hp = hp if hp is not None else Hyperparams()
    kwargs.setdefault("tol_cp", hp.delta)
    kwargs.setdefault("tol_anomaly", hp.delta_t)
    rows = []
    for value in values:
        result = run_benchmark(n_series, hp.replace(**{param: value}), engine=engine, seed=seed, workers=workers,
                               **kwargs)
        report = result.report
        rows.append({param: value,
                     "anomaly_precision": report.anomaly.precision, "anomaly_recall": report.anomaly.recall,
                     "anomaly_f1": report.anomaly.f1, "change_point_precision": report.change_point.precision,
                     "change_point_recall": report.change_point.recall, "change_point_f1": report.change_point.f1})
    return pd.DataFrame(rows)


def complexity_slope(engine: str, caps=(50, 100, 200, 400), hp: Hyperparams | None = None,
                     obs_cfg: ObsModelConfig | None = None, seed: int = 0,
                     measure: str = "seconds") -> tuple[float, pd.DataFrame]:
    """
    Measures how the per-step cost grows with the change point search cap u_c. Each cap runs on an anomaly-free
    stream long enough for the search range to saturate, and the median cost per step over the saturated part is
    fitted against the cap on a log-log scale.

    Parameters
    ----------
    engine : str
        "bocd", "bocd-ar" or "bocpd".
    caps : iterable of int
        The values of u_c.
    hp : Hyperparams, optional
        The base hyperparameters; u_c is replaced by each cap.
    obs_cfg : ObsModelConfig, optional
        The observation model.
    seed : int
        The stream seed.
    measure : str
        "seconds" times every step. "cells" counts the log-probability cells the recursion state holds after each
        step, which tracks the work per step without timing noise.

    Returns
    -------
    tuple[float, pd.DataFrame]
        The fitted slope and a table of cap against the median cost per step.
    """
    if measure not in ("seconds", "cells"):
        raise ConfigError(f"Unknown cost measure: {measure!r}.")
    hp = hp if hp is not None else Hyperparams()
    caps = [int(cap) for cap in caps]
    if len(caps) < 2:
        raise ConfigError("At least two caps are needed to fit a slope.")
    rng = np.random.default_rng(seed)
    rows = []
    for cap in caps:
        stream = rng.normal(0.0, 0.5, size=2 * cap + 50)
        detector = Detector(hp.replace(u_c=cap), obs_cfg, engine)
        cells = []
        for t, y in enumerate(stream, start=1):
            detector.process(Observation(t, float(y)))
            cells.append(detector.engine.table_size(detector.state))
        if measure == "cells":
            per_step = np.asarray(cells, dtype=float)
        else:
            per_step = np.sum([detector.timings.samples[phase] for phase in PHASES], axis=0)
        rows.append({"u_c": cap, f"median_step_{measure}": float(np.median(per_step[-cap:]))})
    table = pd.DataFrame(rows)
    slope, _ = np.polyfit(np.log(table["u_c"]), np.log(table[f"median_step_{measure}"]), 1)
    return float(slope), table


def runtime_ratio(n_series: int = 10, hp: Hyperparams | None = None, seed: int = 0, **kwargs) -> float:
    """
    Returns the total runtime of BOCD divided by that of BOCD-AR on the same series. Both run in this process so the
    timings are comparable.
    """
    slow = run_benchmark(n_series, hp, engine="bocd", seed=seed, workers=1, **kwargs)
    fast = run_benchmark(n_series, hp, engine="bocd-ar", seed=seed, workers=1, **kwargs)
    return slow.total_seconds / fast.total_seconds
