# "cli/main.py" from libBOCDPy by the libBOCDPy Contributors
#
# The bocdpy command: streaming detection over CSV input, series simulation, benchmarking, the q0 bound and a hidden
# oracle dump for debugging. Records go to standard output, one JSON object per line; logs go to standard error.

import argparse
import csv
import json
import logging
import pathlib
import sys
from dataclasses import replace

import numpy as np
import pandas as pd

from ..bound.hyperbound import BoundQuery, lambda_a_lower_bound, q0_upper_bound, spurious_alarm_rate
from ..detect.detector import ENGINES, Detector
from ..engine.oracle import MAX_ORACLE_LENGTH, PathLaw, enumerate_joint
from ..errors import ConfigError, InputError
from ..evaluate.benchmark import run_benchmark, sensitivity_sweep
from ..model.features import hour_of_day_design
from ..sim.simgen import BenchmarkSimConfig, generate_benchmark_series, generate_snr_series, sample_generative
from ..types import Observation
from .config import ENDPOINT_MODES, RunConfig

_LOG = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_CONFIG_ERROR = 2


def _load_config(args) -> RunConfig:
    config = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "engine", None) is not None:
        config.engine = args.engine
    if getattr(args, "endpoint_mode", None) is not None:
        config.endpoint_mode = args.endpoint_mode
    if getattr(args, "retain_collective", False):
        config.retain_collective = True
    config.validate()
    return config


def _write_record(stream, record: dict) -> None:
    stream.write(json.dumps(record) + "\n")


def _time_key(label: str):
    # Integer times compare as integers, anything else must be an ISO timestamp.
    try:
        return int(label)
    except ValueError:
        pass
    try:
        stamp = pd.Timestamp(label)
    except ValueError:
        stamp = pd.NaT
    if stamp is pd.NaT:
        raise InputError(f"Time {label!r} is neither an integer nor an ISO timestamp.")
    return stamp


def _output_time(label: str):
    try:
        return int(label)
    except ValueError:
        return label


class _RowReader:
    """
    Turns CSV rows into observations, applying the configured features and fixed-bound scaling. Observations are
    numbered by row so that integer and timestamp inputs are handled alike.
    """
    def __init__(self, config: RunConfig):
        self.config = config
        self.ordinal = 0
        self.labels: dict[int, str] = {}
        self._last_key = None
        self._first_day = None

    def _features(self, label: str, row: list) -> tuple:
        cfg = self.config
        if cfg.features == "hour-of-day":
            stamp = _time_key(label)
            if not isinstance(stamp, pd.Timestamp):
                raise InputError(f"Hour-of-day features need timestamps, got {label!r}.")
            day = stamp.normalize()
            if self._first_day is None:
                self._first_day = day
            x = hour_of_day_design((day - self._first_day).days, stamp.hour)
        else:
            x = np.asarray([float(v) for v in row[2:]], dtype=float)
            if len(x) != cfg.obs_cfg.feature_dim:
                raise InputError(f"Expected {cfg.obs_cfg.feature_dim} feature columns, got {len(x)}.")
        if cfg.feature_bounds is not None:
            x = np.asarray([b.transform(v) for b, v in zip(cfg.feature_bounds, x)], dtype=float)
        return tuple(float(v) for v in x)

    def read(self, row: list) -> Observation:
        if len(row) < 2:
            raise InputError(f"Expected at least a time and a value column, got {len(row)} column(s).")
        label = row[0].strip()
        key = _time_key(label)
        try:
            value = float(row[1])
        except ValueError:
            raise InputError(f"Value {row[1]!r} is not a number.")
        if not np.isfinite(value):
            raise InputError(f"Value {row[1]!r} is not finite.")
        if self.config.value_bounds is not None:
            value = float(self.config.value_bounds.transform(value))
        features = self._features(label, row)
        if self._last_key is not None:
            try:
                increasing = key > self._last_key
            except TypeError:
                raise InputError(f"Time {label!r} does not match the type of earlier times.")
            if not increasing:
                raise InputError(f"Time {label!r} does not follow the previous time.")
        self._last_key = key
        self.ordinal += 1
        self.labels[self.ordinal] = label
        return Observation(self.ordinal, value, features)

    def event_record(self, event) -> dict:
        record = event.to_dict()
        for name in ("start", "end", "alert_time"):
            record[name] = _output_time(self.labels[record[name]])
        return record


def _is_header(row: list) -> bool:
    if not row:
        return False
    try:
        float(row[1] if len(row) > 1 else row[0])
        return False
    except ValueError:
        return True


def cmd_detect(args) -> int:
    config = _load_config(args)
    if args.strict:
        config.strict = True
    if args.features is not None:
        config.features = args.features
    if args.posterior_dump is not None:
        config.posterior_dump = args.posterior_dump
    if args.input is not None:
        config.input_path = args.input
    if args.output is not None:
        config.output_path = args.output
    if args.normalize == "minmax" and config.value_bounds is None:
        raise ConfigError("--normalize minmax needs fixed value bounds in the configuration file.")
    if args.normalize is None:
        config.value_bounds, config.feature_bounds = None, None
    config.validate()
    config.check_bound()

    detector = Detector(config.hp, config.obs_cfg, config.engine, config.endpoint_mode, config.retain_collective)
    reader = _RowReader(config)
    source = open(config.input_path, newline="") if config.input_path not in (None, "-") else sys.stdin
    sink = open(config.output_path, "w") if config.output_path is not None else sys.stdout
    dump = open(config.posterior_dump, "w") if config.posterior_dump is not None else None
    n_events = 0
    try:
        for line_number, row in enumerate(csv.reader(source), start=1):
            if not row or (line_number == 1 and _is_header(row)):
                continue
            try:
                obs = reader.read(row)
                events = detector.process(obs)
            except InputError as e:
                if config.strict:
                    raise InputError(f"Line {line_number}: {e}")
                _LOG.warning("Skipping line %d: %s", line_number, e)
                _write_record(sink, {"schema": 1, "kind": "error", "line": line_number, "message": str(e)})
                sink.flush()
                continue
            for event in events:
                _write_record(sink, reader.event_record(event))
            n_events += len(events)
            if dump is not None:
                posterior = detector.run_length_posterior()
                _write_record(dump, {"time": _output_time(reader.labels[obs.time]), "t": detector.t,
                                     "run_length_posterior": [float(p) for p in posterior]})
            sink.flush()
    finally:
        if source is not sys.stdin:
            source.close()
        if sink is not sys.stdout:
            sink.close()
        if dump is not None:
            dump.close()
    _LOG.info("Processed %d observations, emitted %d events", reader.ordinal, n_events)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _load_config(args)
    if args.generative and args.length is None:
        raise ConfigError("--generative needs --length.")
    if args.snr is not None:
        series = generate_snr_series(args.snr, args.duration, seed=args.seed)
    elif args.generative:
        features = None
        if config.obs_cfg.is_regression:
            if config.features != "hour-of-day":
                raise ConfigError("Generative samples for the regression model need hour-of-day features.")
            features = np.vstack([hour_of_day_design(i // 24, i % 24) for i in range(args.length)])
        series = sample_generative(config.hp, config.obs_cfg, args.length, args.seed, features)
    else:
        sim_cfg = BenchmarkSimConfig()
        if args.length is not None:
            # A change point needs delta_t observations after it to be told apart from an anomaly.
            kept = tuple(c for c in sim_cfg.change_points if c + config.hp.delta_t < args.length)
            spurious_at = sim_cfg.spurious_at if sim_cfg.spurious_at in kept else None
            sim_cfg = replace(sim_cfg, length=args.length, change_points=kept, spurious_at=spurious_at)
        series = generate_benchmark_series(sim_cfg, args.seed)

    frame = series.to_frame()
    if args.out is None:
        frame.to_csv(sys.stdout, index=False)
    else:
        frame.to_csv(args.out, index=False)
    truth_path = args.truth
    if truth_path is None and args.out is not None:
        truth_path = pathlib.Path(args.out).with_suffix(".truth.json")
    if truth_path is not None:
        pathlib.Path(truth_path).write_text(json.dumps(series.truth_dict(), indent=2))
    return EXIT_OK


def cmd_bench(args) -> int:
    config = _load_config(args)
    config.check_bound()
    if args.sweep is not None:
        param, _, raw = args.sweep.partition("=")
        if not raw:
            raise ConfigError(f"--sweep expects PARAM=V1,V2,..., got {args.sweep!r}.")
        values = [int(v) if v.strip().lstrip("-").isdigit() else float(v) for v in raw.split(",")]
        table = sensitivity_sweep(param, values, args.series, config.hp, config.engine, args.seed, args.workers,
                                  obs_cfg=config.obs_cfg, endpoint_mode=config.endpoint_mode)
        print(table.to_string(index=False))
        return EXIT_OK

    result = run_benchmark(args.series, config.hp, config.obs_cfg, config.engine, seed=args.seed,
                           endpoint_mode=config.endpoint_mode, workers=args.workers,
                           retain_collective=config.retain_collective)
    print(f"Engine: {result.engine} ({result.report.n_series} series)")
    print(result.metrics_table().to_string(float_format=lambda v: f"{v:.3f}"))
    print("")
    print(result.timing_table().to_string(float_format=lambda v: f"{v:.3e}"))
    print(f"Mean time per series: {result.mean_series_seconds:.3f} s")
    if args.json is not None:
        pathlib.Path(args.json).write_text(json.dumps(result.to_dict(), indent=2))
    return EXIT_OK


def cmd_bound(args) -> int:
    bound = q0_upper_bound(args.p0, args.dt, args.lambda_a)
    print(f"q0_upper_bound: {bound:.10g}")
    if args.q0 is not None:
        query = BoundQuery(args.p0, args.q0, args.dt, args.lambda_a)
        print(f"spurious_alarm_rate: {spurious_alarm_rate(args.p0, args.q0, args.dt):.10g}")
        print(f"lambda_a_lower_bound: {lambda_a_lower_bound(args.p0, args.q0, args.dt):.10g}")
        print(f"satisfied: {str(query.satisfied).lower()}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    config = _load_config(args)
    if args.len > MAX_ORACLE_LENGTH:
        raise InputError(f"The oracle enumerates every history and stops at length {MAX_ORACLE_LENGTH}.")
    if config.obs_cfg.is_regression:
        raise ConfigError("The oracle dump only supports the intercept-only model.")
    y = np.random.default_rng(args.seed).normal(0.0, 0.5, size=args.len)
    law = PathLaw.from_hyperparams(config.hp, args.variant, args.semantics)
    for tables in enumerate_joint(y, law, config.obs_cfg):
        record = tables.as_dict(args.variant)
        record["y"] = float(y[tables.t - 1])
        _write_record(sys.stdout, record)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bocdpy", description="Online detection of collective anomalies and "
                                                                "change points.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug messages to standard error")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="{detect,simulate,bench,bound}")

    detect = subparsers.add_parser("detect", help="detect events in a CSV stream")
    detect.add_argument("input", nargs="?", default=None, help="CSV file with time,value[,features...]; "
                                                               "standard input if omitted")
    detect.add_argument("--config", help="JSON configuration file")
    detect.add_argument("--engine", choices=ENGINES)
    detect.add_argument("--endpoint-mode", choices=ENDPOINT_MODES)
    detect.add_argument("--retain-collective", action="store_true",
                        help="put collective anomalies back into the series once classified")
    detect.add_argument("--strict", action="store_true", help="abort on the first malformed row")
    detect.add_argument("--features", choices=("hour-of-day",), help="derive regression features from timestamps")
    detect.add_argument("--normalize", choices=("minmax",), help="scale with the bounds given in the configuration")
    detect.add_argument("--posterior-dump", metavar="PATH", help="write the run length posterior of every step")
    detect.add_argument("--output", metavar="PATH", help="write event records here instead of standard output")
    detect.set_defaults(func=cmd_detect)

    simulate = subparsers.add_parser("simulate", help="generate a series with ground truth")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--length", type=int, default=None)
    simulate.add_argument("--generative", action="store_true",
                          help="sample from the generative model under the configured hyperparameters")
    simulate.add_argument("--snr", type=float, default=None, help="one anomaly of this signal to noise ratio")
    simulate.add_argument("--duration", type=int, default=4, help="anomaly duration for --snr")
    simulate.add_argument("--out", metavar="PATH", help="CSV output; standard output if omitted")
    simulate.add_argument("--truth", metavar="PATH", help="ground truth JSON; defaults next to --out")
    simulate.add_argument("--config", help="JSON configuration file")
    simulate.set_defaults(func=cmd_simulate)

    bench = subparsers.add_parser("bench", help="score a detector on simulated series")
    bench.add_argument("--series", type=int, default=100)
    bench.add_argument("--engine", choices=ENGINES)
    bench.add_argument("--endpoint-mode", choices=ENDPOINT_MODES)
    bench.add_argument("--retain-collective", action="store_true")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--workers", type=int, default=None, help="worker processes; one per CPU by default")
    bench.add_argument("--sweep", metavar="PARAM=V1,V2", help="re-run for each value of one hyperparameter")
    bench.add_argument("--json", metavar="PATH", help="also write the report as JSON")
    bench.add_argument("--config", help="JSON configuration file")
    bench.set_defaults(func=cmd_bench)

    bound = subparsers.add_parser("bound", help="upper bound on q0 for a given lambda_a")
    bound.add_argument("--p0", type=float, required=True)
    bound.add_argument("--dt", type=int, required=True)
    bound.add_argument("--lambda-a", type=float, default=0.5)
    bound.add_argument("--q0", type=float, default=None, help="also check this q0")
    bound.set_defaults(func=cmd_bound)

    # Hidden debugging aid: it is not in the metavar and has no help entry, so argparse never lists it.
    oracle = subparsers.add_parser("oracle", description="Dump the exact enumeration of a short simulated series.")
    oracle.add_argument("--len", type=int, required=True)
    oracle.add_argument("--seed", type=int, default=0)
    oracle.add_argument("--variant", choices=("bocd", "bocd-ar"), default="bocd-ar")
    oracle.add_argument("--semantics", choices=("recursion", "prior"), default="recursion")
    oracle.add_argument("--config", help="JSON configuration file")
    oracle.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"bocdpy: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except InputError as e:
        print(f"bocdpy: input error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
