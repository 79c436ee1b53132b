# "sim/simgen_test.py" from libBOCDPy by the libBOCDPy Contributors

import unittest

import numpy as np

from libBOCDPy import engine, model, sim
from libBOCDPy.errors import ConfigError
from libBOCDPy.types import EventKind


class TestBenchmarkSeries(unittest.TestCase):
    def setUp(self):
        self.series = sim.generate_benchmark_series(seed=12)

    def test_deterministic(self):
        again = sim.generate_benchmark_series(seed=12)
        np.testing.assert_array_equal(self.series.values, again.values)
        self.assertEqual(self.series.anomalies, again.anomalies)
        self.assertFalse(np.array_equal(self.series.values, sim.generate_benchmark_series(seed=13).values))

    def test_layout(self):
        self.assertEqual(len(self.series), 1000)
        self.assertEqual(self.series.change_points, (75, 175, 300, 450, 625, 825))
        self.assertEqual(len(self.series.anomalies), 10)
        self.assertEqual(len(self.series.collective_anomalies), 9)
        spurious = [a for a in self.series.anomalies if a.kind is EventKind.SPURIOUS_ANOMALY]
        self.assertEqual([(a.start, a.end) for a in spurious], [(300, 303)])
        starts = [a.start for a in self.series.collective_anomalies]
        self.assertEqual(starts, [52, 152, 252, 456, 552, 652, 752, 852, 952])
        for anomaly in self.series.collective_anomalies:
            self.assertIn(anomaly.duration, (1, 4))
            self.assertIn(anomaly.mean_shift, (-4.0, -2.0, 2.0, 4.0))

    def test_segment_levels(self):
        values = self.series.values.copy()
        for anomaly in self.series.anomalies:
            values[anomaly.start - 1:anomaly.end] = np.nan
        bounds = (1,) + self.series.change_points + (1001,)
        levels = [np.nanmean(values[lo - 1:hi - 1]) for lo, hi in zip(bounds[:-1], bounds[1:])]
        for level in levels:
            self.assertLess(min(abs(level - m) for m in (2.0, 4.0, 6.0, 8.0)), 0.25)
        self.assertTrue(all(abs(a - b) > 1.5 for a, b in zip(levels[:-1], levels[1:])))
        self.assertAlmostEqual(float(np.nanstd(values[:74])), 0.5, delta=0.15)

    def test_anomaly_shift(self):
        for anomaly in self.series.collective_anomalies:
            before = np.mean(self.series.values[anomaly.start - 6:anomaly.start - 1])
            inside = np.mean(self.series.values[anomaly.start - 1:anomaly.end])
            self.assertAlmostEqual(inside - before, anomaly.mean_shift, delta=2.0)

    def test_outputs(self):
        frame = self.series.to_frame()
        self.assertEqual(list(frame.columns), ["time", "value"])
        self.assertEqual(frame.time.iloc[0], 1)
        observations = self.series.observations()
        self.assertEqual((observations[9].time, observations[9].value), (10, self.series.values[9]))
        truth = self.series.truth_dict()
        self.assertEqual(truth["change_points"], [75, 175, 300, 450, 625, 825])
        self.assertEqual(len(truth["anomalies"]), 10)
        self.assertEqual(sim.PlantedAnomaly.from_dict(truth["anomalies"][0]), self.series.anomalies[0])

    def test_config_validation(self):
        for changes in ({"length": 0}, {"change_points": (300, 75)}, {"change_points": (1,)},
                        {"segment_means": (2.0,)}, {"noise_sd": 0.0}, {"anomaly_offset": 100},
                        {"anomaly_durations": (0,)}, {"anomaly_shifts": (0.0, 2.0)}):
            with self.subTest(**{k: str(v) for k, v in changes.items()}):
                with self.assertRaises(ConfigError):
                    sim.BenchmarkSimConfig(**changes)

    def test_spurious_level(self):
        # The spurious anomaly stands apart from the segments on both sides of its change point.
        for seed in range(10):
            values = sim.generate_benchmark_series(seed=seed).values
            inside = np.mean(values[299:303])
            with self.subTest(seed=seed):
                self.assertGreater(abs(inside - np.mean(values[289:299])), 1.0)
                self.assertGreater(abs(inside - np.mean(values[304:314])), 1.0)

    def test_without_spurious(self):
        series = sim.generate_benchmark_series(sim.BenchmarkSimConfig(spurious_at=None), seed=1)
        self.assertEqual(len(series.collective_anomalies), 10)


class TestSnrSeries(unittest.TestCase):
    def test_single_anomaly(self):
        series = sim.generate_snr_series(4.0, duration=3, length=150, anomaly_start=80, seed=2)
        self.assertEqual(len(series), 150)
        self.assertEqual(series.change_points, ())
        (anomaly,) = series.anomalies
        self.assertEqual((anomaly.start, anomaly.end, anomaly.mean_shift), (80, 82, 2.0))

    def test_invalid(self):
        with self.assertRaises(ConfigError):
            sim.generate_snr_series(4.0, anomaly_start=1)
        with self.assertRaises(ConfigError):
            sim.generate_snr_series(4.0, duration=5, length=100, anomaly_start=97)


class TestGenerativeSample(unittest.TestCase):
    def test_change_law(self):
        hp = engine.Hyperparams(p0=0.3, q0=0.6, delta_t=3)
        series = sim.sample_generative(hp, model.ObsModelConfig(), 20000, seed=5)
        c, a = series.latent.c.to_numpy(), series.latent.a.to_numpy()
        in_regime, changed = [], []
        last_change, last_kind = 1, 0
        for index in range(1, len(c)):
            t = index + 1
            in_regime.append(last_change != 1 and last_kind == 0 and t - last_change <= hp.delta_t)
            changed.append(c[index] == 1)
            if c[index]:
                last_change, last_kind = t, a[index]
                self.assertEqual(a[index], int(in_regime[-1]))
        in_regime, changed = np.array(in_regime), np.array(changed)
        self.assertAlmostEqual(changed[in_regime].mean(), hp.q0, delta=0.03)
        self.assertAlmostEqual(changed[~in_regime].mean(), hp.p0, delta=0.03)

    def test_truth(self):
        hp = engine.Hyperparams(p0=0.05, q0=0.3, delta_t=4)
        series = sim.sample_generative(hp, model.ObsModelConfig(), 2000, seed=8)
        latent = series.latent
        for anomaly in series.anomalies:
            self.assertLessEqual(anomaly.duration, hp.delta_t)
            self.assertEqual(latent.a.iloc[anomaly.end], 1)
            self.assertNotIn(anomaly.start, series.change_points)
        for c in series.change_points:
            self.assertEqual((latent.c.iloc[c - 1], latent.a.iloc[c - 1]), (1, 0))

    def test_regression_needs_features(self):
        cfg = model.ObsModelConfig(model.ModelVariant.LINEAR_REGRESSION, feature_dim=2)
        with self.assertRaises(ConfigError):
            sim.sample_generative(engine.Hyperparams(), cfg, 10)
        features = np.column_stack((np.ones(10), np.arange(10.0)))
        series = sim.sample_generative(engine.Hyperparams(), cfg, 10, features=features)
        self.assertEqual(list(series.to_frame().columns), ["time", "value", "x1", "x2"])
        self.assertEqual(len(series.observations()[0].features), 2)


if __name__ == '__main__':
    unittest.main()
