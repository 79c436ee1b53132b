# "evaluate/benchmark_test.py" from libBOCDPy by the libBOCDPy Contributors

import math
import unittest

from libBOCDPy import engine, evaluate, sim
from libBOCDPy.errors import ConfigError

SHORT = sim.BenchmarkSimConfig(length=300, change_points=(75, 175), spurious_at=None)


class TestRunBenchmark(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.result = evaluate.run_benchmark(n_series=2, sim_cfg=SHORT, seed=4)

    def test_result(self):
        result = self.result
        self.assertEqual(result.engine, "bocd-ar")
        self.assertEqual(result.report.n_series, 2)
        self.assertEqual(len(result.series_seconds), 2)
        self.assertEqual(result.timings.steps, 2 * SHORT.length)
        self.assertGreater(result.total_seconds, 0.0)
        self.assertLessEqual(result.report.change_point.tp, 4)

    def test_tables(self):
        metrics = self.result.metrics_table()
        self.assertEqual(list(metrics.index), ["change_point", "anomaly"])
        self.assertIn("f1", metrics.columns)
        timing = self.result.timing_table()
        self.assertEqual(list(timing.index), ["likelihoods", "recursion", "anomaly", "change_point"])
        self.assertTrue((timing.per_step_mean >= 0).all())

    def test_to_dict(self):
        record = self.result.to_dict()
        self.assertEqual(record["schema"], 1)
        self.assertEqual(record["metrics"]["n_series"], 2)
        self.assertEqual(len(record["timings"]), 4)

    def test_workers_agree(self):
        parallel = evaluate.run_benchmark(n_series=2, sim_cfg=SHORT, seed=4, workers=2)
        self.assertEqual(parallel.report, self.result.report)

    def test_invalid(self):
        with self.assertRaises(ConfigError):
            evaluate.run_benchmark(n_series=0)
        with self.assertRaises(ConfigError):
            evaluate.run_benchmark(n_series=1, workers=0)


class TestBaselineComparison(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.linear = evaluate.run_benchmark(n_series=10, engine="bocd-ar", workers=2).report
        cls.baseline = evaluate.run_benchmark(n_series=10, engine="bocpd", workers=2).report

    def test_baseline_finds_change_points(self):
        self.assertGreaterEqual(self.baseline.change_point.recall, 0.9)

    def test_baseline_precision_gap(self):
        # Every anomaly looks like a pair of change points to the baseline.
        self.assertGreaterEqual(self.linear.change_point.precision - self.baseline.change_point.precision, 0.3)
        self.assertEqual(self.baseline.anomaly.tp, 0)


class TestStudies(unittest.TestCase):
    def test_sensitivity_sweep(self):
        table = evaluate.sensitivity_sweep("q0", [0.1, 0.3], n_series=1, sim_cfg=SHORT)
        self.assertEqual(list(table.q0), [0.1, 0.3])
        self.assertIn("anomaly_f1", table.columns)
        with self.assertRaises(ConfigError):
            evaluate.sensitivity_sweep("horizon", [1], n_series=1, sim_cfg=SHORT)

    def test_complexity_slope(self):
        slope, table = evaluate.complexity_slope("bocd-ar", caps=(30, 60), hp=engine.Hyperparams(u_a=20, u_c=30))
        self.assertTrue(math.isfinite(slope))
        self.assertEqual(list(table.u_c), [30, 60])
        with self.assertRaises(ConfigError):
            evaluate.complexity_slope("bocd", caps=(30,))

    def test_complexity_cells(self):
        bocd, table = evaluate.complexity_slope("bocd", measure="cells")
        linear, _ = evaluate.complexity_slope("bocd-ar", measure="cells")
        self.assertEqual(list(table.u_c), [50, 100, 200, 400])
        self.assertIn("median_step_cells", table.columns)
        self.assertTrue(1.6 <= bocd <= 2.4)
        self.assertTrue(0.8 <= linear <= 1.3)
        with self.assertRaises(ConfigError):
            evaluate.complexity_slope("bocd", measure="flops")

    def test_window_length_sweep(self):
        # Windows shorter than the longest planted anomaly lose anomalies; longer ones change little.
        table = evaluate.sensitivity_sweep("delta_t", [1, 2, 3, 4, 6, 8], n_series=10, workers=2)
        f1 = dict(zip(table.delta_t, table.anomaly_f1))
        self.assertLess(max(f1[v] for v in (1, 2, 3)), min(f1[v] for v in (4, 6, 8)))
        self.assertLessEqual(max(f1[v] for v in (4, 6, 8)) - min(f1[v] for v in (4, 6, 8)), 0.05)

    def test_runtime_ratio(self):
        ratio = evaluate.runtime_ratio(n_series=1, sim_cfg=SHORT)
        self.assertGreater(ratio, 0.0)


if __name__ == '__main__':
    unittest.main()
