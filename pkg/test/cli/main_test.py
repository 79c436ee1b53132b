# "cli/main_test.py" from libBOCDPy by the libBOCDPy Contributors

import contextlib
import io
import json
import pathlib
import tempfile
import unittest

import numpy as np

from libBOCDPy.cli import main as cli_main


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli_main.main(argv)
    return code, out.getvalue(), err.getvalue()


def _records(path):
    text = pathlib.Path(path).read_text()
    return [json.loads(line) for line in text.splitlines() if line]


class TestBound(unittest.TestCase):
    def test_upper_bound(self):
        code, out, _ = _run(["bound", "--p0", "0.2", "--dt", "1", "--lambda-a", "0.35"])
        self.assertEqual(code, cli_main.EXIT_OK)
        name, value = out.splitlines()[0].split(": ")
        self.assertEqual(name, "q0_upper_bound")
        self.assertAlmostEqual(float(value), 0.35, delta=1e-9)

    def test_check(self):
        code, out, _ = _run(["bound", "--p0", "0.1", "--dt", "4", "--q0", "0.05"])
        self.assertEqual(code, cli_main.EXIT_OK)
        lines = dict(line.split(": ") for line in out.splitlines())
        self.assertEqual(lines["satisfied"], "true")
        self.assertEqual(set(lines), {"q0_upper_bound", "spurious_alarm_rate", "lambda_a_lower_bound", "satisfied"})
        _, out, _ = _run(["bound", "--p0", "0.1", "--dt", "4", "--q0", "0.4"])
        self.assertIn("satisfied: false", out)

    def test_invalid(self):
        code, _, err = _run(["bound", "--p0", "0.1", "--dt", "4", "--lambda-a", "1.5"])
        self.assertEqual(code, cli_main.EXIT_CONFIG_ERROR)
        self.assertIn("configuration error", err)


class TestSimulateDetect(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = pathlib.Path(self.tmp.name)
        self.csv = self.dir / "series.csv"
        code, _, _ = _run(["simulate", "--seed", "3", "--length", "300", "--out", str(self.csv)])
        self.assertEqual(code, cli_main.EXIT_OK)

    def tearDown(self):
        self.tmp.cleanup()

    def _detect(self, source, name, *extra):
        output = self.dir / name
        code, _, _ = _run(["detect", str(source), "--output", str(output), *extra])
        return code, _records(output)

    def test_simulate(self):
        lines = self.csv.read_text().splitlines()
        self.assertEqual(lines[0], "time,value")
        self.assertEqual(len(lines), 301)
        truth = json.loads((self.dir / "series.truth.json").read_text())
        self.assertEqual(truth["change_points"], [75, 175])
        self.assertFalse(any(a["kind"] == "spurious_anomaly" for a in truth["anomalies"]))
        self.assertEqual(truth["seed"], 3)
        again = self.dir / "again.csv"
        _run(["simulate", "--seed", "3", "--length", "300", "--out", str(again)])
        self.assertEqual(again.read_text(), self.csv.read_text())

    def test_simulate_variants(self):
        code, out, _ = _run(["simulate", "--snr", "6", "--duration", "2", "--seed", "1"])
        self.assertEqual(code, cli_main.EXIT_OK)
        self.assertEqual(len(out.splitlines()), 201)
        code, _, _ = _run(["simulate", "--generative"])
        self.assertEqual(code, cli_main.EXIT_CONFIG_ERROR)
        path = self.dir / "generative.csv"
        code, _, _ = _run(["simulate", "--generative", "--length", "50", "--out", str(path)])
        self.assertEqual(code, cli_main.EXIT_OK)
        self.assertTrue((self.dir / "generative.truth.json").exists())

    def test_detect(self):
        code, records = self._detect(self.csv, "events.jsonl")
        self.assertEqual(code, cli_main.EXIT_OK)
        self.assertTrue(records)
        for record in records:
            self.assertEqual(record["schema"], 1)
            self.assertIn(record["kind"], ("change_point", "collective_anomaly", "spurious_anomaly"))
            self.assertLessEqual(record["start"], record["end"])
            self.assertLessEqual(record["end"], record["alert_time"])
        self.assertEqual([r["alert_time"] for r in records], sorted(r["alert_time"] for r in records))
        _, again = self._detect(self.csv, "again.jsonl")
        self.assertEqual(again, records)

    def test_causal_prefix(self):
        # Output for the first rows does not depend on what comes after them.
        lines = self.csv.read_text().splitlines()
        prefix = self.dir / "prefix.csv"
        prefix.write_text("\n".join(lines[:201]) + "\n")
        _, full = self._detect(self.csv, "full.jsonl")
        _, partial = self._detect(prefix, "partial.jsonl")
        self.assertEqual(partial, [r for r in full if r["alert_time"] <= 200])

    def test_posterior_dump(self):
        dump = self.dir / "posterior.jsonl"
        code, _ = self._detect(self.csv, "events.jsonl", "--posterior-dump", str(dump))
        self.assertEqual(code, cli_main.EXIT_OK)
        rows = _records(dump)
        self.assertEqual(len(rows), 300)
        self.assertEqual(rows[0]["time"], 1)
        for row in rows[::50]:
            self.assertAlmostEqual(float(np.sum(row["run_length_posterior"])), 1.0, delta=1e-9)


class TestDetectInput(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = pathlib.Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, name, text):
        path = self.dir / name
        path.write_text(text)
        return path

    def test_empty_input(self):
        source = self._write("empty.csv", "")
        output = self.dir / "out.jsonl"
        code, _, _ = _run(["detect", str(source), "--output", str(output)])
        self.assertEqual(code, cli_main.EXIT_OK)
        self.assertEqual(output.read_text(), "")

    def test_bad_rows(self):
        source = self._write("bad.csv", "time,value\n1,0.1\n3,0.2\n2,0.3\n4,abc\n5,0.2\n")
        output = self.dir / "out.jsonl"
        code, _, _ = _run(["detect", str(source), "--output", str(output)])
        self.assertEqual(code, cli_main.EXIT_OK)
        errors = [r for r in _records(output) if r["kind"] == "error"]
        self.assertEqual([r["line"] for r in errors], [4, 5])
        self.assertEqual(errors[0]["schema"], 1)

        code, _, err = _run(["detect", str(source), "--output", str(output), "--strict"])
        self.assertEqual(code, cli_main.EXIT_INPUT_ERROR)
        self.assertIn("Line 4", err)

    def test_timestamps(self):
        rows = [f"2024-03-01T{h:02d}:00:00,{0.1 * (h % 2):.1f}" for h in range(24)]
        source = self._write("stamped.csv", "time,value\n" + "\n".join(rows) + "\n5,1.0\n")
        output = self.dir / "out.jsonl"
        code, _, _ = _run(["detect", str(source), "--output", str(output)])
        self.assertEqual(code, cli_main.EXIT_OK)
        records = _records(output)
        self.assertEqual([r["line"] for r in records if r["kind"] == "error"], [26])

    def test_config_errors(self):
        source = self._write("ok.csv", "1,0.1\n2,0.2\n")
        broken = self._write("broken.json", "{not json")
        unknown = self._write("unknown.json", json.dumps({"thresholds": 1}))
        for argv in (["--config", str(broken)], ["--config", str(unknown)],
                     ["--config", str(self.dir / "missing.json")], ["--normalize", "minmax"],
                     ["--engine", "bocd", "--endpoint-mode", "joint"]):
            with self.subTest(argv=argv):
                code, _, _ = _run(["detect", str(source), "--output", str(self.dir / "out.jsonl"), *argv])
                self.assertEqual(code, cli_main.EXIT_CONFIG_ERROR)


class TestBench(unittest.TestCase):
    def test_single_series(self):
        with tempfile.TemporaryDirectory() as tmp:
            report = pathlib.Path(tmp) / "report.json"
            code, out, _ = _run(["bench", "--series", "1", "--workers", "1", "--json", str(report)])
            self.assertEqual(code, cli_main.EXIT_OK)
            self.assertIn("Engine: bocd-ar (1 series)", out)
            record = json.loads(report.read_text())
            self.assertEqual(record["engine"], "bocd-ar")
            self.assertEqual(record["metrics"]["n_series"], 1)

    def test_bad_sweep(self):
        code, _, _ = _run(["bench", "--series", "1", "--sweep", "delta_t"])
        self.assertEqual(code, cli_main.EXIT_CONFIG_ERROR)


class TestOracleAndHelp(unittest.TestCase):
    def test_oracle(self):
        code, out, _ = _run(["oracle", "--len", "4", "--seed", "2"])
        self.assertEqual(code, cli_main.EXIT_OK)
        records = [json.loads(line) for line in out.splitlines()]
        self.assertEqual([r["t"] for r in records], [1, 2, 3, 4])
        self.assertIn("log_g", records[-1])
        self.assertIn("y", records[0])
        code, _, _ = _run(["oracle", "--len", "20"])
        self.assertEqual(code, cli_main.EXIT_INPUT_ERROR)
        _, recursion, _ = _run(["oracle", "--len", "5", "--variant", "bocd"])
        code, prior, _ = _run(["oracle", "--len", "5", "--variant", "bocd", "--semantics", "prior"])
        self.assertEqual(code, cli_main.EXIT_OK)
        self.assertEqual([json.loads(line)["t"] for line in prior.splitlines()], [1, 2, 3, 4, 5])
        self.assertIn("log_qc", json.loads(recursion.splitlines()[-1]))

    def test_help_hides_oracle(self):
        parser = cli_main.build_parser()
        self.assertNotIn("oracle", parser.format_help())
        self.assertNotIn("oracle", parser.format_usage())
        self.assertEqual(parser.parse_args(["oracle", "--len", "3"]).command, "oracle")


if __name__ == '__main__':
    unittest.main()
