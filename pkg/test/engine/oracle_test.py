# "engine/oracle_test.py" from libBOCDPy by the libBOCDPy Contributors

import itertools
import unittest

import numpy as np
from numpy.testing import assert_allclose

from libBOCDPy import engine, model
from libBOCDPy.errors import InputError

GRID = list(itertools.product((0.05, 0.2), (0.1, 0.3), (1, 2, 3)))
LENGTH = 8
SERIES_PER_SETTING = 20


def _run(step_init, step, y, cfg, hp):
    # Drives a recursion the way the detector does and returns the state after every observation.
    cache = model.SegmentCache.empty(cfg)
    state, states = None, []
    for value in y:
        cache = cache.extend(value, cap=hp.u_c)
        state = step_init(cache) if state is None else step(state, cache)
        cache = cache.truncate(state.n_c + 1)
        states.append(state)
    return states


def _dense_wa(state, t):
    return np.array([[state.wa(d, r) for r in range(t)] for d in range(t)])


def _series(rng):
    # Mean jumps make every kind of history carry non-negligible mass.
    return rng.normal(0.0, 0.5, size=LENGTH) + rng.choice([0.0, 2.0], size=LENGTH)


class TestOracleConsistency(unittest.TestCase):
    def setUp(self):
        self.cfg = model.ObsModelConfig()
        self.y = np.random.default_rng(1).normal(0.0, 0.5, size=LENGTH)

    def test_evidence_two_ways(self):
        for p0, q0, dt in GRID:
            law = engine.PathLaw("bocd", p0, q0, dt)
            for tables in engine.enumerate_joint(self.y, law, self.cfg):
                self.assertAlmostEqual(tables.evidence, tables.path_evidence, delta=1e-12)
                self.assertAlmostEqual(tables.prior_mass, 0.0, delta=1e-12)
                self.assertEqual(tables.paths, 2 ** (tables.t - 1))

    def test_initialization(self):
        law = engine.PathLaw("bocd", 0.2, 0.3, 2)
        first = engine.enumerate_joint(self.y[:1], law, self.cfg)[0]
        single = model.log_marginal(model.push(model.empty_stats(self.cfg), self.y[0]), self.cfg)
        self.assertAlmostEqual(first.log_wc[0], single, delta=1e-12)
        self.assertAlmostEqual(first.log_qc[0], single, delta=1e-12)
        self.assertEqual(first.log_wa[0, 0], -np.inf)
        self.assertEqual(first.log_ha[0], -np.inf)

    def test_g_at_three(self):
        p0, q0 = 0.2, 0.3
        tables = engine.enumerate_joint(self.y[:3], engine.PathLaw("bocd-ar", p0, q0, 2), self.cfg)[2]
        singles = [model.log_marginal(model.push(model.empty_stats(self.cfg), v), self.cfg) for v in self.y[:3]]
        self.assertAlmostEqual(tables.log_g[0, 0], sum(singles) + np.log(p0) + np.log(q0), delta=1e-12)

    def test_h_sums_w(self):
        law = engine.PathLaw("bocd", 0.1, 0.3, 2)
        for tables in engine.enumerate_joint(self.y, law, self.cfg):
            assert_allclose(tables.log_hc, tables.log_wc, rtol=0, atol=1e-12)
            column = np.array([np.logaddexp.reduce(tables.log_wa[:, r]) for r in range(tables.t)])
            assert_allclose(tables.log_ha, column, rtol=0, atol=1e-12)
            g_rows = np.array([np.logaddexp.reduce(tables.log_g[r]) for r in range(tables.t)])
            assert_allclose(tables.log_ha, g_rows, rtol=0, atol=1e-12)

    def test_as_dict(self):
        tables = engine.enumerate_joint(self.y[:3], engine.PathLaw("bocd", 0.1, 0.2, 1), self.cfg)[-1]
        record = tables.as_dict("bocd")
        self.assertEqual(record["t"], 3)
        self.assertNotIn("log_g", record)
        # No anomaly can end at the change point itself.
        self.assertIsNone(record["log_wa"][0][0])
        self.assertAlmostEqual(record["log_qc"][0], tables.log_qc[0])
        self.assertIn("log_g", tables.as_dict("bocd-ar"))

    def test_too_long(self):
        with self.assertRaises(InputError):
            engine.enumerate_joint(np.zeros(engine.MAX_ORACLE_LENGTH + 1), engine.PathLaw(), self.cfg)

    def test_unknown_variant(self):
        with self.assertRaises(InputError):
            engine.PathLaw("bocpd")
        with self.assertRaises(InputError):
            engine.PathLaw(semantics="theorem")

    def test_ends_anomaly(self):
        for semantics in ("recursion", "prior"):
            for variant in ("bocd", "bocd-ar"):
                law = engine.PathLaw(variant, 0.1, 0.2, 2, semantics)
                with self.subTest(semantics=semantics, variant=variant):
                    # The series start never opens an anomaly.
                    self.assertFalse(law.ends_anomaly([(1, 0)], 2))
                    self.assertTrue(law.ends_anomaly([(1, 0), (4, 0)], 5))
                    self.assertTrue(law.ends_anomaly([(1, 0), (4, 0)], 6))
                    self.assertFalse(law.ends_anomaly([(1, 0), (4, 0)], 7))
                    # Right after an anomaly end the next change is a start.
                    self.assertFalse(law.ends_anomaly([(1, 0), (4, 0), (5, 1)], 6))

    def test_prior_matches_recursion(self):
        # Both transcriptions of the prior give the same tables on every short series of the grid.
        rng = np.random.default_rng(5)
        for p0, q0, dt in GRID:
            y = _series(rng)
            for variant in ("bocd", "bocd-ar"):
                with self.subTest(p0=p0, q0=q0, delta_t=dt, variant=variant):
                    recursion = engine.enumerate_joint(y, engine.PathLaw(variant, p0, q0, dt), self.cfg)
                    prior = engine.enumerate_joint(y, engine.PathLaw(variant, p0, q0, dt, "prior"), self.cfg)
                    for left, right in zip(recursion, prior):
                        assert_allclose(left.log_qc, right.log_qc, rtol=0, atol=1e-12)
                        assert_allclose(left.log_wa, right.log_wa, rtol=0, atol=1e-12)
                        assert_allclose(left.log_ha, right.log_ha, rtol=0, atol=1e-12)
                        assert_allclose(left.log_g, right.log_g, rtol=0, atol=1e-12)


class TestEnginesMatchOracle(unittest.TestCase):
    def setUp(self):
        self.cfg = model.ObsModelConfig()
        self.rng = np.random.default_rng(2024)

    def _check_setting(self, p0, q0, dt):
        hp = engine.Hyperparams(p0=p0, q0=q0, delta_t=dt, u_a=20, u_c=30)
        for _ in range(SERIES_PER_SETTING):
            y = _series(self.rng)
            oracle = engine.enumerate_joint(y, engine.PathLaw.from_hyperparams(hp), self.cfg)
            quadratic = _run(lambda c: engine.bocd_init(c, hp), lambda s, c: engine.bocd_step(s, c, hp), y,
                             self.cfg, hp)
            linear = _run(lambda c: engine.ar_init(c, hp, joint=True), lambda s, c: engine.ar_step(s, c, hp), y,
                          self.cfg, hp)
            for t in range(1, LENGTH + 1):
                exact, w_state, h_state = oracle[t - 1], quadratic[t - 1], linear[t - 1]
                assert_allclose(_dense_wa(w_state, t), exact.log_wa, rtol=0, atol=1e-9)
                assert_allclose(w_state.log_wc, exact.log_wc, rtol=0, atol=1e-9)
                assert_allclose(w_state.log_qc, exact.log_qc, rtol=0, atol=1e-9)
                assert_allclose(h_state.log_ha, exact.log_ha, rtol=0, atol=1e-9)
                assert_allclose(h_state.log_hc, exact.log_hc, rtol=0, atol=1e-9)
                assert_allclose(h_state.log_g, exact.log_g, rtol=0, atol=1e-9)
                self.assertAlmostEqual(float(np.logaddexp.reduce(w_state.log_qc)), exact.evidence, delta=1e-9)

    def test_grid(self):
        for p0, q0, dt in GRID:
            with self.subTest(p0=p0, q0=q0, delta_t=dt):
                self._check_setting(p0, q0, dt)

    def test_posteriors_match(self):
        hp = engine.Hyperparams(p0=0.2, q0=0.3, delta_t=2, u_a=20, u_c=30)
        y = _series(self.rng)
        exact = engine.enumerate_joint(y, engine.PathLaw.from_hyperparams(hp), self.cfg)[-1]
        state = _run(lambda c: engine.ar_init(c, hp, joint=True), lambda s, c: engine.ar_step(s, c, hp), y,
                     self.cfg, hp)[-1]
        probs, r_star = engine.ar_posterior_run_length(state)
        assert_allclose(probs, exact.run_length_posterior(), rtol=0, atol=1e-10)
        self.assertEqual(r_star, exact.map_run_length())
        for r in range(state.n_a + 1):
            self.assertAlmostEqual(engine.ar_anomaly_posterior_fast(state, r, hp), exact.anomaly_posterior(r),
                                   delta=1e-10)
            self.assertAlmostEqual(engine.ar_anomaly_posterior_joint(state, r, hp),
                                   exact.joint_anomaly_posterior(r), delta=1e-10)
        w_state = _run(lambda c: engine.bocd_init(c, hp), lambda s, c: engine.bocd_step(s, c, hp), y, self.cfg,
                       hp)[-1]
        assert_allclose(engine.posterior_change_point(w_state), exact.change_point_posterior(), rtol=0, atol=1e-10)


if __name__ == '__main__':
    unittest.main()
