# "engine/hyperparams_test.py" from libBOCDPy by the libBOCDPy Contributors

import unittest

from libBOCDPy import engine
from libBOCDPy.errors import ConfigError


class TestHyperparams(unittest.TestCase):
    def test_defaults(self):
        hp = engine.Hyperparams()
        self.assertEqual((hp.p0, hp.q0, hp.delta_t, hp.u_a, hp.u_c), (0.1, 0.2, 4, 27, 299))
        self.assertEqual((hp.lambda_a, hp.lambda_c, hp.delta, hp.confirm_lag), (0.5, 0.5, 0, 5))
        self.assertIsNone(hp.trunc_mass)

    def test_validation(self):
        bad = ({"p0": 0.0}, {"q0": 1.0}, {"delta_t": 0}, {"u_a": 4}, {"u_a": 299}, {"lambda_a": 0.0},
               {"lambda_c": -1.0}, {"delta": -1}, {"confirm_lag": -1}, {"anomaly_confirm_lag": -2},
               {"trunc_mass": 1.5}, {"trunc_mass": 0.01, "min_range_len": 6})
        for changes in bad:
            with self.subTest(**changes):
                with self.assertRaises(ConfigError):
                    engine.Hyperparams(**changes)

    def test_lambda_above_one(self):
        hp = engine.Hyperparams(lambda_a=1.5, lambda_c=2.0)
        self.assertEqual(hp.lambda_a, 1.5)

    def test_replace(self):
        hp = engine.Hyperparams()
        changed = hp.replace(delta_t=6)
        self.assertEqual(changed.delta_t, 6)
        self.assertEqual(hp.delta_t, 4)
        with self.assertRaises(ConfigError):
            hp.replace(horizon=3)
        with self.assertRaises(ConfigError):
            hp.replace(delta_t=30)

    def test_dict(self):
        hp = engine.Hyperparams(trunc_mass=0.001, min_range_len=50)
        self.assertEqual(engine.Hyperparams.from_dict(hp.to_dict()), hp)
        with self.assertRaises(ConfigError):
            engine.Hyperparams.from_dict({"p_0": 0.1})

    def test_checkpoint_horizon(self):
        hp = engine.Hyperparams(anomaly_confirm_lag=3)
        self.assertEqual(hp.checkpoint_horizon, 27 + 4 + 2 + 3)


if __name__ == '__main__':
    unittest.main()
