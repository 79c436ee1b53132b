# "detect/checkpoint_test.py" from libBOCDPy by the libBOCDPy Contributors

import unittest

from libBOCDPy import detect, model
from libBOCDPy.errors import HorizonError
from libBOCDPy.types import Observation


class TestCheckpointRing(unittest.TestCase):
    def setUp(self):
        self.cache = model.SegmentCache.empty(model.ObsModelConfig())
        self.ring = detect.CheckpointRing(3, detect.Checkpoint(0, None, None, self.cache))
        for t in range(1, 6):
            self.ring.append(detect.Checkpoint(t, Observation(10 * t, float(t)), None, self.cache))

    def test_bounded(self):
        self.assertEqual(len(self.ring), 4)
        self.assertEqual(self.ring.oldest, 2)
        self.assertEqual(self.ring.latest.t, 5)

    def test_at(self):
        self.assertEqual(self.ring.at(3).obs.time, 30)
        with self.assertRaises(HorizonError):
            self.ring.at(1)
        with self.assertRaises(HorizonError):
            self.ring.at(6)

    def test_append_out_of_order(self):
        with self.assertRaises(ValueError):
            self.ring.append(detect.Checkpoint(7, Observation(70, 7.0), None, self.cache))

    def test_observations_after(self):
        self.assertEqual([obs.time for obs in self.ring.observations_after(2)], [30, 40, 50])
        self.assertEqual([obs.time for obs in self.ring.observations_after(1)], [20, 30, 40, 50])
        with self.assertRaises(HorizonError):
            self.ring.observations_after(0)

    def test_rewind(self):
        checkpoint = self.ring.rewind(3)
        self.assertEqual(checkpoint.t, 3)
        self.assertEqual(self.ring.latest.t, 3)
        self.ring.append(detect.Checkpoint(4, Observation(45, 4.5), None, self.cache))
        self.assertEqual(self.ring.latest.obs.time, 45)


if __name__ == '__main__':
    unittest.main()
