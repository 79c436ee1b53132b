# "__init__.py" from libBOCDPy by the libBOCDPy Contributors
#
# Complete set of tests to be run.

import unittest

from .bound.hyperbound_test import *
from .cli.config_test import *
from .cli.main_test import *
from .detect.checkpoint_test import *
from .detect.detector_test import *
from .engine.bocd_ar_test import *
from .engine.bocd_test import *
from .engine.bocpd_test import *
from .engine.hyperparams_test import *
from .engine.oracle_test import *
from .evaluate.benchmark_test import *
from .evaluate.metrics_test import *
from .model.cache_test import *
from .model.features_test import *
from .model.obsmodel_test import *
from .sim.simgen_test import *

if __name__ == '__main__':
    unittest.main()
