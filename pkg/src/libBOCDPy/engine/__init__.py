# "engine/__init__.py" from libBOCDPy by the libBOCDPy Contributors

from .bocd import *
from .bocd_ar import *
from .bocpd import *
from .hyperparams import *
from .oracle import *
