# "evaluate/__init__.py" from libBOCDPy by the libBOCDPy Contributors

from .benchmark import *
from .metrics import *
