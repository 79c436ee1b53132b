# "detect/__init__.py" from libBOCDPy by the libBOCDPy Contributors

from .checkpoint import *
from .detector import *
