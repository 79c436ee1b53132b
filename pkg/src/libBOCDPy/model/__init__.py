# "model/__init__.py" from libBOCDPy by the libBOCDPy Contributors

from .cache import *
from .features import *
from .obsmodel import *
