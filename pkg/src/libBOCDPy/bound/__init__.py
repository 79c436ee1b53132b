# "bound/__init__.py" from libBOCDPy by the libBOCDPy Contributors

from .hyperbound import *
