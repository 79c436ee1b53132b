# "__init__.py" from libBOCDPy by the libBOCDPy Contributors
#
# These are the essential subpackages from libBOCDPy that you'd probably want imported by default.

__all__ = ["bound", "detect", "engine", "evaluate", "model", "sim"]

from . import bound
from . import detect
from . import engine
from . import evaluate
from . import model
from . import sim
