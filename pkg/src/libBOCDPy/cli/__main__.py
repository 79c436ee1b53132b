# "cli/__main__.py" from libBOCDPy by the libBOCDPy Contributors

import sys

from .main import main

sys.exit(main())
