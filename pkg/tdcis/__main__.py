"""Allow ``python -m tdcis``."""

import sys

from tdcis.interface.cli import main

sys.exit(main())
