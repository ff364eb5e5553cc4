"""``python -m fide``: same as the ``fide`` console script."""

import sys

from fide.harness.cli import main

sys.exit(main())
