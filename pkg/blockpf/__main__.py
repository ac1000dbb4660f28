"""Allow `python -m blockpf`."""

import sys

from blockpf.cli import main

sys.exit(main())
