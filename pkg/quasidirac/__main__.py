import sys

from quasidirac.cli import main

sys.exit(main())
