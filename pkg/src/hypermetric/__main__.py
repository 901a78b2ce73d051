import sys

from hypermetric.cli import main

sys.exit(main())
