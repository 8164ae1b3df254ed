import sys

from bvsym.cli import main

sys.exit(main())
