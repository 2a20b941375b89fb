import sys

from etrs.cli import main

sys.exit(main())
