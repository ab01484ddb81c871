import sys

from siacgpc.cli import main

sys.exit(main())
