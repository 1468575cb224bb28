import sys

from recgraph.cli import main

sys.exit(main())
