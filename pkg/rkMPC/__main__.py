import sys

from rkMPC.cli import main

sys.exit(main())
