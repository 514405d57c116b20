import sys

from shiftmpc.cli import main

sys.exit(main())
