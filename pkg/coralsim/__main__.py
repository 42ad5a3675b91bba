import sys

from coralsim.cli import main

sys.exit(main())
