import sys

from cpmod.cli import main

sys.exit(main())
