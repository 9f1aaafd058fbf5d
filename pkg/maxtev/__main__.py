import sys

from maxtev.cli import main

sys.exit(main())
