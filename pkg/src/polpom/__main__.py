import sys

from polpom.cli import main

sys.exit(main())
