import sys

from flmdep.cli import main

sys.exit(main())
