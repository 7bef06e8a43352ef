import sys

from risqr.cli import main

sys.exit(main())
