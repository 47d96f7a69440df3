import sys

from buildmst.cli import main

sys.exit(main())
