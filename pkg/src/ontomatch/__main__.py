import sys

from ontomatch.cli import main

sys.exit(main())
