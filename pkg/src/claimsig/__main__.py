import sys

from claimsig.cli import main

sys.exit(main())
