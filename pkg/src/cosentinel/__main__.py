import sys

from cosentinel.cli import main

sys.exit(main())
