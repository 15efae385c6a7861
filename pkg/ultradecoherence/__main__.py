import sys

from ultradecoherence.cli import main

sys.exit(main())
