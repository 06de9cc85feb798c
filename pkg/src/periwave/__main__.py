import sys

from periwave.cli import main

sys.exit(main())
