import sys

from fusedface.cli import main

sys.exit(main())
