import sys

from xontrib.tnvp.main import main

sys.exit(main())
