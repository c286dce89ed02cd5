import sys

from .appcli import main

sys.exit(main())
