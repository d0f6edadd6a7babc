import sys

from sparse_rag.cli import main

sys.exit(main())
