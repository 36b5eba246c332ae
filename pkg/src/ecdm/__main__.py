from ecdm.cli import main
import sys

sys.exit(main())
