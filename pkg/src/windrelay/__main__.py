from windrelay.cli import main
import sys

sys.exit(main())
