from mc_curse.cli import main
import sys

sys.exit(main())
