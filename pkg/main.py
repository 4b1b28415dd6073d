"""
CLI to run the nkmoment commands from a checkout.
"""

import sys

from nkmoment.cli import main

if __name__ == "__main__":
    sys.exit(main())
