"""
STT-MRAM Reliability Lab

Command-line laboratory for the retention, error-correction and write/read
reliability of spin-transfer-torque magnetic memory arrays.

Version: 1.0.0
License: MIT
"""

import logging
import os
import sys

LOG_LEVEL_VARIABLE = 'STTLAB_LOG_LEVEL'


def configure_logging():
    """Send log records to stderr at the level named by STTLAB_LOG_LEVEL."""
    level_name = os.environ.get(LOG_LEVEL_VARIABLE, 'WARNING').upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def main(argv=None):
    """
    Application entry point.

    Configures logging, then hands the arguments to the explorer. Exits with
    the explorer's status code, or 1 after reporting an unexpected error.
    """
    configure_logging()
    try:
        from cli.explorer import main as explorer_main
    except ImportError as e:
        print("Dependency Error: Missing required packages. Please run 'pip install -r requirements.txt'",
              file=sys.stderr)
        print(f"Technical Details: {e}", file=sys.stderr)
        sys.exit(1)
    try:
        status = explorer_main(argv)
    except Exception as e:
        print("Application Error: STT-MRAM Reliability Lab stopped unexpectedly", file=sys.stderr)
        print(f"Technical Details: {e}", file=sys.stderr)
        sys.exit(1)
    sys.exit(status)


if __name__ == "__main__":
    main()
