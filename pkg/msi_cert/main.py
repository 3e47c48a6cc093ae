"""
Main entry point for the MSI certification tool
"""

import sys
import logging
from pathlib import Path
from typing import List, Optional
try:
    from dotenv import load_dotenv as _load_dotenv
except Exception:
    _load_dotenv = None

if __package__ in (None, ""):
    # Running as script: make the package importable
    sys.path.insert(0, str(Path(__file__).parent.parent))

# Load environment variables (MSI_CERT_HOME, MSI_CERT_SOLVER, ...) from a .env file if present
try:
    if _load_dotenv:
        _load_dotenv()
except Exception:
    pass

from msi_cert.config.defaults import DEFAULT_LOG_FORMAT, LOG_FILENAME
from msi_cert.config.settings import config
from msi_cert.cli import EXIT_USAGE, run


def setup_logging():
    """Setup logging configuration"""
    try:
        log_level = getattr(logging, config.get_log_level().upper(), logging.INFO)

        log_dir = config.log_dir
        log_dir.mkdir(parents=True, exist_ok=True)

        # stdout carries reports, so the console handler writes to stderr
        logging.basicConfig(
            level=log_level,
            format=DEFAULT_LOG_FORMAT,
            handlers=[
                logging.FileHandler(log_dir / LOG_FILENAME),
                logging.StreamHandler(sys.stderr)
            ]
        )

        # Reduce noise from some libraries
        logging.getLogger("cvxpy").setLevel(logging.WARNING)

    except Exception as e:
        # Fallback logging setup if the config directory is unusable
        logging.basicConfig(
            level=logging.INFO,
            format="%(asctime)s %(levelname)s | %(message)s",
            handlers=[logging.StreamHandler(sys.stderr)]
        )
        logging.error(f"Failed to setup full logging: {e}")


def main(argv: Optional[List[str]] = None):
    """Main application entry point"""
    setup_logging()
    logger = logging.getLogger(__name__)

    try:
        code = run(argv)
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        code = EXIT_USAGE
    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        code = EXIT_USAGE

    sys.exit(code)


if __name__ == "__main__":
    main()
