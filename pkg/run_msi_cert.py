#!/usr/bin/env python3
"""
Launcher script for the MSI certification tool
"""

import sys
import subprocess
from pathlib import Path

def main():
    """Launch the command-line tool, forwarding all arguments"""
    # Get the directory containing this script
    script_dir = Path(__file__).parent
    main_script = script_dir / "msi_cert" / "main.py"

    if not main_script.exists():
        print(f"Error: Could not find main.py at {main_script}")
        sys.exit(1)

    try:
        result = subprocess.run([sys.executable, str(main_script), *sys.argv[1:]])
    except KeyboardInterrupt:
        print("\nInterrupted by user")
        sys.exit(1)
    sys.exit(result.returncode)

if __name__ == "__main__":
    main()
