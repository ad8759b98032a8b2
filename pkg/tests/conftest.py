import sys
from pathlib import Path

# make test-local helpers (fd.py, etc.) importable
sys.path.insert(0, str(Path(__file__).parent))
