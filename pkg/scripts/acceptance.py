"""Print the acceptance summary without the rest of the test suite."""

import runpy
import sys
from pathlib import Path

tests = Path(__file__).resolve().parents[1] / "tests"
sys.path.insert(0, str(tests))
runpy.run_path(str(tests / "test_acceptance.py"), run_name="__main__")
