"""Regenerate the regression fixtures under tests/fixtures.

Run only after the full suite passes on a validated build; the frozen files
are what later runs are compared against.
"""

import sys
from pathlib import Path

from tfqkd.cli import main

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"
sys.path.insert(0, str(ROOT))

from tests.helpers import FIXTURE_RUNS as RUNS  # noqa: E402


def main_():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    for name, argv in RUNS.items():
        code = main(argv + ["--out", str(FIXTURES / name)])
        print(f"{name}: exit {code}")


if __name__ == "__main__":
    main_()
