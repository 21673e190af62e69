"""Runs the python smoke tests; exits 77 (skip) when tabscm or pytest is not importable."""

import pathlib
import sys

try:
    import pytest
    import tabscm  # noqa: F401
except ImportError as e:
    print(f"skipping: {e}")
    sys.exit(77)

tests = pathlib.Path(__file__).resolve().parent.parent / "python" / "tests"
sys.exit(pytest.main(["-q", "-p", "no:cacheprovider", str(tests)]))
