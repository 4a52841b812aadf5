"""Shared fixtures: a session-wide eigensolve cache.

Heavy scans (N=80..100 period/size grids) are cached on disk so repeated
test runs, and the CLI invoked from tests, reuse the same summaries.
Location: $BOUNDPAIR_CACHE if set, else <repo>/cache.
"""
import os
from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def cache_dir() -> Path:
    loc = os.environ.get("BOUNDPAIR_CACHE")
    path = Path(loc) if loc else Path(__file__).resolve().parent.parent / "cache"
    path.mkdir(parents=True, exist_ok=True)
    os.environ["BOUNDPAIR_CACHE"] = str(path)
    return path
