"""Shared test configuration.

Kernel threading is pinned to one thread for the whole session so that
timing-independent tests never race the thread pool; the tests that
check thread-count invariance set their own counts explicitly (and the
kernels are deterministic across counts anyway - that is one of the
properties under test).
"""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from relfluid import _kernels  # noqa: E402


@pytest.fixture(scope="session", autouse=True)
def _single_threaded_kernels():
    _kernels.set_threads(1)
    yield
