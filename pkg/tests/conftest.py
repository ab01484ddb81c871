import os

import pytest

from siacgpc.harness import paper_tables


@pytest.fixture(scope="session")
def paper_grid():
    """Full five-table grid, computed once per session."""
    workers = int(os.environ.get("SIACGPC_WORKERS", os.cpu_count() or 1))
    return paper_tables(workers=workers)
