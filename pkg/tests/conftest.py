import os
import sys

import pytest

# Repository root on the path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.catalog import build_catalog
from src.verify import SampleSpec


@pytest.fixture
def make_spec():
    """Seeded SampleSpec factory"""
    def factory(box, count=200, seed=7, margin=0.0):
        return SampleSpec(box=box, count=count, seed=seed, margin=margin)
    return factory


@pytest.fixture(scope="session")
def catalog():
    return build_catalog()
