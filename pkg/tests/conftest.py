import os
import sys

# flat layout: modules live at the repository root
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import pytest

import funcspace
from kernel import NumericContext


@pytest.fixture
def ctx():
    return NumericContext()


@pytest.fixture
def catalog():
    return funcspace.builtin_catalog()


@pytest.fixture
def exp_neg3():
    """e^{-z} on the working disk |z| < 3."""
    return funcspace.exp_neg(3)


@pytest.fixture(autouse=True)
def no_gcs(monkeypatch):
    monkeypatch.delenv("GCS_BUCKET", raising=False)
