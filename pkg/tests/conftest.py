"""Shared fixtures."""
import numpy as np
import pytest

from core.logging import configure_logging
from services.datagen_service import DatagenService

configure_logging(level="WARNING")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)


@pytest.fixture
def small_instance():
    """30×30 noiseless instance of rank 2 with 5% sparse corruption."""
    return DatagenService.gen_instance(m=30, rank=2, sparsity=0.05, sigma=0.0, seed=11)
