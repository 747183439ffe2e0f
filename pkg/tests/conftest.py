"""Shared fixtures: a session-wide synthetic IDX corpus and loaded sets.

The corpus is generated once into tests/_corpus and reused across pytest
sessions (deterministic content, so caching is safe).
"""

from pathlib import Path

import numpy as np
import pytest

from gossipsim.data import Dataset, build_eval_sets, load_data_dir
from gossipsim.synthdata import ensure_corpus

CACHE_DIR = Path(__file__).parent / "_corpus"
EVAL_SEED = 424242


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return ensure_corpus(CACHE_DIR)


@pytest.fixture(scope="session")
def corpus(corpus_dir):
    """(training, test) Datasets loaded from the cached IDX files."""
    return load_data_dir(corpus_dir)


@pytest.fixture(scope="session")
def training(corpus) -> Dataset:
    return corpus[0]


@pytest.fixture(scope="session")
def test_set(corpus) -> Dataset:
    return corpus[1]


@pytest.fixture(scope="session")
def eval_sets(test_set):
    return build_eval_sets(test_set, np.random.default_rng(EVAL_SEED))
