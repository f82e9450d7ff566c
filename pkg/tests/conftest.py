import pytest

from spatialqa.grammar import load_grammar
from spatialqa.pipeline import PipelineConfig, build_record


@pytest.fixture(scope="session")
def grammar():
    return load_grammar()


@pytest.fixture(scope="session")
def small_corpus(grammar):
    """A handful of fully built records shared by read-only tests."""
    config = PipelineConfig()
    return [build_record(config, grammar, "train", i) for i in range(12)]
