from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def twitter_fixture():
    return FIXTURES / "twitter_50.tsv"
