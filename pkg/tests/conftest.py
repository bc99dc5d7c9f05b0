import pathlib

import pytest

from detoxkit import corpus

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture
def clean10_path():
    return FIXTURES / "clean10.jsonl"


@pytest.fixture
def lexicon_dir():
    return FIXTURES / "lexicons"


@pytest.fixture
def en_lexicon(lexicon_dir):
    return corpus.load_lexicon(lexicon_dir / "en.txt", "en")


@pytest.fixture
def lexicons(lexicon_dir):
    return {
        path.stem: corpus.load_lexicon(path, path.stem)
        for path in sorted(lexicon_dir.glob("*.txt"))
    }
