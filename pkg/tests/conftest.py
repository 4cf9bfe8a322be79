import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import tiny_lexicon_rows, write_lexicon_files  # noqa: E402

from sonahunt.lexicon import Lexicon, load_lexicon  # noqa: E402


@pytest.fixture
def tiny_lexicon(tmp_path) -> Lexicon:
    words, definitions, synonyms = tiny_lexicon_rows()
    paths = write_lexicon_files(tmp_path, words, definitions, synonyms)
    return load_lexicon(*paths)


def pytest_runtest_logreport(report):
    """One visible verdict line per acceptance criterion."""
    if "test_acceptance" not in report.nodeid or report.when != "call":
        return
    name = report.nodeid.split("::")[-1]
    print(f"\nACCEPTANCE {name}: {report.outcome.upper()}")
