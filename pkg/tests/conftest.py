import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import acceptance_report


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240814)


@pytest.fixture(scope="session")
def toy_corpus():
    """4 speakers x 10 utterances, 1 s each; the acceptance training corpus."""
    from taperlab import ToyCorpusSpec, make_toy_corpus
    return [u.as_tuple() for u in make_toy_corpus(ToyCorpusSpec(seed=0))]


@pytest.fixture(scope="session")
def small_corpus():
    """2 speakers x 2 short utterances, for fast optimizer tests."""
    from taperlab import ToyCorpusSpec, make_toy_corpus
    spec = ToyCorpusSpec(num_speakers=2, utterances_per_speaker=2,
                         duration_seconds=0.2, seed=3)
    return [u.as_tuple() for u in make_toy_corpus(spec)]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not acceptance_report.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_report.RESULTS:
        terminalreporter.write_line(line)
