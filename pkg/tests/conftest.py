import numpy as np
import pytest

from edgeaf.harness.dataset import CorpusSpec, build_feature_dataset, synthetic_corpus


@pytest.fixture(scope="session")
def small_corpus():
    # 4 records per class, 25 windows each at the default window settings
    return synthetic_corpus(CorpusSpec(records_per_class=4, duration_s=104.0, seed=11))


@pytest.fixture(scope="session")
def small_dataset(small_corpus):
    return build_feature_dataset(small_corpus, name="A", keep_raw=40)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
