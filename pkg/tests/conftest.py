import numpy as np
import pytest

from actparse.core import ParserConfig
from actparse.datagen import coupled_spec, generate
from actparse.linear import TrainConfig
from actparse.pipeline import TrainingCorpus, train_pipeline

SMALL_CONFIG = ParserConfig(l_min=10, l_max=60, scales=(10, 20, 30), lam=1e-3, folds=5)
SMALL_TRAIN = TrainConfig(lam=1e-3, epochs=30, seed=0)

_acceptance_results = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        number, title = marker.args
        _acceptance_results.append((number, title, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed in sorted(_acceptance_results):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def coupled_data():
    spec = coupled_spec(n_sequences=60, seed=0)
    data = generate(spec)
    return spec, data[:40], data[40:]


@pytest.fixture(scope="session")
def coupled_models(coupled_data):
    spec, train, _ = coupled_data
    return train_pipeline(TrainingCorpus(tuple(train), spec.label_space()), SMALL_CONFIG, SMALL_TRAIN)
