import numpy as np
import pytest

from fusedface.dataset import SynthConfig, synth_generate

REFERENCE_SYNTH = SynthConfig(classes=10, samples_per_class=20, width=32, height=32,
                              illum_strength=0.5, noise_sigma=0.05, seed=42)


def gaussian_blobs(centers, sigma, n_per_class, seed):
    """Isotropic 2-D blobs; returns (X, labels)."""
    rng = np.random.default_rng(seed)
    X, y = [], []
    for ci, c in enumerate(centers):
        X.append(rng.normal(c, sigma, size=(n_per_class, len(c))))
        y += [f"k{ci}"] * n_per_class
    return np.vstack(X), y


@pytest.fixture(scope="session")
def reference_pairs():
    return synth_generate(REFERENCE_SYNTH)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    _ACCEPTANCE.append((number, title, report.passed, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, duration in sorted(_ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} ({duration:.2f}s)")
