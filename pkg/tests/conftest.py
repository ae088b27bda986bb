import numpy as np
import pytest
from hypothesis import settings

from neurocine.ingest import default_config, generate_synthetic

settings.register_profile("neurocine", max_examples=30, deadline=None)
settings.load_profile("neurocine")


@pytest.fixture(scope="session")
def small_dataset():
    """3 subjects x 8 trials of the default generator."""
    cfg = default_config(n_subjects=3, trials_per_subject=8)
    return generate_synthetic(cfg, 5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_bands(small_dataset):
    from neurocine.harness import CachedBands
    return CachedBands.from_trials(small_dataset[0], 0.5)


@pytest.fixture(scope="session")
def small_frames(small_dataset, small_bands):
    """7-frame movies of the small dataset (globally standardized)."""
    from neurocine.topomap import Renderer, Standardizer, project, render_frames
    b = small_bands
    r = Renderer(project(small_dataset[1], "aep"))
    return render_frames(b.band_powers, b.labels, b.subjects, r, Standardizer.fit(b.band_powers))


def pytest_runtest_logreport(report):
    if report.when == "call":
        for key, value in report.user_properties:
            if key == "acceptance":
                _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome, value))


_ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for name, outcome, value in sorted(_ACCEPTANCE):
            terminalreporter.write_line(f"{outcome.upper():7s} {name}: {value}")
