import os
import warnings

import pytest
from hypothesis import settings

from anomrank.errors import RankTieWarning
from anomrank.experiment import ExperimentConfig, run_repetitions, write_outputs

settings.register_profile("default", max_examples=100, deadline=None)
settings.register_profile("ci", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = []

RUN_SEED = 20240611


def report(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@pytest.fixture(scope="session")
def full_run(tmp_path_factory):
    """Full-scale experiment (B = 50), shared by every test that needs it."""
    cfg = ExperimentConfig(repetitions=50, seed=RUN_SEED)
    out = tmp_path_factory.mktemp("full_run")
    with warnings.catch_warnings():
        # dead-ReLU regions give tied logits; the diagnostic is expected here
        warnings.simplefilter("ignore", RankTieWarning)
        records = run_repetitions(cfg)
    summary = write_outputs(cfg, records, out)
    return cfg, records, summary, out


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
