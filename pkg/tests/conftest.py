import numpy as np
import pytest

from hteselect.data import BanditLog
from hteselect.synth import GeneratorConfig, generate

ACCEPTANCE_RESULTS = []


def record(criterion, name, ok, detail=""):
    ACCEPTANCE_RESULTS.append((criterion, name, bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, name, ok, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {criterion}. {name}  {detail}")


def flip_pattern_log(extra_constant=True):
    """40 events: feature A splits into two halves where arms 0 and 1 swap 8/10 vs 2/10."""
    arms, rewards, a = [], [], []
    cells = {(0, 0): 8, (0, 1): 2, (1, 0): 2, (1, 1): 8}
    for (b, arm), s in cells.items():
        for t in range(10):
            arms.append(arm)
            rewards.append(1 if t < s else 0)
            a.append(float(b))
    features = {"A": np.array(a)}
    if extra_constant:
        features["B"] = np.full(40, 7.0)
    return BanditLog.from_arrays(arms, rewards, features, k=2)


@pytest.fixture
def flip_log():
    return flip_pattern_log()


@pytest.fixture(scope="session")
def synthetic_trials():
    """Ten default-size synthetic logs (the benchmark protocol), seeds 0..9."""
    return [generate(GeneratorConfig(seed=s)) for s in range(10)]
