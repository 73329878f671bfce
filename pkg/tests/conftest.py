import numpy as np
import pytest

from tobit_additive.likelihood import CensoredDataset

ACCEPTANCE_LINES = []


def record_criterion(label, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_dataset(seed, n=80, d=2, cen=0.2, noise=0.2):
    """Additive data with a quadratic and a sine component, censored at a quantile."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=(n, d))
    y = (x[:, 0] - 0.5) + np.sin(2 * np.pi * x[:, -1]) * 0.3 + noise * rng.normal(size=n)
    c = float(np.quantile(y, cen)) if cen > 0 else float(y.min() - 1.0)
    return CensoredDataset.from_latent(x, y, c)


@pytest.fixture
def dataset():
    return make_dataset(0)
