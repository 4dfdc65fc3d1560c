import math
import time

import numpy as np
import pytest
from click.testing import CliRunner

from sbwave.certificate import Certificate
from sbwave.cli import main
from sbwave.sequences import CoeffSeq, IndexBox

D1 = math.pi / 0.12
D2 = math.pi / 0.24

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)


def random_seq(rng, box, scale=1.0, d1=D1, d2=D2):
    return CoeffSeq(box, scale * rng.uniform(-1.0, 1.0, box.shape), d1, d2)


def random_box(rng, hi=6):
    return IndexBox(int(rng.integers(0, hi + 1)), int(rng.integers(0, hi + 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def desk_run(tmp_path_factory):
    """One certify run of the desk preset on the shipped one-peak wave."""
    out = tmp_path_factory.mktemp("desk") / "cert1.json"
    t0 = time.perf_counter()
    res = CliRunner().invoke(main, ["certify", "--preset", "desk", "builtin:one_peak_desk", "-o", str(out)])
    elapsed = time.perf_counter() - t0
    return {"result": res, "path": out, "elapsed": elapsed,
            "cert": Certificate.load(str(out)) if out.exists() else None}
