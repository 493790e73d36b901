import re

import pytest

from fockops import theorems as th
from fockops.core import TruncationParams
from fockops.symbols import q_beta

SEED = th.LEM41_SEED
ACCEPTANCE_RE = re.compile(r"test_criterion_(\d+)_([a-z0-9_]+)")
_acceptance: dict[tuple[int, str], bool] = {}


@pytest.fixture(scope="session")
def params():
    return TruncationParams(1.0, 40)


@pytest.fixture(scope="session")
def pnorm_report(params):
    # same arguments as `fockops run lem12 --seed SEED`, so the CLI test can reuse it
    return th.run_lem12_interpolation_bound(th.gallery(params), 4.0, params, trials=200, seed=SEED)


@pytest.fixture(scope="session")
def dichotomy_report(params):
    return th.run_thm11_dichotomy(params)


@pytest.fixture(scope="session")
def partition_report():
    return th.run_lem33_partition(q_beta(1.0), [1, 2, 4], TruncationParams(1.0, 30))


@pytest.fixture(scope="session")
def interpolation_report(params):
    return th.run_lem41_interpolation([0, 1.0], params, configs=20, sep=0.5, radius=3.0, seed=SEED)


def pytest_runtest_logreport(report):
    m = ACCEPTANCE_RE.search(report.nodeid)
    if not m or not (report.when == "call" or report.failed):
        return
    key = (int(m[1]), m[2])
    _acceptance[key] = _acceptance.get(key, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for (n, name), ok in sorted(_acceptance.items()):
        terminalreporter.write_line(f"ACCEPTANCE {n:02d} {name}: {'PASS' if ok else 'FAIL'}")
