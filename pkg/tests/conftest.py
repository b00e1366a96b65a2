import os
import shutil
import shlex

import pytest

SIM_ENV = "FSMFORGE_SIM_CMD"


def configured_sim_cmd():
    cmd = os.environ.get(SIM_ENV)
    if not cmd:
        return None
    argv = shlex.split(cmd)
    return cmd if argv and shutil.which(argv[0]) else None


@pytest.fixture
def sim_cmd():
    cmd = configured_sim_cmd()
    if cmd is None:
        pytest.skip(f"no external simulator configured (set {SIM_ENV})")
    return cmd


@pytest.fixture(scope="session")
def mock_dataset(tmp_path_factory):
    """Three tiers of ten mock-curated problems, shared by the slower tests."""
    from fsmforge.core import Tier
    from fsmforge.pipeline import curate
    from fsmforge.semantics import MockProvider

    root = tmp_path_factory.mktemp("dataset")
    reports = {t: curate(t, 10, 100, MockProvider(), root, jobs=2) for t in Tier}
    return root, reports


# --------------------------------------------------------------------------
# One summary line per acceptance criterion

_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    number, title = marker.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if rep.skipped:
        status = "SKIP"
        if not detail and isinstance(rep.longrepr, tuple):
            detail = rep.longrepr[2]
    else:
        status = "PASS" if rep.passed else "FAIL"
    _ACCEPTANCE[number] = (status, title, detail)


def acceptance_status(number):
    return _ACCEPTANCE.get(number, (None,))[0]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, title, detail = _ACCEPTANCE[number]
        line = f"[{status}] criterion {number}: {title}"
        terminalreporter.write_line(line + (f" -- {detail}" if detail else ""))
