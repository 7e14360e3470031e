import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one summary line per acceptance criterion, printed even without -s
_ACCEPTANCE: list[tuple[int, str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.outcome != "passed"):
        return
    status = "XFAIL" if hasattr(rep, "wasxfail") else rep.outcome.upper()
    detail = "; ".join(str(v) for k, v in rep.user_properties if k == "detail")
    _ACCEPTANCE.append((mark.args[0], mark.args[1], status, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, status, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        line = f"criterion {num:>2} [{status}] {title}"
        terminalreporter.write_line(line + (f": {detail}" if detail else ""))
