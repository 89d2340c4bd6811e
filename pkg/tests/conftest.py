import pytest
from hypothesis import HealthCheck, settings

from sgnc import data_path
from sgnc.cnecc import load_code
from sgnc.memplace import MemoryPlacement, parse_placement
from sgnc.netmodel import load_network

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], print_blob=True
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def dbf():
    return load_network(data_path("double_butterfly.net"))


@pytest.fixture(scope="session")
def bfly():
    return load_network(data_path("butterfly.net"))


@pytest.fixture(scope="session")
def chain():
    return load_network(data_path("chain.net"))


@pytest.fixture(scope="session")
def codes():
    return {c: load_code(data_path(f"{c}.code")) for c in ("C1", "C2", "C3")}


def load_example(k: int):
    net = load_network(data_path(f"example{k}.net"))
    mem = data_path(f"example{k}.mem")
    pl = parse_placement(mem.read_text()) if mem.exists() else MemoryPlacement()
    return net, pl


# -- acceptance reporting: one PASS/FAIL line per @pytest.mark.criterion(k) test --

_CRITERIA: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    detail = dict(item.user_properties).get("detail", "")
    _CRITERIA[mark.args[0]] = ("PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        status, detail = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:2d}: {status}  {detail}")
