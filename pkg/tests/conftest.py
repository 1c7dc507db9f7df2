import pytest

from metrickernels.fixtures import FIXTURES, load_fixture
from metrickernels.scalar import RadialSpec, TaylorSpec

KERNELS = {
    "radial_1": RadialSpec([(1, 1)]),
    "radial_mix": RadialSpec([(0.5, 0.3), (2, 0.7)]),
    "taylor_exp": TaylorSpec.exponential(1.0),
    "taylor_custom": TaylorSpec.custom([1, 0.5, 0.25]),
}

_SPACES = {}


def fixture_space(name):
    # fixtures are immutable, so build each once per session
    if name not in _SPACES:
        _SPACES[name] = load_fixture(name)
    return _SPACES[name]


@pytest.fixture(params=sorted(FIXTURES))
def named_space(request):
    return request.param, fixture_space(request.param)


@pytest.fixture(params=sorted(KERNELS))
def scalar(request):
    return KERNELS[request.param]


@pytest.fixture
def two_point():
    return fixture_space("two_point")


# one summary line per acceptance criterion

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark and (rep.when == "call" or rep.failed):
        number, title = mark.args
        prev = _CRITERIA.get(number, (title, True, 0.0))
        _CRITERIA[number] = (title, prev[1] and rep.passed, prev[2] + rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed, seconds = _CRITERIA[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title} ({seconds:.2f}s)")
