import pytest

from killcert.report import SuiteConfig, run

# One shared run per configuration; several criteria read the same report.
CONFIGS = {
    "hpn1": dict(target="hpn", n=1, suites=["algebra", "killing", "lie"]),
    "hpn2": dict(target="hpn", n=2, suites=["all"], sample_count=600, seed=7),
    "hpn3_exact": dict(target="hpn", n=3, suites=["algebra", "killing", "lie"]),
    "hpn3_kernel": dict(target="hpn", n=3, suites=["kernel"], sample_count=2000, seed=42),
    "hpn3_indecomposable": dict(target="hpn", n=3, suites=["indecomposable"], sample_count=2000, seed=42),
    "op2": dict(target="op2", suites=["algebra", "killing", "lie", "flow"]),
    "op2_indecomposable": dict(target="op2", suites=["indecomposable"], sample_count=2000, seed=42),
}


class Reports:
    def __init__(self):
        self._cache = {}

    def __call__(self, name):
        if name not in self._cache:
            self._cache[name] = run(SuiteConfig(**CONFIGS[name]))
        return self._cache[name][0]

    def fresh(self, name):
        return run(SuiteConfig(**CONFIGS[name]))[0]

    def computed(self):
        return {k: v[0] for k, v in self._cache.items()}


@pytest.fixture(scope="session")
def reports():
    return Reports()


def suite(report, name):
    return next(s for s in report["suites"] if s["suite"] == name)


_criteria = {}
_RANK = ("skip", "pass", "fail")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, text = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "skip" if rep.skipped else ("pass" if rep.passed else "fail")
        prev = _criteria.get(number, (text, "skip"))[1]
        _criteria[number] = (text, max(prev, status, key=_RANK.index))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        text, status = _criteria[number]
        terminalreporter.write_line(f"{status.upper():4}  criterion {number:2}: {text}")
