import pytest

from robustqi.localfield import complex_field, padic_field, real_field


@pytest.fixture(scope="session")
def R():
    return real_field(256)


@pytest.fixture(scope="session")
def C():
    return complex_field(256)


@pytest.fixture(scope="session")
def Q2():
    return padic_field(2, 64)


@pytest.fixture(scope="session")
def Q3():
    return padic_field(3, 64)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
