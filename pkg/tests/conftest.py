import pytest
from hypothesis import HealthCheck, settings

from helpers import ACCEPTANCE, random_sample

settings.register_profile(
    "flmdep", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("flmdep")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid, passed, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {cid}: {detail}")


@pytest.fixture
def bm_sample():
    return random_sample(n=30, p=40, seed=3)
