import functools

import pytest

from curved_dg.study import StudyConfig, run_study

CRITERIA = {}


@functools.lru_cache(maxsize=None)
def _study(case, k, kg, ar, levels, n_base, start_level=0, normal_mode="from_geometry"):
    cfg = StudyConfig(case=case, element="tri", k=[k], kg_policy=kg, ar=ar, levels=levels,
                      n_base=n_base, start_level=start_level, normal_mode=normal_mode)
    return run_study(cfg)


@pytest.fixture(scope="session")
def study():
    """Refinement studies memoized across test files in one session."""
    return _study


@pytest.fixture
def criterion():
    def record(number, ok, detail):
        CRITERIA[number] = (ok, detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
