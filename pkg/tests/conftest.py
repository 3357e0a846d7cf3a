import pytest

from zenospin.spectral import normalize

PANELS = [(kind, wm) for kind in ("gaussian", "lorentzian", "exponential") for wm in (0.0, 2.0)]

# criterion id -> (ok, detail), filled by test_acceptance
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def gaussian():
    return normalize("gaussian", 0.0, 1.0, 100.0)


@pytest.fixture(scope="session")
def densities():
    return {(k, wm): normalize(k, wm, 1.0, 100.0) for k, wm in PANELS}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
