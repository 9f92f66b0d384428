import pytest

# criterion number -> list of (ok, detail); filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    def record(number, ok, detail):
        ACCEPTANCE.setdefault(number, []).append((bool(ok), detail))
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        ok = all(p[0] for p in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
