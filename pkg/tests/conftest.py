import pytest

# criterion number -> list of (passed, detail) for its parts
_ACCEPTANCE = {}


class AcceptanceLog:
    def record(self, k, passed, detail):
        _ACCEPTANCE.setdefault(k, []).append((bool(passed), detail))
        line = f"criterion {k}: {'PASS' if passed else 'FAIL'} {detail}"
        print(line)
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        parts = _ACCEPTANCE[k]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
