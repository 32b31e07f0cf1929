import os
import sys

# tests import the independent oracles as a plain module
sys.path.insert(0, os.path.dirname(__file__))

ACCEPTANCE: dict[int, tuple[str, bool | None, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        tag = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{tag}] criterion {n}: {title}: {detail}")
