"""Shared pytest plumbing: acceptance-criteria pass/fail summary lines."""

RESULTS = []


def record(number, label, ok, detail=""):
    """Collect one acceptance-criterion verdict for the terminal summary."""
    status = "PASS" if ok else "FAIL"
    line = f"ACCEPTANCE {number}: {status} — {label}"
    if detail:
        line += f" ({detail})"
    RESULTS.append((number, line))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(RESULTS):
        terminalreporter.write_line(line)
