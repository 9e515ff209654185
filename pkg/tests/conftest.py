def pytest_terminal_summary(terminalreporter):
    # surface the acceptance verdict lines even when stdout was captured
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when == "call" and "test_acceptance" in rep.nodeid:
                lines += [s for s in rep.capstdout.splitlines() if s.startswith(("PASS ", "FAIL "))]
    if lines:
        terminalreporter.section("acceptance criteria")
        for s in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.line(s)
