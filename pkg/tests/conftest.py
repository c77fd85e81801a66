"""Shared test plumbing: collects acceptance-criterion results and prints one
pass/fail line per criterion at the end of the run."""

_RESULTS = {}


def record_criterion(number: int, title: str, ok: bool, detail: str = ""):
    _RESULTS[number] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, ok, detail = _RESULTS[number]
        status = "PASS" if ok else "FAIL"
        line = f"criterion {number:2d} [{status}] {title}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)
