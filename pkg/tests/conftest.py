"""Collects acceptance-criterion outcomes and prints one line per criterion."""
from collections import defaultdict

import pytest

_outcomes: dict[int, list[tuple[str, bool, list]]] = defaultdict(list)
_titles: dict[int, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    _titles[number] = title
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        notes = [v for k, v in item.user_properties if k == "measured"]
        _outcomes[number].append((item.name, rep.passed, notes))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_outcomes):
        results = _outcomes[number]
        ok = all(passed for _, passed, _ in results)
        tr.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {_titles[number]}")
        for name, passed, notes in results:
            if notes or not passed:
                status = "" if passed else "FAILED "
                tr.write_line(f"    {status}{name}: {'; '.join(notes)}")
