import pytest

from coalsim.sim import _backend


@pytest.fixture(params=_backend.available())
def backend(request):
    return request.param


def pytest_configure(config):
    config.acceptance_lines = {}


@pytest.fixture
def acceptance(request):
    """Record one summary line per acceptance criterion."""

    def record(number: int, ok: bool, text: str) -> None:
        line = f"CRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  {text}"
        request.config.acceptance_lines[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(lines):
        terminalreporter.write_line(lines[number])
    passed = sum(" PASS " in line for line in lines.values())
    terminalreporter.write_line(f"{passed}/{len(lines)} criteria pass")
