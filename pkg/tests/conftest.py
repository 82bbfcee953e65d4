import gatelog


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if gatelog.lines:
        terminalreporter.section("release gates")
        for line in gatelog.lines:
            terminalreporter.write_line(line)
