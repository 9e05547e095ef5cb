def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(test_acceptance.RESULTS):
        title, ok, detail = test_acceptance.RESULTS[num]
        terminalreporter.write_line(
            f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {title} -- {detail}")
