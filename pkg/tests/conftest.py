import pytest

#: criterion number -> (name, passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def record(number, name, passed, detail):
    ACCEPTANCE[number] = (name, bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        name, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {number}. {name}: {detail}")


@pytest.fixture(scope="session")
def basis_001():
    from hyperscatter.radial import construct_f_basis
    return construct_f_basis(1.0, 0.01)
