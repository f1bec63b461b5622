import pytest

from fermicav import SystemParams

FIG1A = dict(u0=10.0, delta_c=10.0, eta=10.0, kappa=1.0, n_sites=50, s=1)
FIG1B = dict(u0=-1.0, delta_c=-20.0, eta=30.0, kappa=1.0, n_sites=50, s=-1)
FIG3 = dict(u0=0.62, delta_c=5.0, kappa=1.0, n_sites=50, s=1)


def make(base, **kw):
    data = dict(base)
    data.update(kw)
    data.setdefault("n_atoms", 0)
    data.setdefault("eta", 1.0)
    return SystemParams(**data)


@pytest.fixture
def fig1a():
    return lambda n_atoms=20, **kw: make(FIG1A, n_atoms=n_atoms, **kw)


@pytest.fixture
def fig1b():
    return lambda n_atoms=20, **kw: make(FIG1B, n_atoms=n_atoms, **kw)


@pytest.fixture
def fig3():
    return lambda n_atoms=20, eta=5.0, **kw: make(FIG3, n_atoms=n_atoms, eta=eta, **kw)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod and mod.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.VERDICTS):
            terminalreporter.write_line(line)
