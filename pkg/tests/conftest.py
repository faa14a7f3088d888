import numpy as np
import pytest

from mpgi.simulate import Scene


@pytest.fixture
def random_scene():
    def make(K, seed=0):
        rng = np.random.default_rng(seed)
        return Scene(rng.uniform(0, 1, size=(1 << K, 1 << K)), f"random:{seed}")
    return make


def block_mean(img, side):
    n = img.shape[0]
    out = np.zeros((side, side))
    c = n // side
    for i in range(side):
        for j in range(side):
            out[i, j] = img[i * c:(i + 1) * c, j * c:(j + 1) * c].sum() / (c * c)
    return out


def replicate(a, side):
    rep = side // a.shape[0]
    return np.kron(a, np.ones((rep, rep)))


def affine_residual(x, y):
    """Max abs residual of the least-squares fit a*x + b ~ y (independent of mpgi.metrics)."""
    A = np.column_stack((x.ravel(), np.ones(x.size)))
    coef, *_ = np.linalg.lstsq(A, y.ravel(), rcond=None)
    return float(np.max(np.abs(A @ coef - y.ravel())))


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    rep = yield
    setattr(item, f"rep_{rep.when}", rep)
    return rep


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, text = RESULTS[n]
        terminalreporter.write_line(f"AC{n} {'PASS' if ok else 'FAIL'}  {text}")
