import numpy as np
import pytest

from cdrl.nn import mlp_forward


def finite_difference_grads(params, x, upstream, h=1e-5, order=2):
    """Central differences of ``sum(upstream * f(x))`` for every parameter
    coordinate and every input coordinate.

    ``order=4`` uses the five-point stencil, which tolerates a larger ``h``
    and so keeps round-off small on tiny gradient coordinates.
    """
    if order == 2:
        stencil = ((1.0, 0.5), (-1.0, -0.5))
    elif order == 4:
        stencil = ((2.0, -1 / 12), (1.0, 8 / 12), (-1.0, -8 / 12), (-2.0, 1 / 12))
    else:
        raise ValueError("order must be 2 or 4")

    def f(p, xin):
        out, _ = mlp_forward(p, xin)
        return float(np.sum(upstream * out))

    def diff(evaluate):
        return sum(w * evaluate(k * h) for k, w in stencil) / h

    arrays = [a.copy() for a in params.arrays()]
    grads = []
    for k, arr in enumerate(arrays):
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            def shifted(d, k=k, idx=idx):
                moved = [a.copy() for a in arrays]
                moved[k][idx] += d
                return f(params.with_arrays(moved), x)
            g[idx] = diff(shifted)
        grads.append(g)
    gx = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        def shifted_x(d, idx=idx):
            xd = x.copy()
            xd[idx] += d
            return f(params, xd)
        gx[idx] = diff(shifted_x)
    return grads, gx


def rel_err(a, b, floor=1e-6):
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """``criterion(n, ok, detail)`` records one acceptance line and returns ``ok``."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(n: int, ok: bool, detail: str) -> bool:
        lines.append((n, f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
