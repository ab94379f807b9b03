import numpy as np
import pytest

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def oracle_chain_vectors(u, v):
    """Brute-force |w1>, |w2> on (P_O, A_I, A_O, B_I, B_O, F_I) from index formulas.

    |U>>^{XY} has amplitude <y|U|x> at (x, y).
    """
    u1, u2, u3 = u
    v1, v2, v3 = v
    w1 = np.einsum("ap,bo,fq->paobqf", u1, u2, u3)
    w2 = np.einsum("bp,aq,fo->paobqf", v1, v2, v3)
    return w1.reshape(-1), w2.reshape(-1)


def oracle_expectation(ctx, report):
    """<w|chi|w> with chi = rho (x) xi (x) eta (x) 1 by explicit Kronecker products."""
    w1, w2 = oracle_chain_vectors((ctx.u1, ctx.u2, ctx.u3), (ctx.v1, ctx.v2, ctx.v3))
    w = ctx.alpha * w1 + ctx.beta * w2
    chi = np.kron(np.kron(np.kron(report.rho.matrix, report.xi.matrix), report.eta.matrix), np.eye(ctx.dim))
    return complex(np.vdot(w, chi @ w))


@pytest.fixture
def rng():
    return np.random.default_rng(20201015)
