"""Explicit violations for superpositions of differently ordered unitary Markovian processes.

For the four-party chains

    w1 = |U1>>^{P A_I} |U2>>^{A_O B_I} |U3>>^{B_O F}
    w2 = |V1>>^{P B_I} |V2>>^{B_O A_I} |V3>>^{A_O F}

and amplitudes ``alpha, beta != 0``, local operations (a pure state at P,
unitary channels at A and B, discard at F) give

    <chi> = |alpha|^2 + |beta|^2 + 2 |alpha* beta| Re<psi| V T |psi>

with ``T = R^dag S^dag R S`` once R and S are pre-processed by
:func:`substitute_rs`. Normalization would force ``Re<psi|V T|psi> = lam`` for
every ``psi`` and every ``T``; :func:`find_violation` picks ``T`` and ``psi``
maximizing ``|Re<psi|V T|psi> - lam|``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .channels import (
    ChoiOperator,
    as_generator,
    choi_discard,
    choi_identity,
    choi_prepare,
    choi_unitary,
    is_cptp,
    random_unitary,
)
from .process import (
    Party,
    ProcessVector,
    markovian_unitary_process,
    reduce_with_identity,
    superpose,
    vector_probability,
)
from .tensor import PAULIS, permute_vector

DEVIATION_THRESHOLD = 1e-6
UNITARY_TOL = 1e-10

__all__ = [
    "DEVIATION_THRESHOLD",
    "NoGoContext",
    "WitnessReport",
    "LemmaBatchSummary",
    "cross_term",
    "effective_v",
    "substitute_rs",
    "commutator_gadget",
    "eigenbasis",
    "embed_in_eigenplane",
    "find_violation",
    "random_context",
    "verify_lemma_batch",
    "differently_ordered_pair",
    "extract_chain_unitaries",
    "theorem_driver",
    "random_markovian_pair",
]


def _dag(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def _unitarity_residual(m: np.ndarray) -> float:
    return float(np.abs(_dag(m) @ m - np.eye(m.shape[0])).max())


@dataclass(frozen=True, eq=False)
class NoGoContext:
    """Six unitaries and two amplitudes defining the two ordered branches."""

    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray
    alpha: complex
    beta: complex

    def __post_init__(self):
        mats = []
        for name in ("u1", "u2", "u3", "v1", "v2", "v3"):
            m = np.array(getattr(self, name), dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"{name} must be square, got shape {m.shape}")
            if _unitarity_residual(m) > UNITARY_TOL:
                raise ValueError(f"{name} is not unitary (residual {_unitarity_residual(m):.2e})")
            m.setflags(write=False)
            object.__setattr__(self, name, m)
            mats.append(m)
        if len({m.shape for m in mats}) != 1:
            raise ValueError("all six unitaries must have the same dimension")
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        if self.alpha == 0 or self.beta == 0:
            raise ValueError("alpha and beta must be nonzero")

    @property
    def dim(self) -> int:
        return self.u1.shape[0]

    @property
    def phi(self) -> float:
        """Phase of ``alpha* beta``."""
        return float(np.angle(np.conj(self.alpha) * self.beta))

    @property
    def lam(self) -> float:
        """Value ``Re<psi|V T|psi>`` would need for normalization."""
        a2, b2 = abs(self.alpha) ** 2, abs(self.beta) ** 2
        return (1 - a2 - b2) / (2 * abs(np.conj(self.alpha) * self.beta))

    def expectation_from_real_part(self, mu: float) -> float:
        a2, b2 = abs(self.alpha) ** 2, abs(self.beta) ** 2
        return a2 + b2 + 2 * abs(np.conj(self.alpha) * self.beta) * mu

    def branches(self, names: Sequence[str] = ("P", "A", "B", "F")) -> tuple[ProcessVector, ProcessVector]:
        p, a, b, f = names
        w1 = markovian_unitary_process([a, b], [self.u1, self.u2, self.u3], layout=[a, b], past=p, future=f)
        w2 = markovian_unitary_process([b, a], [self.v1, self.v2, self.v3], layout=[a, b], past=p, future=f)
        return w1, w2

    def superposition(self, names: Sequence[str] = ("P", "A", "B", "F")) -> ProcessVector:
        w1, w2 = self.branches(names)
        return superpose(w1, w2, self.alpha, self.beta)


def cross_term(ctx: NoGoContext, psi, r, s) -> complex:
    """``<w1|chi|w2>`` for the state ``psi`` at P and unitary channels ``r``, ``s`` at A, B."""
    psi = np.asarray(psi, dtype=complex).ravel()
    r = np.asarray(r, dtype=complex)
    s = np.asarray(s, dtype=complex)
    d = ctx.dim
    if psi.shape != (d,) or r.shape != (d, d) or s.shape != (d, d):
        raise ValueError(f"psi, r, s must have dimension {d}")
    op = (
        _dag(ctx.u1) @ _dag(r) @ _dag(ctx.u2) @ _dag(s) @ _dag(ctx.u3)
        @ ctx.v3 @ r @ ctx.v2 @ s @ ctx.v1
    )
    return complex(np.vdot(psi, op @ psi))


def effective_v(ctx: NoGoContext) -> np.ndarray:
    """``e^{i phi} U1^dag V2 U3^dag V3 U2^dag V1``."""
    return np.exp(1j * ctx.phi) * (
        _dag(ctx.u1) @ ctx.v2 @ _dag(ctx.u3) @ ctx.v3 @ _dag(ctx.u2) @ ctx.v1
    )


def substitute_rs(ctx: NoGoContext, r, s) -> tuple[np.ndarray, np.ndarray]:
    """Unitaries to install at A and B so the cross term becomes ``<psi|V r^dag s^dag r s|psi>``
    (up to the phase ``e^{-i phi}``).

    Returns ``(r_actual, s_actual)``.
    """
    r = np.asarray(r, dtype=complex)
    s = np.asarray(s, dtype=complex)
    if r.shape != (ctx.dim, ctx.dim) or s.shape != (ctx.dim, ctx.dim):
        raise ValueError(f"r and s must be {ctx.dim}x{ctx.dim}")
    u1, u2, u3, v1, v2, v3 = ctx.u1, ctx.u2, ctx.u3, ctx.v1, ctx.v2, ctx.v3
    s_actual = _dag(u3) @ v3 @ _dag(u2) @ v1 @ s @ _dag(v1)
    r_actual = _dag(u2) @ v1 @ r @ _dag(v1) @ u2 @ _dag(v3) @ u3 @ _dag(v2)
    return r_actual, s_actual


_PARTNER = {"x": "y", "y": "z", "z": "x"}


def commutator_gadget(axis: str, sign: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Qubit unitaries ``r, s`` with ``r^dag s^dag r s = sign * i * sigma_axis``.

    ``r`` is a Pauli matrix orthogonal to ``axis`` and ``s = (1 + sign i sigma_axis)/sqrt(2)``.
    Returns ``(r, s, t)``.
    """
    if axis not in PAULIS:
        raise ValueError(f"axis must be one of x, y, z; got {axis!r}")
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1; got {sign!r}")
    r = PAULIS[_PARTNER[axis]].copy()
    s = (np.eye(2) + sign * 1j * PAULIS[axis]) / np.sqrt(2)
    t = _dag(r) @ _dag(s) @ r @ s
    return r, s, t


def eigenbasis(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal eigenbasis of a normal matrix, sorted by eigenvalue phase then index.

    Uses the complex Schur form, which is diagonal for normal matrices, so
    degenerate eigenspaces still come with orthonormal vectors.
    """
    t, z = scipy.linalg.schur(np.asarray(v, dtype=complex), output="complex")
    vals = np.diag(t)
    order = sorted(range(len(vals)), key=lambda i: (round(float(np.angle(vals[i])), 12), i))
    return vals[order], z[:, order]


def embed_in_eigenplane(v, gate2, which_pair: tuple[int, int], basis: np.ndarray | None = None) -> np.ndarray:
    """Act as ``gate2`` on the plane of eigenvectors ``which_pair`` of ``v``, identity elsewhere."""
    v = np.asarray(v, dtype=complex)
    d = v.shape[0]
    a, b = which_pair
    if not (0 <= a < d and 0 <= b < d) or a == b:
        raise ValueError(f"need two distinct eigenvector indices in [0, {d}), got {which_pair}")
    if basis is None:
        _, basis = eigenbasis(v)
    e = basis[:, [a, b]]
    return e @ np.asarray(gate2, dtype=complex) @ _dag(e) + np.eye(d) - e @ _dag(e)


@dataclass
class WitnessReport:
    """Local operations making the superposed process's total probability differ from 1."""

    alpha: complex
    beta: complex
    phi: float
    lam: float
    psi: np.ndarray
    r: np.ndarray
    s: np.ndarray
    r_actual: np.ndarray
    s_actual: np.ndarray
    rho: ChoiOperator
    xi: ChoiOperator
    eta: ChoiOperator
    operations: dict
    expectation: float
    contracted_expectation: float
    deviation: float
    branch: dict
    success: bool

    def to_dict(self) -> dict:
        def cplx(z):
            return [float(np.real(z)), float(np.imag(z))]

        def mat(m):
            return [[cplx(z) for z in row] for row in np.asarray(m)]

        return {
            "alpha": cplx(self.alpha),
            "beta": cplx(self.beta),
            "phi": float(self.phi),
            "lambda": float(self.lam),
            "expectation": float(self.expectation),
            "contracted_expectation": float(self.contracted_expectation),
            "deviation": float(self.deviation),
            "success": bool(self.success),
            "branch": self.branch,
            "psi": [cplx(z) for z in self.psi],
            "r": mat(self.r),
            "s": mat(self.s),
            "r_actual": mat(self.r_actual),
            "s_actual": mat(self.s_actual),
            "operations": {name: op.to_dict() for name, op in self.operations.items()},
        }


def _candidates(v: np.ndarray):
    """``(branch, r, s)`` for T = 1 and every embedded +-i sigma_j gadget."""
    d = v.shape[0]
    eye = np.eye(d, dtype=complex)
    yield {"t": "1", "plane": None}, eye, eye
    _, basis = eigenbasis(v)
    for pair in itertools.combinations(range(d), 2):
        for axis in "xyz":
            for sign in (1, -1):
                r2, s2, _ = commutator_gadget(axis, sign)
                r = embed_in_eigenplane(v, r2, pair, basis)
                s = embed_in_eigenplane(v, s2, pair, basis)
                label = ("+" if sign > 0 else "-") + f"i*sigma_{axis}"
                yield {"t": label, "plane": list(pair)}, r, s


def _extremes(v: np.ndarray, t: np.ndarray, lam: float):
    """Eigenvector of ``(VT + T^dag V^dag)/2`` whose eigenvalue is farthest from ``lam``."""
    vt = v @ t
    h = (vt + _dag(vt)) / 2
    vals, vecs = np.linalg.eigh(h)
    if abs(vals[0] - lam) >= abs(vals[-1] - lam):
        return float(vals[0]), vecs[:, 0], "min"
    return float(vals[-1]), vecs[:, -1], "max"


def _lemma_operations(ctx, psi, r_actual, s_actual, names):
    p, a, b, f = names
    d = ctx.dim
    rho = choi_prepare(np.outer(psi, psi.conj()), f"{p}_O")
    xi = choi_unitary(r_actual, f"{a}_I", f"{a}_O")
    eta = choi_unitary(s_actual, f"{b}_I", f"{b}_O")
    discard = choi_discard(d, f"{f}_I")
    return rho, xi, eta, {p: rho, a: xi, b: eta, f: discard}


def find_violation(
    ctx: NoGoContext,
    threshold: float = DEVIATION_THRESHOLD,
    fallback_draws: int = 1000,
    seed=0,
    check: bool = True,
    names: Sequence[str] = ("P", "A", "B", "F"),
) -> WitnessReport:
    """Build ``(rho, xi, eta)`` with ``|<chi> - 1|`` as large as the gadget family allows.

    When ``check`` is set, ``<chi>`` is recomputed by contracting the superposed
    process vector with the assembled operations, and instruments are verified
    CPTP.
    """
    v = effective_v(ctx)
    lam = ctx.lam
    best = None
    for branch, r, s in _candidates(v):
        mu, psi, side = _extremes(v, _dag(r) @ _dag(s) @ r @ s, lam)
        gap = abs(mu - lam)
        if best is None or gap > best[0]:
            best = (gap, mu, psi, r, s, dict(branch, extremum=side))

    scale = 2 * abs(np.conj(ctx.alpha) * ctx.beta)
    if best[0] * scale <= threshold and fallback_draws:
        rng = as_generator(seed)
        for n in range(fallback_draws):
            r = random_unitary(ctx.dim, rng)
            s = random_unitary(ctx.dim, rng)
            mu, psi, side = _extremes(v, _dag(r) @ _dag(s) @ r @ s, lam)
            if abs(mu - lam) > best[0]:
                best = (abs(mu - lam), mu, psi, r, s, {"t": "random", "plane": None, "draw": n, "extremum": side})

    gap, mu, psi, r, s, branch = best
    r_actual, s_actual = substitute_rs(ctx, r, s)
    rho, xi, eta, ops = _lemma_operations(ctx, psi, r_actual, s_actual, names)
    expectation = ctx.expectation_from_real_part(mu)
    contracted = float("nan")
    if check:
        for op in (rho, xi, eta):
            if not is_cptp(op, 1e-12):
                raise RuntimeError("assembled local operation is not CPTP")
        contracted = vector_probability(ctx.superposition(names), ops)
        if abs(contracted - expectation) > 1e-9:
            raise RuntimeError(
                f"witness expectation {expectation!r} disagrees with contraction {contracted!r}"
            )
    deviation = abs(expectation - 1)
    return WitnessReport(
        alpha=ctx.alpha, beta=ctx.beta, phi=ctx.phi, lam=lam, psi=psi, r=r, s=s,
        r_actual=r_actual, s_actual=s_actual, rho=rho, xi=xi, eta=eta, operations=ops,
        expectation=expectation, contracted_expectation=contracted, deviation=deviation,
        branch=branch, success=deviation > threshold,
    )


def random_context(dim: int, seed, modulus_range=(0.2, 1.0)) -> NoGoContext:
    """Haar unitaries; amplitudes with uniform moduli in ``modulus_range`` and uniform phases."""
    rng = as_generator(seed)
    us = [random_unitary(dim, rng) for _ in range(6)]
    lo, hi = modulus_range
    mods = rng.uniform(lo, hi, size=2)
    phases = rng.uniform(0, 2 * np.pi, size=2)
    alpha, beta = mods * np.exp(1j * phases)
    return NoGoContext(*us, alpha=alpha, beta=beta)


@dataclass
class LemmaBatchSummary:
    dim: int
    trials: int
    seed: int
    deviations: np.ndarray
    failures: int
    reports: list = field(default_factory=list, repr=False)

    @property
    def min_deviation(self) -> float | None:
        return float(np.min(self.deviations)) if self.trials else None

    @property
    def median_deviation(self) -> float | None:
        return float(np.median(self.deviations)) if self.trials else None

    @property
    def max_deviation(self) -> float | None:
        return float(np.max(self.deviations)) if self.trials else None

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "trials": self.trials,
            "seed": self.seed,
            "failures": self.failures,
            "min_deviation": self.min_deviation,
            "median_deviation": self.median_deviation,
            "max_deviation": self.max_deviation,
        }


def verify_lemma_batch(dim: int, trials: int, seed: int, check: bool = True) -> LemmaBatchSummary:
    """Run :func:`find_violation` on ``trials`` random contexts, one independent stream each."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    streams = np.random.SeedSequence(seed).spawn(trials)
    reports = []
    for stream in streams:
        rng = np.random.default_rng(stream)
        ctx = random_context(dim, rng)
        reports.append(find_violation(ctx, seed=rng, check=check))
    devs = np.array([r.deviation for r in reports])
    failures = sum(not r.success for r in reports)
    return LemmaBatchSummary(dim, trials, seed, devs, failures, reports)


# -- general theorem --------------------------------------------------------------------

def differently_ordered_pair(order1: Sequence[str], order2: Sequence[str]) -> tuple[str, str]:
    """``(j, k)`` with ``j`` before ``k`` in ``order1`` and after it in ``order2``.

    Among such pairs, the one farthest apart in ``order1`` is returned (first on ties).
    """
    if sorted(order1) != sorted(order2):
        raise ValueError("orders must be permutations of the same parties")
    pos2 = {name: i for i, name in enumerate(order2)}
    best, best_gap = None, 0
    for (a, j), (b, k) in itertools.combinations(enumerate(order1), 2):
        if pos2[k] < pos2[j] and b - a > best_gap:
            best, best_gap = (j, k), b - a
    if best is None:
        raise ValueError("the two orders are identical; no oppositely ordered pair exists")
    return best


def _endpoints(v: ProcessVector) -> tuple[Party, Party]:
    past = [p for p in v.parties if p.d_in == 1]
    future = [p for p in v.parties if p.d_out == 1]
    if len(past) != 1 or len(future) != 1:
        raise ValueError("expected exactly one party with trivial input and one with trivial output")
    return past[0], future[0]


def extract_chain_unitaries(v: ProcessVector, chain: Sequence[str], tol: float = 1e-8) -> list[np.ndarray]:
    """Recover ``U_0, ..., U_n`` from ``(x)_j |U_j>>`` along ``chain`` (past first, future last).

    Individual factors are only defined up to phases whose product is one; the
    returned factors multiply back to ``v`` exactly.
    """
    parties = [v.party(name) for name in chain]
    legs = [(parties[j], parties[j + 1]) for j in range(len(parties) - 1)]
    order = []
    for src, dst in legs:
        order += list(src.out_labels) + list(dst.in_labels)
    rest = permute_vector(v.vec, order).entries
    mats = []
    for n, (src, dst) in enumerate(legs):
        if src.d_out != dst.d_in:
            raise ValueError(f"{src.name} -> {dst.name} is not dimension preserving")
        d = src.d_out
        m = rest.reshape(d * d, -1)
        if n == len(legs) - 1:
            leg = m[:, 0]
        else:
            u, sv, vh = np.linalg.svd(m, full_matrices=False)
            if len(sv) > 1 and sv[1] > tol * sv[0]:
                raise ValueError("process vector does not factorize along the given chain")
            leg = u[:, 0] * np.sqrt(d)
            rest = (leg.conj() @ m) / d
        mats.append(leg.reshape(d, d).T)
    for u in mats:
        if _unitarity_residual(u) > tol:
            raise ValueError("chain factor is not unitary; not a unitary Markovian process")
    return mats


def theorem_driver(
    w1: ProcessVector,
    w2: ProcessVector,
    orders: tuple[Sequence[str], Sequence[str]],
    alpha: complex,
    beta: complex,
    **kwargs,
) -> WitnessReport:
    """Witness that ``alpha w1 + beta w2`` is not a valid process.

    Picks two parties ordered oppositely, contracts every other middle party
    with the identity, recovers the six effective unitaries of the reduced
    chains, runs :func:`find_violation`, and lifts the operations back by
    installing identity channels at the contracted parties.
    """
    if w1.parties != w2.parties:
        raise ValueError("processes are defined over different party layouts")
    order1, order2 = (list(o) for o in orders)
    past, future = _endpoints(w1)
    dims = {p.d_in for p in w1.parties if p.d_in > 1} | {p.d_out for p in w1.parties if p.d_out > 1}
    if len(dims) != 1:
        raise ValueError(f"all nontrivial dimensions must be equal, found {sorted(dims)}")
    j, k = differently_ordered_pair(order1, order2)

    keep = {j, k}
    r1 = reduce_with_identity(w1, keep)
    r2 = reduce_with_identity(w2, keep)
    u1, u2, u3 = extract_chain_unitaries(r1, [past.name, j, k, future.name])
    v1, v2, v3 = extract_chain_unitaries(r2, [past.name, k, j, future.name])
    ctx = NoGoContext(u1, u2, u3, v1, v2, v3, alpha=alpha, beta=beta)

    # the reduced layout orders j, k as in the full layout; keep the lemma's A=j, B=k roles
    check = kwargs.pop("check", True)
    report = find_violation(ctx, names=(past.name, j, k, future.name), check=False, **kwargs)

    ops = {}
    for p in w1.parties:
        if p.name in report.operations:
            ops[p.name] = report.operations[p.name]
        else:
            ops[p.name] = ChoiOperator.from_matrix(choi_identity(p.d_in).matrix, p.in_parts, p.out_parts)
    report.operations = ops
    report.branch = dict(report.branch, pair=[j, k])
    if check:
        for op in (report.rho, report.xi, report.eta):
            if not is_cptp(op, 1e-12):
                raise RuntimeError("assembled local operation is not CPTP")
        contracted = vector_probability(superpose(w1, w2, alpha, beta), ops)
        if abs(contracted - report.expectation) > 1e-9:
            raise RuntimeError(
                f"witness expectation {report.expectation!r} disagrees with contraction {contracted!r}"
            )
        report.contracted_expectation = contracted
    return report


def random_markovian_pair(n: int, dim: int, seed, names: Sequence[str] | None = None):
    """Two unitary Markovian processes over the same ``n`` middle parties with distinct random orders.

    Returns ``(w1, w2, order1, order2)``.
    """
    if n < 2:
        raise ValueError("need at least two middle parties")
    rng = as_generator(seed)
    names = list(names) if names is not None else [chr(ord("A") + i) for i in range(n)]
    order1 = list(rng.permutation(names))
    order2 = list(order1)
    while order2 == order1:
        order2 = list(rng.permutation(names))
    w1 = markovian_unitary_process(order1, [random_unitary(dim, rng) for _ in range(n + 1)], layout=names)
    w2 = markovian_unitary_process(order2, [random_unitary(dim, rng) for _ in range(n + 1)], layout=names)
    return w1, w2, order1, order2
