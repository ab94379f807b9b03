import numpy as np
import pytest

from procmat.channels import (
    choi_discard,
    choi_prepare,
    is_cptp,
    random_density_matrix,
    random_unitary,
)
from procmat.nogo import (
    NoGoContext,
    commutator_gadget,
    cross_term,
    differently_ordered_pair,
    effective_v,
    eigenbasis,
    embed_in_eigenplane,
    extract_chain_unitaries,
    find_violation,
    random_context,
    random_markovian_pair,
    substitute_rs,
    theorem_driver,
    verify_lemma_batch,
)
from procmat.process import (
    is_valid_process_vector,
    markovian_unitary_process,
    probability,
    superpose,
    switch4,
    vector_probability,
)
from procmat.tensor import PAULI_X, PAULI_Y, PAULI_Z

from conftest import oracle_chain_vectors, oracle_expectation

SQ = 1 / np.sqrt(2)


def identity_ctx(alpha, beta, d=2):
    eye = np.eye(d)
    return NoGoContext(eye, eye, eye, eye, eye, eye, alpha=alpha, beta=beta)


def random_state(d, rng):
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    return psi / np.linalg.norm(psi)


def oracle_cross(ctx, psi, r, s):
    """<w1| rho^T (x) |R*>><<R*| (x) |S*>><<S*| (x) 1 |w2> by explicit Kronecker products."""
    w1, w2 = oracle_chain_vectors((ctx.u1, ctx.u2, ctx.u3), (ctx.v1, ctx.v2, ctx.v3))
    d = ctx.dim
    rho_t = np.outer(psi, psi.conj()).T
    kr = r.conj().T.reshape(-1)  # |R*>> has entries (R*)^T flattened
    ks = s.conj().T.reshape(-1)
    chi = np.kron(np.kron(np.kron(rho_t, np.outer(kr, kr.conj())), np.outer(ks, ks.conj())), np.eye(d))
    return complex(np.vdot(w1, chi @ w2))


def test_context_rejects_bad_input():
    eye = np.eye(2)
    with pytest.raises(ValueError, match="nonzero"):
        identity_ctx(1, 0)
    with pytest.raises(ValueError, match="unitary"):
        NoGoContext(eye * 2, eye, eye, eye, eye, eye, alpha=1, beta=1)
    with pytest.raises(ValueError, match="dimension"):
        NoGoContext(eye, eye, np.eye(3), eye, eye, eye, alpha=1, beta=1)


def test_lambda_examples():
    assert abs(identity_ctx(SQ, SQ).lam) < 1e-15
    assert identity_ctx(1, 1).lam == pytest.approx(-0.5)
    assert identity_ctx(0.5, 0.5).lam == pytest.approx(1.0)


@pytest.mark.parametrize("d", [2, 3])
def test_cross_term_matches_oracle(d):
    rng = np.random.default_rng(300 + d)
    for _ in range(100):
        ctx = random_context(d, rng)
        psi = random_state(d, rng)
        r, s = random_unitary(d, rng), random_unitary(d, rng)
        assert abs(cross_term(ctx, psi, r, s) - oracle_cross(ctx, psi, r, s)) < 1e-10


@pytest.mark.parametrize("d", [2, 3])
def test_substitution_identity(d):
    rng = np.random.default_rng(400 + d)
    for _ in range(100):
        ctx = random_context(d, rng)
        psi = random_state(d, rng)
        r, s = random_unitary(d, rng), random_unitary(d, rng)
        t = r.conj().T @ s.conj().T @ r @ s
        ra, sa = substitute_rs(ctx, r, s)
        lhs = np.exp(1j * ctx.phi) * cross_term(ctx, psi, ra, sa)
        rhs = np.vdot(psi, effective_v(ctx) @ t @ psi)
        assert abs(lhs - rhs) < 1e-10


def test_effective_v_examples():
    assert np.allclose(effective_v(identity_ctx(SQ, SQ)), np.eye(2), atol=1e-15)
    assert np.allclose(effective_v(identity_ctx(SQ, 1j * SQ)), 1j * np.eye(2), atol=1e-15)
    assert np.allclose(effective_v(identity_ctx(SQ, -SQ)), -np.eye(2), atol=1e-15)


def test_substitute_rs_identity_context():
    r, s = PAULI_X, (np.eye(2) + 1j * PAULI_Z) * SQ
    ra, sa = substitute_rs(identity_ctx(1, 1), r, s)
    assert np.allclose(ra, r) and np.allclose(sa, s)


@pytest.mark.parametrize("axis, pauli", [("x", PAULI_X), ("y", PAULI_Y), ("z", PAULI_Z)])
@pytest.mark.parametrize("sign", [1, -1])
def test_commutator_gadget_table(axis, pauli, sign):
    r, s, t = commutator_gadget(axis, sign)
    assert np.abs(t - sign * 1j * pauli).max() < 1e-15
    assert np.abs(r.conj().T @ s.conj().T @ r @ s - t).max() < 1e-15
    for m in (r, s):
        assert np.abs(m @ m.conj().T - np.eye(2)).max() < 1e-15


def test_commutator_gadget_printed_instances():
    r, s, t = commutator_gadget("x", 1)
    assert np.array_equal(r, PAULI_Y)
    assert np.allclose(s, (np.eye(2) + 1j * PAULI_X) * SQ, atol=0)
    r, s, t = commutator_gadget("x", -1)
    assert np.array_equal(r, PAULI_Y)
    assert np.abs(t + 1j * PAULI_X).max() < 1e-15


def test_commutator_gadget_errors():
    with pytest.raises(ValueError):
        commutator_gadget("w")
    with pytest.raises(ValueError):
        commutator_gadget("x", 2)


def test_eigenbasis_diagonalizes():
    rng = np.random.default_rng(5)
    v = random_unitary(4, rng)
    vals, basis = eigenbasis(v)
    assert np.allclose(basis.conj().T @ basis, np.eye(4), atol=1e-12)
    assert np.allclose(v @ basis, basis * vals, atol=1e-12)
    phases = np.angle(vals)
    assert np.all(np.diff(phases) >= 0)


def test_eigenbasis_degenerate():
    vals, basis = eigenbasis(np.diag([1, 1, -1]).astype(complex))
    assert np.allclose(basis.conj().T @ basis, np.eye(3))
    assert np.allclose(vals, [1, 1, -1])


def test_embed_in_eigenplane_examples():
    v = np.diag([1, 1j, -1]).astype(complex)
    out = embed_in_eigenplane(v, PAULI_X, (0, 2))
    # basis sorted by phase: 1 (index 0), i (index 1), -1 (index 2)
    expected = np.array([[0, 0, 1], [0, 1, 0], [1, 0, 0]], dtype=complex)
    assert np.allclose(np.abs(out), expected)
    assert np.allclose(out @ out.conj().T, np.eye(3))
    assert np.allclose(embed_in_eigenplane(v, np.eye(2), (0, 1)), np.eye(3))
    with pytest.raises(ValueError):
        embed_in_eigenplane(v, PAULI_X, (1, 1))
    with pytest.raises(ValueError):
        embed_in_eigenplane(v, PAULI_X, (0, 3))


def test_embedded_gadget_restricts_to_plane():
    rng = np.random.default_rng(9)
    v = random_unitary(3, rng)
    _, basis = eigenbasis(v)
    r2, s2, t2 = commutator_gadget("y", 1)
    r = embed_in_eigenplane(v, r2, (0, 2), basis)
    s = embed_in_eigenplane(v, s2, (0, 2), basis)
    t = r.conj().T @ s.conj().T @ r @ s
    e = basis[:, [0, 2]]
    assert np.allclose(e.conj().T @ t @ e, t2, atol=1e-12)
    assert np.allclose(t @ basis[:, 1], basis[:, 1], atol=1e-12)


@pytest.mark.parametrize("alpha, beta, expected", [(SQ, SQ, 2.0), (1, 1, 4.0)])
def test_find_violation_identity_context(alpha, beta, expected):
    rep = find_violation(identity_ctx(alpha, beta))
    assert rep.branch["t"] == "1"
    assert rep.expectation == pytest.approx(expected, abs=1e-12)
    assert rep.contracted_expectation == pytest.approx(expected, abs=1e-12)
    assert rep.success


def test_find_violation_imaginary_relative_phase():
    rep = find_violation(identity_ctx(SQ, 1j * SQ))
    assert rep.branch["t"] != "1"
    assert rep.deviation == pytest.approx(1.0, abs=1e-12)
    assert rep.expectation in (pytest.approx(0.0, abs=1e-12), pytest.approx(2.0, abs=1e-12))


@pytest.mark.parametrize("d", [2, 3])
def test_find_violation_sound(d):
    rng = np.random.default_rng(500 + d)
    for _ in range(30):
        ctx = random_context(d, rng)
        rep = find_violation(ctx, seed=rng)
        assert rep.success and rep.deviation > 1e-6
        for op in (rep.rho, rep.xi, rep.eta):
            assert is_cptp(op, 1e-12)
        assert abs(oracle_expectation(ctx, rep) - rep.expectation) < 1e-10
        assert abs(vector_probability(ctx.superposition(), rep.operations) - rep.expectation) < 1e-10


def test_witness_operations_are_complete():
    rep = find_violation(random_context(2, 3))
    assert set(rep.operations) == {"P", "A", "B", "F"}
    doc = rep.to_dict()
    assert doc["success"] is True
    assert set(doc["operations"]) == {"P", "A", "B", "F"}


def test_sign_flip_symmetry_for_normalized_amplitudes():
    rng = np.random.default_rng(21)
    for _ in range(20):
        ctx = random_context(2, rng)
        a = ctx.alpha / np.hypot(abs(ctx.alpha), abs(ctx.beta))
        b = ctx.beta / np.hypot(abs(ctx.alpha), abs(ctx.beta))
        mats = (ctx.u1, ctx.u2, ctx.u3, ctx.v1, ctx.v2, ctx.v3)
        d_plus = find_violation(NoGoContext(*mats, alpha=a, beta=b)).deviation
        d_minus = find_violation(NoGoContext(*mats, alpha=a, beta=-b)).deviation
        assert d_plus == pytest.approx(d_minus, abs=1e-10)


def test_control_restores_normalization():
    """The witness operations give probability 1 when the order is coherently controlled."""
    rng = np.random.default_rng(6)
    ctx = random_context(2, rng)
    rep = find_violation(ctx)
    w = switch4()
    plus = np.full((2, 2), 0.5)
    p_state = choi_prepare(np.kron(plus, np.outer(rep.psi, rep.psi.conj())))
    ops = {
        "P": p_state.matrix,
        "A": rep.xi.matrix,
        "B": rep.eta.matrix,
        "F": choi_discard(4).matrix,
    }
    assert abs(probability(w.to_matrix(), ops) - 1) < 1e-12
    assert abs(vector_probability(ctx.superposition(), rep.operations) - 1) > 1e-6


def test_verify_lemma_batch_counts():
    summary = verify_lemma_batch(2, 10, 3)
    assert summary.failures == 0 and len(summary.reports) == 10
    assert summary.min_deviation > 1e-6
    doc = summary.to_dict()
    assert doc["trials"] == 10 and doc["failures"] == 0


def test_verify_lemma_batch_empty():
    summary = verify_lemma_batch(2, 0, 3)
    assert summary.failures == 0
    assert summary.min_deviation is None and summary.max_deviation is None


def test_verify_lemma_batch_deterministic():
    a = verify_lemma_batch(2, 5, 11).deviations
    b = verify_lemma_batch(2, 5, 11).deviations
    assert np.array_equal(a, b)


def test_random_context_modulus_range():
    rng = np.random.default_rng(0)
    for _ in range(50):
        ctx = random_context(2, rng)
        assert 0.2 <= abs(ctx.alpha) <= 1.0 and 0.2 <= abs(ctx.beta) <= 1.0


@pytest.mark.parametrize(
    "o1, o2, pair",
    [
        ("AB", "BA", ("A", "B")),
        ("ABC", "CBA", ("A", "C")),
        ("ABC", "ACB", ("B", "C")),
        ("ABCD", "BACD", ("A", "B")),
    ],
)
def test_differently_ordered_pair(o1, o2, pair):
    assert differently_ordered_pair(list(o1), list(o2)) == pair


def test_differently_ordered_pair_errors():
    with pytest.raises(ValueError, match="identical"):
        differently_ordered_pair(["A", "B"], ["A", "B"])
    with pytest.raises(ValueError):
        differently_ordered_pair(["A", "B"], ["A", "C"])


def test_extract_chain_unitaries_round_trip():
    rng = np.random.default_rng(31)
    us = [random_unitary(2, rng) for _ in range(4)]
    w = markovian_unitary_process(["B", "A", "C"], us, layout="ABC")
    got = extract_chain_unitaries(w, ["P", "B", "A", "C", "F"])
    assert markovian_unitary_process(["B", "A", "C"], got, layout="ABC").allclose(w, atol=1e-12)
    for g, u in zip(got, us):
        overlap = np.vdot(u, g) / 2
        assert abs(abs(overlap) - 1) < 1e-12


def test_extract_chain_rejects_superposition():
    ctx = random_context(2, 4)
    with pytest.raises(ValueError):
        extract_chain_unitaries(ctx.superposition(), ["P", "A", "B", "F"])


def test_theorem_two_parties_matches_lemma():
    ctx = random_context(2, 17)
    w1, w2 = ctx.branches()
    rep = theorem_driver(w1, w2, (["A", "B"], ["B", "A"]), ctx.alpha, ctx.beta)
    ref = find_violation(ctx)
    assert rep.expectation == pytest.approx(ref.expectation, abs=1e-10)
    assert rep.branch["pair"] == ["A", "B"]


def test_theorem_reversed_three_party_pair():
    rng = np.random.default_rng(41)
    us = [random_unitary(2, rng) for _ in range(4)]
    vs = [random_unitary(2, rng) for _ in range(4)]
    w1 = markovian_unitary_process(list("ABC"), us, layout="ABC")
    w2 = markovian_unitary_process(list("CBA"), vs, layout="ABC")
    rep = theorem_driver(w1, w2, (list("ABC"), list("CBA")), 0.6, 0.8j)
    assert rep.branch["pair"] == ["A", "C"]
    assert rep.success
    assert set(rep.operations) == {"P", "A", "B", "C", "F"}
    assert abs(rep.contracted_expectation - rep.expectation) < 1e-10
    assert not is_valid_process_vector(superpose(w1, w2, 0.6, 0.8j), samples=0).verdict


@pytest.mark.parametrize("n", [3, 4])
def test_theorem_random_pairs(n):
    rng = np.random.default_rng(600 + n)
    for _ in range(5):
        w1, w2, o1, o2 = random_markovian_pair(n, 2, rng)
        amp = random_context(2, rng)
        rep = theorem_driver(w1, w2, (o1, o2), amp.alpha, amp.beta, seed=rng)
        assert rep.success and rep.deviation > 1e-6


def test_theorem_same_order_error():
    w1, w2, o1, _ = random_markovian_pair(3, 2, 0)
    with pytest.raises(ValueError):
        theorem_driver(w1, w1, (o1, o1), 1, 1)


def test_random_markovian_pair_orders_differ():
    for seed in range(20):
        _, _, o1, o2 = random_markovian_pair(3, 2, seed)
        assert o1 != o2 and sorted(o1) == sorted(o2) == ["A", "B", "C"]
    with pytest.raises(ValueError):
        random_markovian_pair(1, 2, 0)


def test_mixed_input_state_cross_check():
    # a mixed preparation is a convex combination, so <chi> stays affine in it
    rng = np.random.default_rng(8)
    ctx = random_context(2, rng)
    rep = find_violation(ctx)
    rho = random_density_matrix(2, rng)
    ops = dict(rep.operations, P=choi_prepare(rho))
    vals, vecs = np.linalg.eigh(rho)
    parts = []
    for p, v in zip(vals, vecs.T):
        parts.append(p * vector_probability(ctx.superposition(), dict(ops, P=choi_prepare(np.outer(v, v.conj())))))
    assert abs(vector_probability(ctx.superposition(), ops) - sum(parts)) < 1e-12
