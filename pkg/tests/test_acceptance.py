"""Acceptance criteria, each checked at its stated tolerance.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""
import json
import re
import subprocess
import sys
import time

import numpy as np
import pytest

from procmat.channels import amplitude_grid, is_cptp, linear_combination_unitarity, random_unitary
from procmat.nogo import (
    commutator_gadget,
    cross_term,
    effective_v,
    find_violation,
    random_context,
    random_markovian_pair,
    substitute_rs,
    theorem_driver,
)
from procmat.process import (
    ProcessMatrix,
    is_valid_process,
    is_valid_process_vector,
    markovian_unitary_process,
    switch3,
    switch4,
    trace_out_subsystem,
)
from procmat.tensor import HADAMARD, PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, LabeledOperator

import conftest
from conftest import oracle_expectation
from test_nogo import oracle_cross, random_state
from test_process import _ordered_chain_matrix


def record(number, ok, text):
    conftest.ACCEPTANCE_LINES.append(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {text}")
    assert ok, text


def lemma_run(dim, trials, seed):
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    worst_oracle, min_dev, bad = 0.0, np.inf, 0
    for _ in range(trials):
        ctx = random_context(dim, rng)
        rep = find_violation(ctx, seed=rng)
        cptp = all(is_cptp(op, 1e-12) for op in (rep.rho, rep.xi, rep.eta))
        err = abs(oracle_expectation(ctx, rep) - rep.expectation)
        worst_oracle = max(worst_oracle, err)
        min_dev = min(min_dev, rep.deviation)
        bad += (not cptp) or rep.deviation <= 1e-6 or err >= 1e-10
    return bad, min_dev, worst_oracle, time.perf_counter() - start


def test_criterion_1_lemma_qubits():
    bad, min_dev, err, secs = lemma_run(2, 200, 1)
    ok = bad == 0 and secs < 10
    record(1, ok, f"d=2, 200 contexts, failures={bad}, min deviation={min_dev:.3g}, "
                  f"max oracle error={err:.1e}, {secs:.1f}s")


def test_criterion_2_lemma_qutrits():
    bad, min_dev, err, secs = lemma_run(3, 50, 2)
    ok = bad == 0 and secs < 30
    record(2, ok, f"d=3, 50 contexts, failures={bad}, min deviation={min_dev:.3g}, "
                  f"max oracle error={err:.1e}, {secs:.1f}s")


def test_criterion_3_theorem():
    rng = np.random.default_rng(3)
    bad, min_dev = 0, np.inf
    for n in (3, 4):
        for _ in range(20):
            w1, w2, o1, o2 = random_markovian_pair(n, 2, rng)
            amp = random_context(2, rng)
            rep = theorem_driver(w1, w2, (o1, o2), amp.alpha, amp.beta, seed=rng)
            min_dev = min(min_dev, rep.deviation)
            bad += not (rep.success and rep.deviation > 1e-6)
    record(3, bad == 0, f"n=3 and n=4, 20 pairs each, failures={bad}, min deviation={min_dev:.3g}")


def test_criterion_4_genuine_processes_valid():
    rng = np.random.default_rng(4)
    reports = [is_valid_process_vector(switch4()), is_valid_process_vector(switch3([1, 0]))]
    for _ in range(20):
        w = markovian_unitary_process(["A", "B"], [random_unitary(2, rng) for _ in range(3)])
        reports.append(is_valid_process_vector(w, seed=rng))
    floor = min(r.psd_min_eigenvalue for r in reports)
    worst = max(r.worst_normalization_deviation for r in reports)
    ok = all(r.verdict for r in reports) and floor >= -1e-10 and worst < 1e-9
    record(4, ok, f"switch4, switch3, 20 chains: min eigenvalue={floor:.1e}, worst deviation={worst:.1e}")


def test_criterion_5_control_decoherence():
    psi = np.array([1, 0], dtype=complex)
    reduced = trace_out_subsystem(switch3(psi), ["F_c"]).entries
    mix = (_ordered_chain_matrix(psi, "A", "B") + _ordered_chain_matrix(psi, "B", "A")) / 2
    err = np.abs(reduced - mix).max()
    record(5, err < 1e-12, f"max-entry distance to the even mixture={err:.1e}")


def test_criterion_6_algebra():
    worst_cross = worst_sub = 0.0
    for d in (2, 3):
        rng = np.random.default_rng(60 + d)
        for _ in range(100):
            ctx = random_context(d, rng)
            psi = random_state(d, rng)
            r, s = random_unitary(d, rng), random_unitary(d, rng)
            worst_cross = max(worst_cross, abs(cross_term(ctx, psi, r, s) - oracle_cross(ctx, psi, r, s)))
            ra, sa = substitute_rs(ctx, r, s)
            t = r.conj().T @ s.conj().T @ r @ s
            lhs = np.exp(1j * ctx.phi) * cross_term(ctx, psi, ra, sa)
            worst_sub = max(worst_sub, abs(lhs - np.vdot(psi, effective_v(ctx) @ t @ psi)))
    ok = worst_cross < 1e-10 and worst_sub < 1e-10
    record(6, ok, f"100 draws at d=2,3: cross-term error={worst_cross:.1e}, substitution error={worst_sub:.1e}")


def test_criterion_7_gadgets():
    paulis = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}
    worst = 0.0
    for axis, p in paulis.items():
        for sign in (1, -1):
            _, _, t = commutator_gadget(axis, sign)
            worst = max(worst, np.abs(t - sign * 1j * p).max())
    r, s, _ = commutator_gadget("x", 1)
    printed = np.array_equal(r, PAULI_Y) and np.abs(s - (PAULI_I + 1j * PAULI_X) / np.sqrt(2)).max() < 1e-15
    record(7, worst < 1e-15 and printed, f"six (axis, sign) pairs, max error={worst:.1e}, j=x instance matches={printed}")


def test_criterion_8_unitary_superpositions():
    h = np.sqrt(0.5)
    had = linear_combination_unitarity(PAULI_X, PAULI_Z, [(h, h)])
    had_ok = had.any_unitary and np.allclose(h * PAULI_X + h * PAULI_Z, HADAMARD)
    grid = amplitude_grid(41)
    raise_op = (PAULI_X + 1j * PAULI_Y) / np.sqrt(2)
    scan = linear_combination_unitarity(PAULI_I, raise_op, grid)
    nonzero = all(a != 0 and b != 0 for a, b in grid)
    ok = had_ok and nonzero and not scan.any_unitary and scan.min_residual > 0.1
    record(8, ok, f"Hadamard accepted={had_ok}; {len(grid)} grid points, min residual={scan.min_residual:.3f}")


def _population(rng):
    """50 valid full-rank mixtures of ordered processes and 50 PSD perturbations of them."""
    valid, invalid = [], []
    for _ in range(50):
        w1 = markovian_unitary_process(["A", "B"], [random_unitary(2, rng) for _ in range(3)]).to_matrix()
        w2 = markovian_unitary_process(["B", "A"], [random_unitary(2, rng) for _ in range(3)],
                                       layout=["A", "B"]).to_matrix()
        t = rng.uniform(0.1, 0.9)
        d_out = np.prod([p.d_out for p in w1.parties])
        m = 0.5 * (t * w1.entries + (1 - t) * w2.entries) + 0.5 * np.eye(len(w1.entries)) / d_out
        valid.append(ProcessMatrix(LabeledOperator.square(w1.mat.row_layout, m), w1.parties))
        g = rng.normal(size=m.shape) + 1j * rng.normal(size=m.shape)
        h = g + g.conj().T
        h -= np.trace(h) / len(h) * np.eye(len(h))
        h *= 0.2 * np.linalg.eigvalsh(m)[0] / np.linalg.norm(h, 2)
        invalid.append(ProcessMatrix(LabeledOperator.square(w1.mat.row_layout, m + h), w1.parties))
    return valid, invalid


def test_criterion_9_oracle_agreement():
    rng = np.random.default_rng(9)
    valid, invalid = _population(rng)
    disagreements, spanning_valid = 0, 0
    for w in valid + invalid:
        spanning = is_valid_process(w, samples=0).verdict
        rep = is_valid_process(w, samples=100, seed=rng)
        randomized = rep.psd_min_eigenvalue >= -1e-10 and rep.sampled_deviation < 1e-9
        disagreements += spanning != randomized
        spanning_valid += spanning
    ok = disagreements == 0 and spanning_valid == 50
    record(9, ok, f"100 operators (50 constructed valid), disagreements={disagreements}, "
                  f"spanning-valid count={spanning_valid}")


def test_criterion_10_determinism():
    argv = [sys.executable, "-m", "procmat", "nogo-lemma", "--dim", "2", "--trials", "50", "--seed", "42"]
    outs = [subprocess.run(argv, capture_output=True, check=True).stdout for _ in range(2)]
    pattern = rb'"duration_seconds": [-+0-9.eE]+'
    stripped = [re.sub(pattern, b"", o) for o in outs]
    assert all(len(re.findall(pattern, o)) == 1 for o in outs)
    ok = stripped[0] == stripped[1] and json.loads(outs[0])["summary"]["failures"] == 0
    record(10, ok, f"two runs byte-identical without duration: {stripped[0] == stripped[1]}, "
                   f"{len(outs[0])} bytes")
