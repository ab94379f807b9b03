"""Process vectors and process matrices over a layout of parties.

A party owns an ordered list of input subsystems followed by output
subsystems. The subsystem order of a process is the concatenation, over
parties in layout order, of each party's inputs then outputs. Local
operations are therefore Choi operators on ``(inputs, outputs)`` of a party,
and their tensor product lines up with the process without permutation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .channels import (
    ChoiOperator,
    as_generator,
    choi_depolarizing,
    cptp_affine_spanning_set,
    measure_prepare_instrument,
    random_cptp,
    random_instrument,
)
from .tensor import (
    LabeledOperator,
    LabeledVector,
    SpaceLayout,
    double_ket,
    operator_from_dict,
    operator_to_dict,
    partial_trace,
    permute_vector,
    tensor_vectors,
)

PSD_TOL = 1e-10
NORMALIZATION_TOL = 1e-9

__all__ = [
    "PSD_TOL",
    "NORMALIZATION_TOL",
    "Party",
    "ProcessVector",
    "ProcessMatrix",
    "ValidityReport",
    "SignallingResult",
    "probability",
    "vector_probability",
    "outcome_probabilities",
    "sample_normalization_deviation",
    "is_valid_process",
    "is_valid_process_vector",
    "markovian_unitary_process",
    "switch3",
    "switch4",
    "switch4_branches",
    "superpose",
    "reduce_with_identity",
    "trace_out_subsystem",
    "can_signal",
    "process_to_dict",
    "process_from_dict",
]

Parts = tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class Party:
    """A laboratory with input subsystems ``in_parts`` and output subsystems ``out_parts``.

    Trivial spaces are represented by an empty parts tuple.
    """

    name: str
    in_parts: Parts = ()
    out_parts: Parts = ()

    def __post_init__(self):
        object.__setattr__(self, "in_parts", tuple((str(l), int(d)) for l, d in self.in_parts))
        object.__setattr__(self, "out_parts", tuple((str(l), int(d)) for l, d in self.out_parts))

    @classmethod
    def simple(cls, name: str, d_in: int, d_out: int) -> "Party":
        """Party with one input ``{name}_I`` and one output ``{name}_O`` (omitted when trivial)."""
        in_parts = ((f"{name}_I", d_in),) if d_in > 1 else ()
        out_parts = ((f"{name}_O", d_out),) if d_out > 1 else ()
        return cls(name, in_parts, out_parts)

    @property
    def d_in(self) -> int:
        return int(np.prod([d for _, d in self.in_parts], dtype=np.int64))

    @property
    def d_out(self) -> int:
        return int(np.prod([d for _, d in self.out_parts], dtype=np.int64))

    @property
    def dim(self) -> int:
        return self.d_in * self.d_out

    @property
    def in_labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.in_parts)

    @property
    def out_labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.out_parts)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.in_labels + self.out_labels

    @property
    def layout(self) -> SpaceLayout:
        return SpaceLayout(self.in_parts + self.out_parts)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "d_in": self.d_in,
            "d_out": self.d_out,
            "in_parts": [list(p) for p in self.in_parts],
            "out_parts": [list(p) for p in self.out_parts],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Party":
        if "in_parts" in doc or "out_parts" in doc:
            party = cls(doc["name"], tuple(map(tuple, doc.get("in_parts", []))),
                        tuple(map(tuple, doc.get("out_parts", []))))
            for key in ("d_in", "d_out"):
                if key in doc and int(doc[key]) != getattr(party, key):
                    raise ValueError(f"party {party.name!r}: {key} disagrees with its parts")
            return party
        return cls.simple(doc["name"], int(doc["d_in"]), int(doc["d_out"]))


def _layout_of(parties: Sequence[Party]) -> SpaceLayout:
    names = [p.name for p in parties]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate party names {names}")
    out = SpaceLayout()
    for p in parties:
        out = out + p.layout
    return out


def _party(parties: Sequence[Party], name: str) -> Party:
    for p in parties:
        if p.name == name:
            return p
    raise KeyError(f"unknown party {name!r}; have {[p.name for p in parties]}")


@dataclass(frozen=True, eq=False)
class ProcessVector:
    vec: LabeledVector
    parties: tuple[Party, ...]

    def __post_init__(self):
        parties = tuple(self.parties)
        object.__setattr__(self, "parties", parties)
        if self.vec.layout != _layout_of(parties):
            raise ValueError(
                f"vector layout {self.vec.layout.subsystems} does not match the parties' "
                f"canonical layout {_layout_of(parties).subsystems}"
            )

    @property
    def entries(self) -> np.ndarray:
        return self.vec.entries

    @property
    def party_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parties)

    def party(self, name: str) -> Party:
        return _party(self.parties, name)

    def to_matrix(self) -> "ProcessMatrix":
        return ProcessMatrix(self.vec.outer(), self.parties)

    def __add__(self, other: "ProcessVector") -> "ProcessVector":
        _check_same_parties(self.parties, other.parties)
        return ProcessVector(self.vec + other.vec, self.parties)

    def __mul__(self, scalar) -> "ProcessVector":
        return ProcessVector(self.vec * scalar, self.parties)

    __rmul__ = __mul__

    def allclose(self, other: "ProcessVector", atol: float = 1e-10) -> bool:
        return self.parties == other.parties and self.vec.allclose(other.vec, atol)


@dataclass(frozen=True, eq=False)
class ProcessMatrix:
    mat: LabeledOperator
    parties: tuple[Party, ...]

    def __post_init__(self):
        parties = tuple(self.parties)
        object.__setattr__(self, "parties", parties)
        layout = _layout_of(parties)
        if self.mat.row_layout != layout or self.mat.col_layout != layout:
            raise ValueError("process matrix layout does not match the parties' canonical layout")

    @property
    def entries(self) -> np.ndarray:
        return self.mat.entries

    @property
    def party_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parties)

    def party(self, name: str) -> Party:
        return _party(self.parties, name)

    def allclose(self, other: "ProcessMatrix", atol: float = 1e-10) -> bool:
        return self.parties == other.parties and self.mat.allclose(other.mat, atol)


def _check_same_parties(a, b):
    if tuple(a) != tuple(b):
        raise ValueError("processes are defined over different party layouts")


def _as_process_matrix(w) -> ProcessMatrix:
    return w.to_matrix() if isinstance(w, ProcessVector) else w


# -- local operations -------------------------------------------------------------------

def _coerce_op(party: Party, op) -> np.ndarray:
    """Raw Choi matrix for ``party`` from a ChoiOperator, LabeledOperator or array."""
    if isinstance(op, ChoiOperator):
        if (op.in_dim, op.out_dim) != (party.d_in, party.d_out):
            raise ValueError(
                f"operation for party {party.name!r} maps {op.in_dim}->{op.out_dim}, "
                f"party is {party.d_in}->{party.d_out}"
            )
        m = op.matrix
    elif isinstance(op, LabeledOperator):
        m = op.entries
    else:
        m = np.asarray(op, dtype=complex)
    if m.shape != (party.dim, party.dim):
        raise ValueError(f"operation for party {party.name!r} has shape {m.shape}, expected {party.dim}")
    return m


def _ops_in_order(parties: Sequence[Party], ops) -> list[np.ndarray]:
    if isinstance(ops, Mapping):
        missing = [p.name for p in parties if p.name not in ops]
        extra = set(ops) - {p.name for p in parties}
        if missing or extra:
            raise ValueError(f"operation tuple mismatch: missing {missing}, unknown {sorted(extra)}")
        seq = [ops[p.name] for p in parties]
    else:
        seq = list(ops)
        if len(seq) != len(parties):
            raise ValueError(f"expected {len(parties)} operations, got {len(seq)}")
    return [_coerce_op(p, op) for p, op in zip(parties, seq)]


def _kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def _real(z: complex, scale: float, what: str) -> float:
    if abs(z.imag) > 1e-9 * max(1.0, scale):
        raise ValueError(f"{what} has imaginary part {z.imag:.3e}; is the input Hermitian?")
    return float(z.real)


def probability(w, ops) -> float:
    """Generalized Born rule ``Tr[W (M_1 (x) ... (x) M_n)]``.

    ``ops`` maps party names to Choi operators (or is a sequence in layout order).
    """
    w = _as_process_matrix(w)
    m = _kron_all(_ops_in_order(w.parties, ops))
    val = complex(np.sum(w.entries * m.T))
    return _real(val, float(np.abs(w.entries).max(initial=0.0)), "probability")


def vector_probability(v: ProcessVector, ops) -> float:
    """``<w|(M_1 (x) ... (x) M_n)|w>`` without forming the process matrix."""
    m = _kron_all(_ops_in_order(v.parties, ops))
    val = complex(np.vdot(v.entries, m @ v.entries))
    return _real(val, float(np.vdot(v.entries, v.entries).real), "probability")


def outcome_probabilities(w, stacks: Sequence[Sequence]) -> np.ndarray:
    """Probabilities for every combination drawn from per-party operator lists.

    ``stacks[k]`` is a list of operators for party ``k`` (layout order). Returns a
    real array of shape ``(len(stacks[0]), len(stacks[1]), ...)``; by
    multilinearity this contracts one party at a time.
    """
    w = _as_process_matrix(w)
    parties = w.parties
    if len(stacks) != len(parties):
        raise ValueError(f"expected {len(parties)} operator lists, got {len(stacks)}")
    mats = [np.stack([_coerce_op(p, op) for op in stack]) for p, stack in zip(parties, stacks)]
    total = w.entries.shape[0]
    x = w.entries.reshape(1, total, total)
    for p, s in zip(parties, mats):
        b = x.shape[0]
        rest = x.shape[1] // p.dim
        x = x.reshape(b, p.dim, rest, p.dim, rest)
        # Tr[W M] = sum_{r,c} W[r, c] M[c, r]
        x = np.einsum("bricj,mcr->bmij", x, s, optimize=True).reshape(b * s.shape[0], rest, rest)
    out = x.reshape([len(s) for s in stacks])
    if np.abs(out.imag).max(initial=0.0) > 1e-9 * max(1.0, float(np.abs(w.entries).max(initial=0.0))):
        raise ValueError("complex probabilities; is the process matrix Hermitian?")
    return out.real


# -- validity ---------------------------------------------------------------------------

@dataclass
class ValidityReport:
    psd_min_eigenvalue: float
    trace_value: float
    expected_trace: float
    worst_normalization_deviation: float
    sampled_deviation: float
    verdict: bool
    psd_tol: float
    normalization_tol: float
    violating_tuple: dict | None = None
    samples: int = 0

    def __bool__(self) -> bool:
        return self.verdict

    def to_dict(self) -> dict:
        doc = {
            "verdict": bool(self.verdict),
            "psd_min_eigenvalue": float(self.psd_min_eigenvalue),
            "trace_value": float(self.trace_value),
            "expected_trace": float(self.expected_trace),
            "worst_normalization_deviation": float(self.worst_normalization_deviation),
            "sampled_deviation": float(self.sampled_deviation),
            "samples": int(self.samples),
            "psd_tol": float(self.psd_tol),
            "normalization_tol": float(self.normalization_tol),
            "violating_tuple": None,
        }
        if self.violating_tuple is not None:
            doc["violating_tuple"] = {name: op.to_dict() for name, op in self.violating_tuple.items()}
        return doc


def _party_spanning_set(p: Party) -> list[ChoiOperator]:
    ops = cptp_affine_spanning_set(p.d_in, p.d_out, "in", "out")
    return [_wrap_for(p, op.matrix) for op in ops]


def _wrap_for(p: Party, m) -> ChoiOperator:
    return ChoiOperator.from_matrix(m, p.in_parts, p.out_parts)


def _random_tuple(parties: Sequence[Party], rng) -> dict[str, ChoiOperator]:
    return {p.name: _wrap_for(p, random_cptp(p.d_in, p.d_out, rng).matrix) for p in parties}


def sample_normalization_deviation(w, samples: int, seed) -> tuple[float, dict | None]:
    """Worst ``|p - 1|`` over random CPTP tuples, and the tuple achieving it."""
    w = _as_process_matrix(w)
    rng = as_generator(seed)
    worst, worst_tuple = 0.0, None
    for _ in range(samples):
        ops = _random_tuple(w.parties, rng)
        dev = abs(probability(w, ops) - 1.0)
        if worst_tuple is None or dev > worst:
            worst, worst_tuple = dev, ops
    return worst, worst_tuple


def is_valid_process(
    w,
    psd_tol: float = PSD_TOL,
    normalization_tol: float = NORMALIZATION_TOL,
    samples: int = 100,
    seed=0,
) -> ValidityReport:
    """Certify ``W >= 0`` and ``Tr[W (M_1 (x) ... )] = 1`` for all CPTP ``M_k``.

    The normalization constraint is checked on the Cartesian product of each
    party's CPTP affine spanning set, which is exact because the Born rule is
    affine in every argument. ``samples`` random CPTP tuples are evaluated as an
    independent cross-check.
    """
    w = _as_process_matrix(w)
    herm = w.mat.hermiticity_residual()
    min_eig = w.mat.min_eigenvalue()
    trace_value = w.mat.trace().real
    expected_trace = float(np.prod([p.d_out for p in w.parties]))

    spans = [_party_spanning_set(p) for p in w.parties]
    probs = outcome_probabilities(w, spans)
    devs = np.abs(probs - 1.0)
    worst_idx = np.unravel_index(int(np.argmax(devs)), devs.shape)
    worst = float(devs[worst_idx])

    sampled, sampled_tuple = (0.0, None)
    if samples:
        sampled, sampled_tuple = sample_normalization_deviation(w, samples, seed)

    violating = None
    if worst > normalization_tol or sampled > normalization_tol:
        if worst >= sampled:
            violating = {p.name: spans[k][i] for k, (p, i) in enumerate(zip(w.parties, worst_idx))}
        else:
            violating = sampled_tuple

    verdict = (
        herm <= psd_tol
        and min_eig >= -psd_tol
        and abs(trace_value - expected_trace) <= normalization_tol * max(1.0, expected_trace)
        and worst <= normalization_tol
        and sampled <= normalization_tol
    )
    return ValidityReport(
        psd_min_eigenvalue=min_eig,
        trace_value=trace_value,
        expected_trace=expected_trace,
        worst_normalization_deviation=worst,
        sampled_deviation=sampled,
        verdict=bool(verdict),
        psd_tol=psd_tol,
        normalization_tol=normalization_tol,
        violating_tuple=violating,
        samples=samples,
    )


def is_valid_process_vector(v: ProcessVector, **kwargs) -> ValidityReport:
    return is_valid_process(v.to_matrix(), **kwargs)


# -- constructors -----------------------------------------------------------------------

def _canonical(vec: LabeledVector, parties: Sequence[Party]) -> ProcessVector:
    parties = tuple(parties)
    return ProcessVector(permute_vector(vec, _layout_of(parties).labels), parties)


def markovian_unitary_process(
    order: Sequence[str],
    unitaries: Sequence,
    layout: Sequence[str] | None = None,
    past: str = "P",
    future: str = "F",
) -> ProcessVector:
    """``(x)_j |U_j>>`` from the output of the ``j``-th party in ``order`` to the input
    of the next, with ``past`` first and ``future`` last.

    ``layout`` fixes the party order of the result (defaults to ``sorted(order)``),
    so that processes with different causal orders share a layout.
    """
    order = list(order)
    mats = [np.asarray(u, dtype=complex) for u in unitaries]
    if len(mats) != len(order) + 1:
        raise ValueError(f"{len(order)} parties need {len(order) + 1} unitaries, got {len(mats)}")
    for u in mats:
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f"unitaries must be square, got shape {u.shape}")
    middle = sorted(order) if layout is None else list(layout)
    if sorted(middle) != sorted(order):
        raise ValueError(f"layout {middle} is not a permutation of order {order}")

    chain = [past] + order + [future]
    d_in = {past: 1}
    d_out = {future: 1}
    for j, u in enumerate(mats):
        d_out[chain[j]] = u.shape[0]
        d_in[chain[j + 1]] = u.shape[0]
    parties = [Party.simple(name, d_in[name], d_out[name]) for name in [past] + middle + [future]]

    legs = []
    for j, u in enumerate(mats):
        src, dst = chain[j], chain[j + 1]
        legs.append(double_ket(u, f"{src}_O", f"{dst}_I"))
    return _canonical(tensor_vectors(*legs), parties)


def _ket(label: str, d: int, index: int) -> LabeledVector:
    e = np.zeros(d)
    e[index] = 1
    return LabeledVector(SpaceLayout(((label, d),)), e)


def switch3(psi) -> ProcessVector:
    """Quantum switch with fixed target state ``psi`` and control ``|+>`` absorbed
    into ``F = (F_c, F_t)``."""
    psi = np.asarray(psi, dtype=complex).ravel()
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise ValueError(f"target state must be normalized, has norm {np.linalg.norm(psi)}")
    d = psi.size
    one = np.eye(d)
    parties = [
        Party.simple("A", d, d),
        Party.simple("B", d, d),
        Party("F", (("F_c", 2), ("F_t", d)), ()),
    ]
    ab = tensor_vectors(
        _ket("F_c", 2, 0),
        LabeledVector(SpaceLayout((("A_I", d),)), psi),
        double_ket(one, "A_O", "B_I"),
        double_ket(one, "B_O", "F_t"),
    )
    ba = tensor_vectors(
        _ket("F_c", 2, 1),
        LabeledVector(SpaceLayout((("B_I", d),)), psi),
        double_ket(one, "B_O", "A_I"),
        double_ket(one, "A_O", "F_t"),
    )
    order = _layout_of(parties).labels
    vec = permute_vector(ab, order) + permute_vector(ba, order)
    return ProcessVector(vec * (1 / np.sqrt(2)), tuple(parties))


def switch4_branches(d: int = 2) -> tuple[ProcessVector, ProcessVector]:
    """The two (individually invalid) branches of the unitary switch."""
    one = np.eye(d)
    parties = [
        Party("P", (), (("P_c", 2), ("P_t", d))),
        Party.simple("A", d, d),
        Party.simple("B", d, d),
        Party("F", (("F_c", 2), ("F_t", d)), ()),
    ]
    ab = tensor_vectors(
        _ket("P_c", 2, 0), _ket("F_c", 2, 0),
        double_ket(one, "P_t", "A_I"),
        double_ket(one, "A_O", "B_I"),
        double_ket(one, "B_O", "F_t"),
    )
    ba = tensor_vectors(
        _ket("P_c", 2, 1), _ket("F_c", 2, 1),
        double_ket(one, "P_t", "B_I"),
        double_ket(one, "B_O", "A_I"),
        double_ket(one, "A_O", "F_t"),
    )
    return _canonical(ab, parties), _canonical(ba, parties)


def switch4(d: int = 2) -> ProcessVector:
    """Unitary quantum switch with past ``P = (P_c, P_t)`` and future ``F = (F_c, F_t)``."""
    ab, ba = switch4_branches(d)
    return ab + ba


def superpose(w1: ProcessVector, w2: ProcessVector, alpha: complex, beta: complex) -> ProcessVector:
    """``alpha |w1> + beta |w2>``; no validity judgment is made."""
    _check_same_parties(w1.parties, w2.parties)
    if alpha == 0 or beta == 0:
        raise ValueError("superposition amplitudes must both be nonzero")
    return w1 * alpha + w2 * beta


def _is_endpoint(p: Party) -> bool:
    return p.d_in == 1 or p.d_out == 1


def reduce_with_identity(v: ProcessVector, keep: Iterable[str]) -> ProcessVector:
    """Contract every party outside ``keep`` with ``<<1|`` on its (input, output) pair.

    Endpoint parties (trivial input or trivial output) are always kept.
    """
    keep = set(keep)
    names = {p.name for p in v.parties}
    unknown = keep - names
    if unknown:
        raise KeyError(f"unknown parties {sorted(unknown)}")
    vec = v.vec
    kept = []
    for p in v.parties:
        if p.name in keep or _is_endpoint(p):
            kept.append(p)
            continue
        if p.d_in != p.d_out:
            raise ValueError(f"party {p.name!r} has d_in={p.d_in} != d_out={p.d_out}; cannot insert identity")
        others = [l for l in vec.layout.labels if l not in p.labels]
        vec = permute_vector(vec, others + list(p.labels))
        t = vec.entries.reshape(-1, p.d_in, p.d_out)
        vec = LabeledVector(vec.layout.without(p.labels), np.einsum("rjj->r", t))
    return _canonical(vec, kept)


def trace_out_subsystem(w, labels: Iterable[str]) -> ProcessMatrix:
    w = _as_process_matrix(w)
    labels = list(labels)
    mat = partial_trace(w.mat, labels)
    drop = set(labels)
    parties = tuple(
        Party(p.name,
              tuple(s for s in p.in_parts if s[0] not in drop),
              tuple(s for s in p.out_parts if s[0] not in drop))
        for p in w.parties
    )
    return ProcessMatrix(mat, parties)


# -- signalling -------------------------------------------------------------------------

@dataclass
class SignallingResult:
    """Outcome of a signalling search. ``found=False`` only means none was found."""

    found: bool
    difference: float
    source: str
    targets: tuple[str, ...]
    witness: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.found


def _replace_channel(p: Party, k: int) -> ChoiOperator:
    state = np.zeros((p.d_out, p.d_out))
    state[k, k] = 1
    return _wrap_for(p, np.kron(np.eye(p.d_in), state))


def _instrument_for(p: Party, inst) -> list[ChoiOperator]:
    return [_wrap_for(p, o.matrix) for o in inst.outcomes]


def _marginal_gap(w: ProcessMatrix, source: str, targets, src_pair, target_insts, others) -> float:
    stacks = []
    for p in w.parties:
        if p.name == source:
            stacks.append(src_pair)
        elif p.name in targets:
            stacks.append(target_insts[p.name])
        else:
            stacks.append([others[p.name]])
    probs = outcome_probabilities(w, stacks)
    src_axis = [p.name for p in w.parties].index(source)
    probs = np.moveaxis(probs, src_axis, 0)
    return float(np.abs(probs[0] - probs[1]).max(initial=0.0))


def can_signal(
    w,
    source: str,
    targets: Iterable[str],
    probes: int = 50,
    seed=0,
    tol: float = 1e-9,
) -> SignallingResult:
    """Search for a change in the targets' joint outcome distribution induced by
    the source's choice of operation.

    A fixed family (source prepares computational basis states, targets measure
    in the computational basis, everyone else depolarizes) is tried first, then
    ``probes`` random draws of source channel pairs, target instruments and
    background channels. One-sided: ``found=False`` is not a proof of no-signalling.
    """
    w = _as_process_matrix(w)
    targets = tuple(targets)
    src = w.party(source)
    tparties = [w.party(t) for t in targets]
    if source in targets:
        raise ValueError("source cannot be among the targets")
    rng = as_generator(seed)
    best = SignallingResult(False, 0.0, source, targets)

    def consider(gap, witness):
        nonlocal best
        if gap > best.difference:
            best = SignallingResult(gap > tol, gap, source, targets, witness)

    bystanders = [p for p in w.parties if p.name != source and p.name not in targets]

    if src.d_out > 1:
        depol = {p.name: _wrap_for(p, choi_depolarizing(p.d_in, p.d_out).matrix) for p in bystanders}
        insts = {
            p.name: _instrument_for(p, measure_prepare_instrument(p.d_in, np.eye(p.d_out) / p.d_out))
            for p in tparties
        }
        for i, j in itertools.combinations(range(src.d_out), 2):
            pair = [_replace_channel(src, i), _replace_channel(src, j)]
            consider(_marginal_gap(w, source, targets, pair, insts, depol),
                     {"kind": "basis", "prepared": [i, j]})

    for n in range(probes):
        pair = [_wrap_for(src, random_cptp(src.d_in, src.d_out, rng).matrix) for _ in range(2)]
        insts = {
            p.name: _instrument_for(p, random_instrument(p.d_in, p.d_out, max(2, p.d_in), rng))
            for p in tparties
        }
        others = {p.name: _wrap_for(p, random_cptp(p.d_in, p.d_out, rng).matrix) for p in bystanders}
        consider(_marginal_gap(w, source, targets, pair, insts, others), {"kind": "random", "probe": n})
    return best


# -- serialization ----------------------------------------------------------------------

def process_to_dict(w) -> dict:
    if isinstance(w, ProcessVector):
        kind, data = "vector", operator_to_dict(w.vec.as_operator())
    else:
        kind, data = "matrix", operator_to_dict(w.mat)
    return {"parties": [p.to_dict() for p in w.parties], "kind": kind, "data": data}


def process_from_dict(doc: dict):
    for key in ("parties", "kind", "data"):
        if key not in doc:
            raise ValueError(f"process document missing field {key!r}")
    parties = tuple(Party.from_dict(p) for p in doc["parties"])
    op = operator_from_dict(doc["data"])
    if doc["kind"] == "vector":
        if op.col_layout.total != 1:
            raise ValueError("field 'data' of a vector process must have a trivial column layout")
        return ProcessVector(LabeledVector(op.row_layout, op.entries[:, 0]), parties)
    if doc["kind"] == "matrix":
        return ProcessMatrix(op, parties)
    raise ValueError(f"field 'kind' must be 'vector' or 'matrix', got {doc['kind']!r}")
