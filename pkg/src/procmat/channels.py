"""CP maps and instruments in Choi form, random sampling, unitary superpositions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .tensor import (
    DEFAULT_TOL,
    LabeledOperator,
    SpaceLayout,
    choi_of_kraus,
    operator_from_dict,
    operator_to_dict,
    partial_trace,
    relabel,
)

__all__ = [
    "ChoiOperator",
    "CPTPCheck",
    "Instrument",
    "as_generator",
    "is_cptp",
    "random_unitary",
    "random_isometry",
    "random_cptp",
    "random_density_matrix",
    "hermitian_basis",
    "cptp_affine_spanning_set",
    "choi_unitary",
    "choi_identity",
    "choi_prepare",
    "choi_discard",
    "choi_depolarizing",
    "measure_prepare_instrument",
    "random_instrument",
    "UnitarityScan",
    "amplitude_grid",
    "linear_combination_unitarity",
]


def as_generator(seed) -> np.random.Generator:
    """Accept a Generator, SeedSequence or integer seed. ``None`` is refused."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("an explicit seed or Generator is required")
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class ChoiOperator:
    """Choi operator of a CP map, ordered as (input subsystems, output subsystems).

    Either side may be empty: a state preparation has no input, a discard
    has no output.
    """

    op: LabeledOperator
    in_labels: tuple[str, ...]
    out_labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "in_labels", tuple(self.in_labels))
        object.__setattr__(self, "out_labels", tuple(self.out_labels))
        if not self.op.is_square:
            raise ValueError("Choi operator must be square over its layout")
        if self.op.row_layout.labels != self.in_labels + self.out_labels:
            raise ValueError(
                f"layout {self.op.row_layout.labels} is not inputs {self.in_labels} "
                f"followed by outputs {self.out_labels}"
            )

    @classmethod
    def from_matrix(cls, entries, in_parts, out_parts) -> "ChoiOperator":
        """Wrap a raw matrix given ``[(label, dim), ...]`` for inputs and outputs."""
        in_parts = tuple((str(l), int(d)) for l, d in in_parts)
        out_parts = tuple((str(l), int(d)) for l, d in out_parts)
        op = LabeledOperator.square(SpaceLayout(in_parts + out_parts), entries)
        return cls(op, tuple(l for l, _ in in_parts), tuple(l for l, _ in out_parts))

    @property
    def layout(self) -> SpaceLayout:
        return self.op.row_layout

    @property
    def matrix(self) -> np.ndarray:
        return self.op.entries

    @property
    def in_dim(self) -> int:
        return int(np.prod([self.layout.dim(l) for l in self.in_labels], dtype=np.int64))

    @property
    def out_dim(self) -> int:
        return int(np.prod([self.layout.dim(l) for l in self.out_labels], dtype=np.int64))

    def input_marginal(self) -> np.ndarray:
        """``Tr_out M`` as a plain matrix on the input space."""
        return partial_trace(self.op, self.out_labels).entries

    def relabeled(self, in_labels: Sequence[str], out_labels: Sequence[str]) -> "ChoiOperator":
        mapping = dict(zip(self.in_labels + self.out_labels, tuple(in_labels) + tuple(out_labels)))
        return ChoiOperator(relabel(self.op, mapping), tuple(in_labels), tuple(out_labels))

    def __add__(self, other: "ChoiOperator") -> "ChoiOperator":
        return ChoiOperator(self.op + other.op, self.in_labels, self.out_labels)

    def to_dict(self) -> dict:
        doc = operator_to_dict(self.op)
        doc["in_dim"] = self.in_dim
        doc["out_dim"] = self.out_dim
        doc["in_labels"] = list(self.in_labels)
        doc["out_labels"] = list(self.out_labels)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ChoiOperator":
        op = operator_from_dict(doc)
        labels = op.row_layout.labels
        if "in_labels" in doc:
            n_in = len(doc["in_labels"])
        else:
            # without explicit labels, split the layout so the input side has in_dim
            n_in, acc = 0, 1
            while acc < int(doc["in_dim"]) and n_in < len(labels):
                acc *= op.row_layout.dims[n_in]
                n_in += 1
        choi = cls(op, labels[:n_in], labels[n_in:])
        for key in ("in_dim", "out_dim"):
            if key in doc and int(doc[key]) != getattr(choi, key):
                raise ValueError(f"field {key!r}={doc[key]} disagrees with the layout")
        return choi


@dataclass(frozen=True)
class CPTPCheck:
    ok: bool
    min_eigenvalue: float
    tp_residual: float
    hermiticity_residual: float
    tol: float

    def __bool__(self) -> bool:
        return self.ok


def is_cptp(m: ChoiOperator, tol: float = DEFAULT_TOL) -> CPTPCheck:
    """CP and TP predicates with diagnostics.

    The TP residual is the max-abs entry of ``Tr_out M - 1_in``.
    """
    herm = m.op.hermiticity_residual()
    min_eig = m.op.min_eigenvalue()
    tp = float(np.max(np.abs(m.input_marginal() - np.eye(m.in_dim)), initial=0.0))
    ok = herm <= tol and min_eig >= -tol and tp <= tol
    return CPTPCheck(ok, min_eig, tp, herm, tol)


@dataclass(frozen=True, eq=False)
class Instrument:
    """Outcome-indexed CP maps whose sum is CPTP."""

    outcomes: tuple[ChoiOperator, ...]

    def __post_init__(self):
        outcomes = tuple(self.outcomes)
        if not outcomes:
            raise ValueError("an instrument needs at least one outcome")
        layout = outcomes[0].layout
        if any(o.layout != layout for o in outcomes):
            raise ValueError("instrument outcomes must share a layout")
        object.__setattr__(self, "outcomes", outcomes)

    def total(self) -> ChoiOperator:
        out = self.outcomes[0]
        for o in self.outcomes[1:]:
            out = out + o
        return out

    def is_valid(self, tol: float = DEFAULT_TOL) -> bool:
        return all(o.op.is_psd(tol) for o in self.outcomes) and bool(is_cptp(self.total(), tol))

    def __len__(self) -> int:
        return len(self.outcomes)


def random_unitary(d: int, seed) -> np.ndarray:
    """Haar-random ``d x d`` unitary (QR of a complex Ginibre matrix, phase-fixed)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    rng = as_generator(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def random_isometry(d_in: int, d_out: int, seed) -> np.ndarray:
    """Haar-random isometry ``C^d_in -> C^d_out`` (first columns of a Haar unitary)."""
    if d_out < d_in:
        raise ValueError("an isometry needs d_out >= d_in")
    return random_unitary(d_out, seed)[:, :d_in]


def random_density_matrix(d: int, seed) -> np.ndarray:
    """Hilbert-Schmidt random density matrix."""
    rng = as_generator(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_cptp(d_in: int, d_out: int, seed, in_label: str = "in", out_label: str = "out") -> ChoiOperator:
    """Random channel: Haar isometry into ``out (x) env`` with ``d_env = d_in*d_out``,
    then the environment is traced out."""
    if d_in < 1 or d_out < 1:
        raise ValueError("dimensions must be >= 1")
    d_env = d_in * d_out
    iso = random_isometry(d_in, d_out * d_env, seed).reshape(d_out, d_env, d_in)
    kraus = [iso[:, e, :] for e in range(d_env)]
    return _choi_from_kraus(kraus, in_label, out_label)


def _choi_from_kraus(kraus, in_label, out_label) -> ChoiOperator:
    d_out, d_in = np.asarray(kraus[0]).shape
    op = choi_of_kraus(kraus, in_label, out_label)
    # drop trivial subsystems so preparation / discard maps have one-sided layouts
    parts_in = ((in_label, d_in),) if d_in > 1 else ()
    parts_out = ((out_label, d_out),) if d_out > 1 else ()
    return ChoiOperator.from_matrix(op.entries, parts_in, parts_out)


def choi_unitary(u, in_label: str = "in", out_label: str = "out") -> ChoiOperator:
    """Choi of ``rho -> u rho u^dag``, equal to ``|u*>><<u*|``."""
    return _choi_from_kraus([np.asarray(u, dtype=complex)], in_label, out_label)


def choi_identity(d: int, in_label: str = "in", out_label: str = "out") -> ChoiOperator:
    return choi_unitary(np.eye(d), in_label, out_label)


def choi_prepare(rho, label: str = "out") -> ChoiOperator:
    """Preparation of ``rho`` from a trivial input; the Choi operator is ``rho^T``."""
    rho = np.asarray(rho, dtype=complex)
    return ChoiOperator.from_matrix(rho.T, (), ((label, rho.shape[0]),))


def choi_discard(d: int, label: str = "in") -> ChoiOperator:
    """Trace map onto a trivial output; the Choi operator is the identity."""
    return ChoiOperator.from_matrix(np.eye(d), ((label, d),), ())


def choi_depolarizing(d_in: int, d_out: int, in_label: str = "in", out_label: str = "out") -> ChoiOperator:
    """Completely depolarizing map, ``1 (x) 1 / d_out``."""
    parts_in = ((in_label, d_in),) if d_in > 1 else ()
    parts_out = ((out_label, d_out),) if d_out > 1 else ()
    return ChoiOperator.from_matrix(np.eye(d_in * d_out) / d_out, parts_in, parts_out)


def _split_parts(in_label, d_in, out_label, d_out):
    parts_in = ((in_label, d_in),) if d_in > 1 else ()
    parts_out = ((out_label, d_out),) if d_out > 1 else ()
    return parts_in, parts_out


def measure_prepare_instrument(
    d_in: int, prepared, basis=None, in_label: str = "in", out_label: str = "out"
) -> Instrument:
    """Measure in ``basis`` (columns; default computational), then prepare ``prepared``.

    ``prepared`` is either one density matrix for every outcome or a list with
    one per outcome.
    """
    basis = np.eye(d_in, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    states = prepared if isinstance(prepared, (list, tuple)) else [prepared] * d_in
    states = [np.asarray(s, dtype=complex) for s in states]
    d_out = states[0].shape[0]
    parts_in, parts_out = _split_parts(in_label, d_in, out_label, d_out)
    outcomes = []
    for k in range(d_in):
        proj = np.outer(basis[:, k], basis[:, k].conj())
        outcomes.append(ChoiOperator.from_matrix(np.kron(proj.T, states[k].T), parts_in, parts_out))
    return Instrument(tuple(outcomes))


def random_instrument(
    d_in: int, d_out: int, n_outcomes: int, seed, in_label: str = "in", out_label: str = "out"
) -> Instrument:
    """Random instrument: Haar isometry into ``out (x) outcome (x) env``."""
    rng = as_generator(seed)
    d_env = d_in * d_out
    iso = random_isometry(d_in, d_out * n_outcomes * d_env, rng).reshape(d_out, n_outcomes, d_env, d_in)
    parts_in, parts_out = _split_parts(in_label, d_in, out_label, d_out)
    outcomes = []
    for a in range(n_outcomes):
        kraus = [iso[:, a, e, :] for e in range(d_env)]
        op = choi_of_kraus(kraus, in_label, out_label)
        outcomes.append(ChoiOperator.from_matrix(op.entries, parts_in, parts_out))
    return Instrument(tuple(outcomes))


def hermitian_basis(d: int, include_identity: bool = True) -> list[np.ndarray]:
    """Generalized Gell-Mann basis (optionally with the identity), each element
    scaled to unit operator norm."""
    mats = []
    if include_identity:
        mats.append(np.eye(d, dtype=complex))
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1
            asym = np.zeros((d, d), dtype=complex)
            asym[j, k], asym[k, j] = -1j, 1j
            mats.extend([sym, asym])
    for l in range(1, d):
        diag = np.zeros(d, dtype=complex)
        diag[:l] = 1
        diag[l] = -l
        mats.append(np.diag(diag) / l)
    return mats


def cptp_affine_spanning_set(
    d_in: int, d_out: int, in_label: str = "in", out_label: str = "out"
) -> list[ChoiOperator]:
    """CPTP Choi operators whose affine hull is ``{M = M^dag : Tr_out M = 1_in}``.

    The first element is the completely depolarizing map ``D``. Every other one is
    ``D + E (x) F / (2 d_out)`` for ``E`` running over a Hermitian basis of the
    input space and ``F`` over traceless Hermitian matrices of the output space,
    i.e. an even mixture of ``D`` with a measure-and-prepare map. The list has
    ``d_in^2 (d_out^2 - 1) + 1`` elements.
    """
    if d_in < 1 or d_out < 1:
        raise ValueError("dimensions must be >= 1")
    parts_in, parts_out = _split_parts(in_label, d_in, out_label, d_out)
    depol = np.eye(d_in * d_out, dtype=complex) / d_out
    out = [ChoiOperator.from_matrix(depol, parts_in, parts_out)]
    in_basis = hermitian_basis(d_in, include_identity=True)
    out_basis = hermitian_basis(d_out, include_identity=False)
    for e in in_basis:
        for f in out_basis:
            # ||E (x) F|| <= 1 so the unmixed map is PSD; mixing at 1/2 keeps it interior
            m = depol + np.kron(e, f) / (2 * d_out)
            out.append(ChoiOperator.from_matrix(m, parts_in, parts_out))
    return out


@dataclass
class UnitarityScan:
    """Result of scanning ``alpha*u1 + beta*u2`` over an amplitude grid."""

    amplitudes: list[tuple[complex, complex]]
    residuals: np.ndarray
    tol: float
    unitary: np.ndarray = field(init=False)

    def __post_init__(self):
        self.unitary = self.residuals <= self.tol

    @property
    def min_residual(self) -> float:
        return float(np.min(self.residuals)) if len(self.residuals) else float("inf")

    @property
    def unitary_points(self) -> list[tuple[complex, complex]]:
        return [a for a, ok in zip(self.amplitudes, self.unitary) if ok]

    @property
    def any_unitary(self) -> bool:
        return bool(np.any(self.unitary))


def amplitude_grid(n: int = 41, radius: float = 2.0, phase: float = np.pi / 4,
                   include_zero: bool = False) -> list[tuple[complex, complex]]:
    """``n x n`` grid ``(a, b e^{i phase})`` with ``a, b`` evenly spaced in ``[-radius, radius]``.

    Points with a zero amplitude are dropped unless ``include_zero``.
    """
    axis = np.linspace(-radius, radius, n)
    rot = np.exp(1j * phase)
    return [
        (complex(a), complex(b * rot))
        for a in axis
        for b in axis
        if include_zero or (a != 0 and b != 0)
    ]


def linear_combination_unitarity(
    u1, u2, grid: Iterable[tuple[complex, complex]], tol: float = DEFAULT_TOL
) -> UnitarityScan:
    """Spectral-norm residual ``||C^dag C - 1||`` of ``C = alpha u1 + beta u2`` per grid point."""
    u1 = np.asarray(u1, dtype=complex)
    u2 = np.asarray(u2, dtype=complex)
    if u1.shape != u2.shape or u1.ndim != 2 or u1.shape[0] != u1.shape[1]:
        raise ValueError(f"need square matrices of equal shape, got {u1.shape} and {u2.shape}")
    amps = [(complex(a), complex(b)) for a, b in grid]
    eye = np.eye(u1.shape[0])
    res = np.empty(len(amps))
    for i, (a, b) in enumerate(amps):
        c = a * u1 + b * u2
        res[i] = np.linalg.norm(c.conj().T @ c - eye, ord=2)
    return UnitarityScan(amps, res, tol)
