"""Labeled dense complex linear algebra.

Operators carry an ordered list of ``(label, dim)`` subsystems for their rows
and columns. The leftmost subsystem is the slowest-varying index, matching
``numpy.kron``.
"""
from __future__ import annotations

import json
import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-10

__all__ = [
    "DEFAULT_TOL",
    "SpaceLayout",
    "LabeledOperator",
    "LabeledVector",
    "PAULI_I",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "HADAMARD",
    "PAULIS",
    "tensor",
    "tensor_vectors",
    "partial_trace",
    "permute_subsystems",
    "permute_vector",
    "relabel",
    "double_ket",
    "choi_of_kraus",
    "identity",
    "operator_to_json",
    "operator_from_json",
    "operator_to_dict",
    "operator_from_dict",
]


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = (PAULI_X + PAULI_Z) / np.sqrt(2)
PAULIS = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}

for _m in (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, HADAMARD):
    _m.setflags(write=False)


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered tuple of named subsystems ``((label, dim), ...)``."""

    subsystems: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        subs = tuple((str(label), int(dim)) for label, dim in self.subsystems)
        labels = [label for label, _ in subs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate subsystem labels in {labels}")
        for label, dim in subs:
            if dim < 1:
                raise ValueError(f"subsystem {label!r} has dimension {dim} < 1")
        object.__setattr__(self, "subsystems", subs)

    @classmethod
    def of(cls, *pairs) -> "SpaceLayout":
        return cls(tuple(pairs))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.subsystems)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.subsystems else 1

    def dim(self, label: str) -> int:
        return self.dims[self.index(label)]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown subsystem label {label!r}; have {self.labels}") from None

    def __contains__(self, label) -> bool:
        return label in self.labels

    def __len__(self) -> int:
        return len(self.subsystems)

    def __add__(self, other: "SpaceLayout") -> "SpaceLayout":
        return SpaceLayout(self.subsystems + other.subsystems)

    def without(self, labels: Iterable[str]) -> "SpaceLayout":
        drop = set(labels)
        return SpaceLayout(tuple(s for s in self.subsystems if s[0] not in drop))

    def reordered(self, labels: Sequence[str]) -> "SpaceLayout":
        return SpaceLayout(tuple((label, self.dim(label)) for label in labels))


def _as_layout(layout) -> SpaceLayout:
    if isinstance(layout, SpaceLayout):
        return layout
    return SpaceLayout(tuple(tuple(s) for s in layout))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LabeledOperator:
    """Dense complex matrix with labeled row and column subsystems."""

    row_layout: SpaceLayout
    col_layout: SpaceLayout
    entries: np.ndarray

    def __post_init__(self):
        row = _as_layout(self.row_layout)
        col = _as_layout(self.col_layout)
        entries = _frozen(self.entries)
        if entries.ndim != 2 or entries.shape != (row.total, col.total):
            raise ValueError(
                f"entries of shape {entries.shape} do not match layouts "
                f"{row.total}x{col.total}"
            )
        object.__setattr__(self, "row_layout", row)
        object.__setattr__(self, "col_layout", col)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def square(cls, layout, entries) -> "LabeledOperator":
        layout = _as_layout(layout)
        return cls(layout, layout, entries)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def is_square(self) -> bool:
        return self.row_layout == self.col_layout

    def _like(self, entries, row=None, col=None) -> "LabeledOperator":
        return LabeledOperator(
            self.row_layout if row is None else row,
            self.col_layout if col is None else col,
            entries,
        )

    # conjugations are first-class: the Choi transpose is easy to get wrong
    def conj(self) -> "LabeledOperator":
        return self._like(self.entries.conj())

    def transpose(self) -> "LabeledOperator":
        return self._like(self.entries.T, row=self.col_layout, col=self.row_layout)

    def dagger(self) -> "LabeledOperator":
        return self._like(self.entries.conj().T, row=self.col_layout, col=self.row_layout)

    @property
    def T(self) -> "LabeledOperator":
        return self.transpose()

    @property
    def H(self) -> "LabeledOperator":
        return self.dagger()

    def trace(self) -> complex:
        self._require_square("trace")
        return complex(np.trace(self.entries))

    def _require_square(self, what: str):
        if self.row_layout.dims != self.col_layout.dims:
            raise ValueError(f"{what} requires a square operator")

    def hermiticity_residual(self) -> float:
        self._require_square("hermiticity check")
        return float(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = DEFAULT_TOL) -> bool:
        return self.hermiticity_residual() <= tol

    def unitarity_residual(self) -> float:
        self._require_square("unitarity check")
        m = self.entries
        return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])), initial=0.0))

    def is_unitary(self, tol: float = DEFAULT_TOL) -> bool:
        return self.unitarity_residual() <= tol

    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue of the Hermitian part."""
        self._require_square("eigenvalue check")
        herm = (self.entries + self.entries.conj().T) / 2
        return float(np.linalg.eigvalsh(herm)[0])

    def is_psd(self, tol: float = DEFAULT_TOL) -> bool:
        return self.is_hermitian(tol) and self.min_eigenvalue() >= -tol

    def __matmul__(self, other: "LabeledOperator") -> "LabeledOperator":
        if self.col_layout.dims != other.row_layout.dims:
            raise ValueError("dimension mismatch in operator product")
        return LabeledOperator(self.row_layout, other.col_layout, self.entries @ other.entries)

    def __add__(self, other: "LabeledOperator") -> "LabeledOperator":
        self._check_same(other)
        return self._like(self.entries + other.entries)

    def __sub__(self, other: "LabeledOperator") -> "LabeledOperator":
        self._check_same(other)
        return self._like(self.entries - other.entries)

    def __mul__(self, scalar) -> "LabeledOperator":
        return self._like(self.entries * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "LabeledOperator":
        return self._like(self.entries / complex(scalar))

    def __neg__(self) -> "LabeledOperator":
        return self._like(-self.entries)

    def _check_same(self, other: "LabeledOperator"):
        if self.row_layout != other.row_layout or self.col_layout != other.col_layout:
            raise ValueError("operators have different layouts")

    def allclose(self, other: "LabeledOperator", atol: float = DEFAULT_TOL) -> bool:
        return (
            self.row_layout == other.row_layout
            and self.col_layout == other.col_layout
            and bool(np.max(np.abs(self.entries - other.entries), initial=0.0) <= atol)
        )

    def __repr__(self) -> str:
        return f"LabeledOperator(rows={self.row_layout.subsystems}, cols={self.col_layout.subsystems})"


@dataclass(frozen=True, eq=False)
class LabeledVector:
    """Dense complex column vector with labeled subsystems."""

    layout: SpaceLayout
    entries: np.ndarray

    def __post_init__(self):
        layout = _as_layout(self.layout)
        entries = _frozen(np.ravel(self.entries))
        if entries.shape != (layout.total,):
            raise ValueError(f"vector of length {entries.size} does not match layout {layout.total}")
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "entries", entries)

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def conj(self) -> "LabeledVector":
        return LabeledVector(self.layout, self.entries.conj())

    def inner(self, other: "LabeledVector") -> complex:
        """``<self|other>``."""
        if self.layout.dims != other.layout.dims:
            raise ValueError("dimension mismatch in inner product")
        return complex(np.vdot(self.entries, other.entries))

    def outer(self) -> LabeledOperator:
        """The projector-like operator ``|v><v|``."""
        return LabeledOperator.square(self.layout, np.outer(self.entries, self.entries.conj()))

    def as_operator(self) -> LabeledOperator:
        return LabeledOperator(self.layout, SpaceLayout(), self.entries.reshape(-1, 1))

    def __add__(self, other: "LabeledVector") -> "LabeledVector":
        if self.layout != other.layout:
            raise ValueError("vectors have different layouts")
        return LabeledVector(self.layout, self.entries + other.entries)

    def __mul__(self, scalar) -> "LabeledVector":
        return LabeledVector(self.layout, self.entries * complex(scalar))

    __rmul__ = __mul__

    def allclose(self, other: "LabeledVector", atol: float = DEFAULT_TOL) -> bool:
        return self.layout == other.layout and bool(
            np.max(np.abs(self.entries - other.entries), initial=0.0) <= atol
        )

    def __repr__(self) -> str:
        return f"LabeledVector({self.layout.subsystems})"


def identity(layout) -> LabeledOperator:
    layout = _as_layout(layout)
    return LabeledOperator.square(layout, np.eye(layout.total))


def _check_disjoint(a: SpaceLayout, b: SpaceLayout):
    clash = set(a.labels) & set(b.labels)
    if clash:
        raise ValueError(f"label collision in tensor product: {sorted(clash)}")


def tensor(*ops: LabeledOperator) -> LabeledOperator:
    """Kronecker product; layouts concatenated in argument order."""
    if not ops:
        return LabeledOperator(SpaceLayout(), SpaceLayout(), np.ones((1, 1)))
    out = ops[0]
    for op in ops[1:]:
        _check_disjoint(out.row_layout, op.row_layout)
        _check_disjoint(out.col_layout, op.col_layout)
        out = LabeledOperator(
            out.row_layout + op.row_layout,
            out.col_layout + op.col_layout,
            np.kron(out.entries, op.entries),
        )
    return out


def tensor_vectors(*vecs: LabeledVector) -> LabeledVector:
    if not vecs:
        return LabeledVector(SpaceLayout(), np.ones(1))
    out = vecs[0]
    for v in vecs[1:]:
        _check_disjoint(out.layout, v.layout)
        out = LabeledVector(out.layout + v.layout, np.kron(out.entries, v.entries))
    return out


def partial_trace(a: LabeledOperator, labels: Iterable[str]) -> LabeledOperator:
    """Trace out the named subsystems, which must appear in both layouts."""
    labels = list(dict.fromkeys(labels))
    for label in labels:
        if label not in a.row_layout or label not in a.col_layout:
            raise KeyError(f"cannot trace {label!r}: not present in both layouts")
        if a.row_layout.dim(label) != a.col_layout.dim(label):
            raise ValueError(f"row/col dimension mismatch on traced label {label!r}")
    if not labels:
        return a
    nr, nc = len(a.row_layout), len(a.col_layout)
    if nr + nc > 2 * 26:
        raise ValueError("too many subsystems for partial_trace")
    letters = string.ascii_letters
    row_idx = list(letters[:nr])
    col_idx = list(letters[nr:nr + nc])
    for label in labels:
        col_idx[a.col_layout.index(label)] = row_idx[a.row_layout.index(label)]
    keep_row = [i for i, lab in zip(row_idx, a.row_layout.labels) if lab not in labels]
    keep_col = [i for i, lab in zip(col_idx, a.col_layout.labels) if lab not in labels]
    spec = "".join(row_idx) + "".join(col_idx) + "->" + "".join(keep_row) + "".join(keep_col)
    t = a.entries.reshape(a.row_layout.dims + a.col_layout.dims)
    out = np.einsum(spec, t)
    row = a.row_layout.without(labels)
    col = a.col_layout.without(labels)
    return LabeledOperator(row, col, out.reshape(row.total, col.total))


def _reorder(layout: SpaceLayout, new_order: Sequence[str]) -> tuple[SpaceLayout, list[int]]:
    order = [label for label in new_order if label in layout]
    perm = [layout.index(label) for label in order]
    return layout.reordered(order), perm


def permute_subsystems(a: LabeledOperator, new_order: Sequence[str]) -> LabeledOperator:
    """Reorder tensor factors; each layout is reordered by its labels in ``new_order``."""
    new_order = list(new_order)
    union = set(a.row_layout.labels) | set(a.col_layout.labels)
    if len(set(new_order)) != len(new_order) or set(new_order) != union:
        raise ValueError(f"{new_order} is not a permutation of {sorted(union)}")
    row, rperm = _reorder(a.row_layout, new_order)
    col, cperm = _reorder(a.col_layout, new_order)
    nr = len(rperm)
    t = a.entries.reshape(a.row_layout.dims + a.col_layout.dims)
    t = np.transpose(t, rperm + [nr + p for p in cperm])
    return LabeledOperator(row, col, t.reshape(row.total, col.total))


def permute_vector(v: LabeledVector, new_order: Sequence[str]) -> LabeledVector:
    new_order = list(new_order)
    if sorted(new_order) != sorted(v.layout.labels):
        raise ValueError(f"{new_order} is not a permutation of {list(v.layout.labels)}")
    layout, perm = _reorder(v.layout, new_order)
    t = np.transpose(v.entries.reshape(v.layout.dims), perm)
    return LabeledVector(layout, t.reshape(-1))


def relabel(a, mapping: dict[str, str]):
    """Rename subsystems of an operator or vector; unmapped labels are kept."""

    def _ren(layout: SpaceLayout) -> SpaceLayout:
        return SpaceLayout(tuple((mapping.get(lab, lab), d) for lab, d in layout.subsystems))

    if isinstance(a, LabeledVector):
        return LabeledVector(_ren(a.layout), a.entries)
    return LabeledOperator(_ren(a.row_layout), _ren(a.col_layout), a.entries)


def _entries(u) -> np.ndarray:
    return u.entries if isinstance(u, LabeledOperator) else np.asarray(u, dtype=complex)


def double_ket(u, out_label: str, in_label: str) -> LabeledVector:
    """Vectorize ``u`` as ``sum_j |j>^{out_label} (u|j>)^{in_label}``.

    ``out_label`` names the sending side (a party's output) and ``in_label`` the
    receiving side (the next party's input).
    """
    m = _entries(u)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"double_ket needs a square matrix, got shape {m.shape}")
    d = m.shape[0]
    # entry (j, i) = <i|u|j>
    return LabeledVector(SpaceLayout(((out_label, d), (in_label, d))), m.T.reshape(-1))


def choi_of_kraus(kraus, in_label: str = "in", out_label: str = "out") -> LabeledOperator:
    """Choi operator ``[sum_jk |j><k| (x) M(|j><k|)]^T`` on ``(in_label, out_label)``.

    The outer transpose means a unitary ``U`` maps to ``|U*>><<U*|``.
    """
    mats = [_entries(k) for k in kraus]
    if not mats:
        raise ValueError("empty Kraus list")
    shape = mats[0].shape
    if any(m.shape != shape for m in mats) or len(shape) != 2:
        raise ValueError(f"Kraus operators disagree on shape: {[m.shape for m in mats]}")
    d_out, d_in = shape
    layout = SpaceLayout(((in_label, d_in), (out_label, d_out)))
    # sum_i |K_i>><<K_i| with |K>> = sum_j |j> K|j>, then transpose
    vecs = np.stack([m.T.reshape(-1) for m in mats])
    choi = vecs.T @ vecs.conj()
    return LabeledOperator.square(layout, choi.T)


def operator_to_dict(a: LabeledOperator) -> dict:
    flat = a.entries.reshape(-1)
    return {
        "row_layout": [[label, dim] for label, dim in a.row_layout.subsystems],
        "col_layout": [[label, dim] for label, dim in a.col_layout.subsystems],
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    }


def operator_from_dict(doc: dict) -> LabeledOperator:
    try:
        row = SpaceLayout(tuple((str(l), int(d)) for l, d in doc["row_layout"]))
        col = SpaceLayout(tuple((str(l), int(d)) for l, d in doc["col_layout"]))
        pairs = np.asarray(doc["entries"], dtype=float)
    except KeyError as exc:
        raise ValueError(f"matrix document missing field {exc.args[0]!r}") from None
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("matrix document field 'entries' must be a list of [re, im] pairs")
    if pairs.shape[0] != row.total * col.total:
        raise ValueError(
            f"matrix document field 'entries' has {pairs.shape[0]} values, "
            f"expected {row.total * col.total}"
        )
    # assign parts directly; a + 1j*b does not preserve signed zeros
    entries = np.empty(pairs.shape[0], dtype=complex)
    entries.real = pairs[:, 0]
    entries.imag = pairs[:, 1]
    entries = entries.reshape(row.total, col.total)
    return LabeledOperator(row, col, entries)


def operator_to_json(a: LabeledOperator, **kwargs) -> str:
    return json.dumps(operator_to_dict(a), **kwargs)


def operator_from_json(text: str) -> LabeledOperator:
    return operator_from_dict(json.loads(text))
