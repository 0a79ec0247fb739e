"""Dense complex linear algebra on named tensor factors.

Wires name the factors of a finite-dimensional tensor-product space.
States are density operators: Hermitian, positive semidefinite, with
positive trace. Traces need not equal 1, and nothing in this package
renormalizes a state behind the caller's back. A measurement is a finite
ordered family of operators ``L_i`` with ``sum_i L_i^dag L_i = Id``;
a unitary is the single-outcome special case.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TOL",
    "Tolerances",
    "configure_tolerances",
    "HilbertSpec",
    "Ket",
    "DensityOperator",
    "Measurement",
    "dagger",
    "frob_norm",
    "identity",
    "basis_ket",
    "projector",
    "haar_ket",
    "random_unitary",
    "tensor_product",
    "tensor_measurements",
    "apply_kraus",
    "outcome_probability",
    "partial_trace",
    "partial_trace_matrix",
    "lift_operator",
    "permute_wires",
    "permute_ket",
    "bipartition_ket",
    "proportional",
    "is_pure",
    "measure_z",
    "ID2",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "HADAMARD",
    "CNOT",
    "SWAP",
]


@dataclass
class Tolerances:
    """Numerical thresholds used by validation checks.

    ``complete``, ``herm`` and ``psd`` bound, relative to scale, how far a
    measurement may sit from completeness and a state from Hermitian
    positive semidefiniteness. Traces and probabilities at or below
    ``zero`` count as exactly zero.
    """

    complete: float = 1e-9
    herm: float = 1e-9
    psd: float = 1e-9
    zero: float = 1e-12


# Global tolerance pack. `configure_tolerances` (the CLI wires the
# MEASTREE_TOL environment variable to it) may adjust the validation
# entries once at startup; nothing mutates the pack afterwards.
TOL = Tolerances()


def configure_tolerances(value: float | None = None, *, zero: float | None = None) -> None:
    """Override the validation tolerances (completeness/hermiticity/psd).

    ``zero`` adjusts the is-it-exactly-zero threshold separately and is
    rarely needed.
    """
    if value is not None:
        v = float(value)
        if not (0 < v < 1):
            raise ValueError(f"tolerance must be in (0, 1), got {value!r}")
        TOL.complete = TOL.herm = TOL.psd = v
    if zero is not None:
        TOL.zero = float(zero)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def frob_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def basis_ket(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec: Sequence[complex] | np.ndarray) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    return np.outer(v, np.conj(v))


def haar_ket(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform unit vector."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary (QR of a Ginibre matrix, phases fixed)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


@dataclass(frozen=True)
class HilbertSpec:
    """Ordered tensor factors of a composite space, one per named wire.

    The empty spec is legal and describes the one-dimensional space, which
    is what a system with no ancilla wires lives next to.
    """

    factors: tuple[tuple[str, int], ...]

    @classmethod
    def of(cls, factors: Iterable[tuple[str, int]]) -> "HilbertSpec":
        fs = tuple((str(w), int(d)) for w, d in factors)
        wires = [w for w, _ in fs]
        if len(set(wires)) != len(wires):
            raise ValueError(f"duplicate wire ids in {wires}")
        for w, d in fs:
            if d < 1:
                raise ValueError(f"wire {w!r} has dimension {d} < 1")
        return cls(fs)

    @property
    def wires(self) -> tuple[str, ...]:
        return tuple(w for w, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def dim(self) -> int:
        return math.prod(self.dims) if self.factors else 1

    def dim_of(self, wire: str) -> int:
        for w, d in self.factors:
            if w == wire:
                return d
        raise ValueError(f"unknown wire {wire!r}")

    def index(self, wire: str) -> int:
        for i, (w, _) in enumerate(self.factors):
            if w == wire:
                return i
        raise ValueError(f"unknown wire {wire!r}")

    def restrict(self, wires: Iterable[str]) -> "HilbertSpec":
        """Sub-spec of the named wires, kept in this spec's order."""
        keep = set(wires)
        unknown = keep - set(self.wires)
        if unknown:
            raise ValueError(f"unknown wires {sorted(unknown)}")
        return HilbertSpec(tuple((w, d) for w, d in self.factors if w in keep))


@dataclass(frozen=True, eq=False)
class Ket:
    """Column vector together with the wire layout of the space it lives in."""

    vector: np.ndarray
    space: HilbertSpec

    @classmethod
    def of(cls, vector: Sequence[complex] | np.ndarray, space: HilbertSpec | None = None) -> "Ket":
        v = np.asarray(vector, dtype=complex).reshape(-1)
        if space is None:
            space = HilbertSpec.of([("q0", len(v))])
        if len(v) != space.dim:
            raise ValueError(f"vector has length {len(v)}, space has dimension {space.dim}")
        return cls(v, space)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def projector(self) -> np.ndarray:
        return projector(self.vector)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Unnormalized state: Hermitian, PSD, trace strictly positive.

    The constructor is trusting; ``DensityOperator.of`` validates. The
    zero matrix is never a valid state, so operations that can produce it
    (a probability-zero measurement outcome) signal that case explicitly
    instead of returning an instance.
    """

    matrix: np.ndarray
    space: HilbertSpec

    @classmethod
    def of(
        cls,
        matrix: Sequence[Sequence[complex]] | np.ndarray,
        space: HilbertSpec | None = None,
    ) -> "DensityOperator":
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if space is None:
            space = HilbertSpec.of([("q0", m.shape[0])])
        if m.shape[0] != space.dim:
            raise ValueError(f"matrix has dimension {m.shape[0]}, space has {space.dim}")
        scale = max(frob_norm(m), 1.0)
        if frob_norm(m - dagger(m)) > TOL.herm * scale:
            raise ValueError("matrix is not Hermitian within tolerance")
        eigs = np.linalg.eigvalsh((m + dagger(m)) / 2)
        if eigs.size and float(eigs[0]) < -TOL.psd * scale:
            raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {eigs[0]:.3e})")
        if m.trace().real <= TOL.zero:
            raise ValueError("trace must be strictly positive")
        return cls(m, space)

    def trace(self) -> float:
        return float(self.matrix.trace().real)

    def normalized(self) -> "DensityOperator":
        """Explicitly rescale to unit trace."""
        return DensityOperator(self.matrix / self.trace(), self.space)


@dataclass(frozen=True, eq=False)
class Measurement:
    """Ordered family of outcome operators with sum_i L_i^dag L_i = Id.

    Outcome labels are strings, unique within the family. Individual
    operators may be zero; only the completeness sum is constrained.
    The plain constructor trusts its input, ``Measurement.of`` validates.
    """

    outcomes: dict[str, np.ndarray]

    @classmethod
    def of(cls, outcomes: Mapping[str, np.ndarray] | Iterable[tuple[str, np.ndarray]]) -> "Measurement":
        items = list(outcomes.items()) if isinstance(outcomes, Mapping) else list(outcomes)
        if not items:
            raise ValueError("a measurement needs at least one outcome")
        labels = [str(l) for l, _ in items]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate outcome labels in {labels}")
        ops = [np.asarray(op, dtype=complex) for _, op in items]
        d = ops[0].shape[0] if ops[0].ndim == 2 else -1
        for label, op in zip(labels, ops):
            if op.ndim != 2 or op.shape != (d, d):
                raise ValueError(f"outcome {label!r} has shape {op.shape}, expected ({d}, {d})")
        m = cls(dict(zip(labels, ops)))
        defect = m.completeness_defect()
        if defect > TOL.complete:
            raise ValueError(f"not complete: ||sum L^dag L - Id||_F = {defect:.3e}")
        return m

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.outcomes)

    @property
    def dim(self) -> int:
        return next(iter(self.outcomes.values())).shape[0]

    def operator(self, label: str) -> np.ndarray:
        return self.outcomes[label]

    def completeness_defect(self) -> float:
        total = sum(dagger(op) @ op for op in self.outcomes.values())
        return frob_norm(total - identity(self.dim))


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; the first argument's indices are the major ones."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def tensor_measurements(measurements: Sequence[Measurement]) -> Measurement:
    """Tensor a sequence of measurements into one joint measurement.

    Outcome labels are joined with "|" in argument order, so constituent
    labels of a genuine (length >= 2) product must not contain "|". The
    joint family is complete whenever the factors are.
    """
    ms = list(measurements)
    if not ms:
        raise ValueError("need at least one measurement")
    if len(ms) > 1:
        for m in ms:
            for label in m.labels:
                if "|" in label:
                    raise ValueError(f"label {label!r} contains the reserved separator '|'")
    joint: dict[str, np.ndarray] = {}
    for combo in itertools.product(*(m.outcomes.items() for m in ms)):
        label = "|".join(l for l, _ in combo)
        op = combo[0][1]
        for _, factor in combo[1:]:
            op = np.kron(op, factor)
        joint[label] = np.asarray(op, dtype=complex)
    return Measurement.of(joint)


def apply_kraus(op: np.ndarray, rho: DensityOperator) -> DensityOperator | None:
    """Unnormalized post-measurement state ``L rho L^dag``.

    Returns None when the result is the zero matrix, i.e. the outcome has
    probability zero on this state.
    """
    out = op @ rho.matrix @ dagger(op)
    if frob_norm(out) <= TOL.zero * max(frob_norm(rho.matrix), 1.0):
        return None
    return DensityOperator(out, rho.space)


def outcome_probability(op: np.ndarray, rho: DensityOperator) -> float:
    """Born probability Tr(L rho L^dag) / Tr(rho) of one outcome operator."""
    t = rho.trace()
    if t <= TOL.zero:
        raise ValueError("state has zero trace")
    p = float(np.trace(op @ rho.matrix @ dagger(op)).real) / t
    return _clamp_probability(p)


def _clamp_probability(p: float, slack: float = 1e-9) -> float:
    if -slack <= p < 0.0:
        return 0.0
    if 1.0 < p <= 1.0 + slack:
        return 1.0
    return p


def permute_ket(vec: np.ndarray, space: HilbertSpec, new_order: Sequence[str]) -> np.ndarray:
    """Reorder a vector's tensor factors into ``new_order``."""
    wires = space.wires
    if sorted(new_order) != sorted(wires):
        raise ValueError(f"{list(new_order)} is not a permutation of {list(wires)}")
    if not wires:
        return np.asarray(vec, dtype=complex).reshape(-1)
    t = np.asarray(vec, dtype=complex).reshape(space.dims)
    axes = [space.index(w) for w in new_order]
    return t.transpose(axes).reshape(-1)


def permute_wires(mat: np.ndarray, space: HilbertSpec, new_order: Sequence[str]) -> np.ndarray:
    """Reorder an operator's tensor factors into ``new_order``."""
    wires = space.wires
    if sorted(new_order) != sorted(wires):
        raise ValueError(f"{list(new_order)} is not a permutation of {list(wires)}")
    if not wires:
        return np.asarray(mat, dtype=complex).reshape(1, 1)
    n = len(wires)
    dims = list(space.dims)
    t = np.asarray(mat, dtype=complex).reshape(dims + dims)
    axes = [space.index(w) for w in new_order]
    t = t.transpose(axes + [n + a for a in axes])
    return t.reshape(space.dim, space.dim)


def lift_operator(op: np.ndarray, on: Sequence[str], space: HilbertSpec) -> np.ndarray:
    """Embed a local operator into the full space.

    ``op`` acts on the wires listed in ``on`` (in that order) and as the
    identity on every other wire of ``space``. The result's factors are in
    ``space`` order.
    """
    on = [str(w) for w in on]
    if len(set(on)) != len(on):
        raise ValueError(f"repeated wires in {on}")
    d_on = math.prod(space.dim_of(w) for w in on) if on else 1
    op = np.asarray(op, dtype=complex)
    if op.shape != (d_on, d_on):
        raise ValueError(f"operator shape {op.shape} does not match wire dims (local dim {d_on})")
    rest = [w for w in space.wires if w not in set(on)]
    d_rest = math.prod(space.dim_of(w) for w in rest) if rest else 1
    big = np.kron(op, identity(d_rest))
    src = HilbertSpec.of([(w, space.dim_of(w)) for w in on + rest])
    return permute_wires(big, src, space.wires)


def partial_trace_matrix(mat: np.ndarray, space: HilbertSpec, keep: Iterable[str]) -> np.ndarray:
    """Trace out every wire not named in ``keep`` (raw-matrix version).

    Tracing out everything leaves a 1x1 matrix holding the trace. Kept
    factors stay in ``space`` order.
    """
    keep_set = set(keep)
    unknown = keep_set - set(space.wires)
    if unknown:
        raise ValueError(f"unknown wires {sorted(unknown)}")
    if not space.wires:
        return np.asarray(mat, dtype=complex).reshape(1, 1)
    dims = list(space.dims)
    n = len(dims)
    t = np.asarray(mat, dtype=complex).reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    row, col, out_row, out_col = [], [], [], []
    next_letter = 0
    for i, (w, _) in enumerate(space.factors):
        if w in keep_set:
            r, c = letters[next_letter], letters[next_letter + 1]
            next_letter += 2
            out_row.append(r)
            out_col.append(c)
        else:
            r = c = letters[next_letter]
            next_letter += 1
        row.append(r)
        col.append(c)
    sub = "".join(row + col) + "->" + "".join(out_row + out_col)
    d_keep = math.prod(d for w, d in space.factors if w in keep_set) if keep_set else 1
    return np.einsum(sub, t).reshape(d_keep, d_keep)


def partial_trace(rho: DensityOperator, keep: Iterable[str]) -> DensityOperator:
    """Trace out every wire of a state not named in ``keep``."""
    reduced = partial_trace_matrix(rho.matrix, rho.space, keep)
    return DensityOperator(reduced, rho.space.restrict(keep))


def bipartition_ket(vec: np.ndarray, space: HilbertSpec, front: Sequence[str]) -> np.ndarray:
    """Reshape a vector into a matrix indexed (front wires) x (the rest).

    The front index runs over the listed wires in the given order, the
    rest index over the remaining wires in ``space`` order. Either side
    may be empty, giving a single row or column.
    """
    front = [str(w) for w in front]
    rest = [w for w in space.wires if w not in set(front)]
    v = permute_ket(vec, space, front + rest)
    d_front = math.prod(space.dim_of(w) for w in front) if front else 1
    d_rest = math.prod(space.dim_of(w) for w in rest) if rest else 1
    return v.reshape(d_front, d_rest)


def proportional(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> float | None:
    """Positive scalar c with ``a = c * b``, or None if there is none.

    The scalar is a least-squares fit followed by a residual check, so b
    being (numerically) zero or the fit coming out nonpositive both yield
    None rather than an error.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    denom = float(np.vdot(b, b).real)
    if denom <= TOL.zero:
        return None
    c = float(np.vdot(b, a).real) / denom
    if c <= TOL.zero:
        return None
    if frob_norm(a - c * b) <= tol * max(frob_norm(a), 1.0):
        return c
    return None


def is_pure(rho: DensityOperator, tol: float = 1e-9) -> bool:
    """Purity test for unnormalized states: Tr(rho^2) = Tr(rho)^2."""
    t = rho.trace()
    t2 = float(np.vdot(rho.matrix, rho.matrix).real)
    return abs(t2 - t * t) <= tol * t * t


def measure_z(dim: int = 2) -> Measurement:
    """Projective measurement in the computational basis, labels "0", "1", ..."""
    return Measurement.of({str(i): projector(basis_ket(dim, i)) for i in range(dim)})


def _const(rows) -> np.ndarray:
    m = np.array(rows, dtype=complex)
    m.setflags(write=False)
    return m


ID2 = _const([[1, 0], [0, 1]])
PAULI_X = _const([[0, 1], [1, 0]])
PAULI_Y = _const([[0, -1j], [1j, 0]])
PAULI_Z = _const([[1, 0], [0, -1]])
HADAMARD = _const(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
# Control is the first listed wire.
CNOT = _const([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
SWAP = _const([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
