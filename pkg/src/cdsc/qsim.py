"""Dense statevector engine over named qubits.

States are immutable; every operation returns a fresh ``StateVector``.
Index convention: the first-listed qubit label is the most significant
bit of the amplitude index, so |q0 q1 ... q_{n-1}> sits at index
q0*2^(n-1) + q1*2^(n-2) + ... + q_{n-1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ATOL = 1e-10          # tolerance for norm / unitarity / orthonormality invariants
ZERO_PROB = 1e-12     # probability below which a forced outcome is an error
MAX_QUBITS = 14       # dense amplitudes only; largest state in scope is tiny

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULI = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


class LabelError(ValueError):
    """Duplicate, unknown, or mismatched qubit labels."""


class ZeroProbabilityError(ValueError):
    """A measurement outcome of (near-)zero probability was forced."""


def _frozen(values, dtype=complex) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state over named qubits."""

    labels: tuple[str, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        if not labels:
            raise LabelError("a state needs at least one qubit label")
        if len(set(labels)) != len(labels):
            raise LabelError(f"duplicate qubit labels: {labels}")
        if len(labels) > MAX_QUBITS:
            raise ValueError(f"dense engine is capped at {MAX_QUBITS} qubits")
        amps = _frozen(np.asarray(self.amplitudes).reshape(-1))
        if amps.size != 2 ** len(labels):
            raise ValueError(
                f"expected {2 ** len(labels)} amplitudes for {len(labels)} "
                f"qubits, got {amps.size}"
            )
        if abs(np.linalg.norm(amps) - 1.0) > ATOL:
            raise ValueError("state vector is not normalized")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelError(f"unknown qubit label {label!r}") from None

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.num_qubits)


@dataclass(frozen=True, eq=False)
class UnitaryGate:
    """Unitary matrix acting on one or two qubits."""

    entries: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.entries)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("gate entries must be a square matrix")
        if mat.shape[0] not in (2, 4):
            raise ValueError("only 1- and 2-qubit gates are supported")
        if not np.allclose(mat.conj().T @ mat, np.eye(mat.shape[0]), atol=ATOL):
            raise ValueError("gate matrix is not unitary")
        object.__setattr__(self, "entries", mat)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    @property
    def num_targets(self) -> int:
        return 1 if self.dimension == 2 else 2


IDENTITY_GATE = UnitaryGate(PAULI_I)
PHASE_FLIP_GATE = UnitaryGate(PAULI_Z)


@dataclass(frozen=True, eq=False)
class PauliString:
    """Tensor product of single-qubit Paulis on a subset of labels."""

    labels: tuple[str, ...]
    letters: str

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise LabelError(f"duplicate qubit labels: {labels}")
        if len(labels) != len(self.letters):
            raise ValueError("one letter per label required")
        if any(c not in _PAULI for c in self.letters):
            raise ValueError(f"letters must be drawn from I,X,Y,Z: {self.letters!r}")
        if set(self.letters) == {"I"} or not self.letters:
            raise ValueError("at least one non-identity letter required")
        object.__setattr__(self, "labels", labels)


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Complete orthonormal basis on k target qubits, one display name per state."""

    target_labels: tuple[str, ...]
    names: tuple[str, ...]
    vectors: np.ndarray  # row m is basis state m

    def __post_init__(self):
        labels = tuple(self.target_labels)
        names = tuple(self.names)
        if len(set(labels)) != len(labels):
            raise LabelError(f"duplicate qubit labels: {labels}")
        dim = 2 ** len(labels)
        vecs = _frozen(self.vectors)
        if vecs.shape != (dim, dim):
            raise ValueError(f"need {dim} basis states of dimension {dim}")
        if len(names) != dim or len(set(names)) != dim:
            raise ValueError("need one distinct name per basis state")
        if not np.allclose(vecs @ vecs.conj().T, np.eye(dim), atol=ATOL):
            raise ValueError("basis states are not orthonormal")
        object.__setattr__(self, "target_labels", labels)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "vectors", vecs)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValueError(f"unknown outcome name {name!r}") from None


_SQRT_HALF = 1.0 / np.sqrt(2.0)


def z_basis(label: str) -> OrthonormalBasis:
    return OrthonormalBasis((label,), ("0", "1"), np.eye(2, dtype=complex))


def x_basis(label: str) -> OrthonormalBasis:
    vecs = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT_HALF
    return OrthonormalBasis((label,), ("+", "-"), vecs)


def y_basis(label: str) -> OrthonormalBasis:
    vecs = np.array([[1, 1j], [1, -1j]], dtype=complex) * _SQRT_HALF
    return OrthonormalBasis((label,), ("+i", "-i"), vecs)


LOCAL_BASES = {"X": x_basis, "Y": y_basis, "Z": z_basis}


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Seeded generator with a stable, independent stream per (seed, stream)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))


def zero_state(labels) -> StateVector:
    """All-zeros computational basis state on the given labels."""
    labels = tuple(labels)
    amps = np.zeros(2 ** len(labels), dtype=complex)
    amps[0] = 1.0
    return StateVector(labels, amps)


def apply_unitary(state: StateVector, gate: UnitaryGate, targets) -> StateVector:
    """Apply ``gate`` to the target qubits, identity on the rest."""
    targets = tuple(targets)
    if len(targets) != gate.num_targets:
        raise ValueError(
            f"gate of dimension {gate.dimension} needs {gate.num_targets} "
            f"targets, got {len(targets)}"
        )
    pos = [state.axis(t) for t in targets]
    k = len(targets)
    psi = np.moveaxis(state.tensor_view(), pos, range(k))
    shape = psi.shape
    psi = gate.entries @ psi.reshape(gate.dimension, -1)
    psi = np.moveaxis(psi.reshape(shape), range(k), pos)
    return StateVector(state.labels, psi.reshape(-1))


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Kronecker product; labels concatenate a then b."""
    overlap = set(a.labels) & set(b.labels)
    if overlap:
        raise LabelError(f"overlapping labels in tensor product: {sorted(overlap)}")
    return StateVector(a.labels + b.labels, np.kron(a.amplitudes, b.amplitudes))


def _projection_rows(state: StateVector, basis: OrthonormalBasis) -> np.ndarray:
    """Row m is <basis_m|state>, a residual vector over the non-target qubits."""
    pos = [state.axis(t) for t in basis.target_labels]
    k = len(pos)
    psi = np.moveaxis(state.tensor_view(), pos, range(k)).reshape(2 ** k, -1)
    return basis.vectors.conj() @ psi


def _collapse(state: StateVector, basis: OrthonormalBasis, index: int,
              rows: np.ndarray, prob: float) -> StateVector:
    pos = [state.axis(t) for t in basis.target_labels]
    k = len(pos)
    residual = rows[index] / np.sqrt(prob)
    joint = np.outer(basis.vectors[index], residual).reshape((2,) * state.num_qubits)
    joint = np.moveaxis(joint, range(k), pos)
    return StateVector(state.labels, joint.reshape(-1))


def sample_index(rng: np.random.Generator, probs: np.ndarray) -> int:
    """Draw an index from a probability vector using a single uniform variate."""
    edges = np.cumsum(probs)
    edges /= edges[-1]  # zero-probability tails must never be reachable
    return min(int(np.searchsorted(edges, rng.random(), side="right")), len(probs) - 1)


def measure_in_basis(state: StateVector, basis: OrthonormalBasis,
                     rng: np.random.Generator) -> tuple[str, float, StateVector]:
    """Projective measurement of the target qubits in the given basis.

    Returns (outcome name, outcome probability, collapsed state). The
    collapsed state keeps every label; the targets are left in the
    observed basis state.
    """
    rows = _projection_rows(state, basis)
    probs = np.einsum("ij,ij->i", rows.conj(), rows).real
    index = sample_index(rng, probs)
    prob = float(probs[index])
    return basis.names[index], prob, _collapse(state, basis, index, rows, prob)


def force_outcome(state: StateVector, basis: OrthonormalBasis,
                  name: str) -> tuple[float, StateVector]:
    """Deterministic variant of ``measure_in_basis`` for exhaustive branch tests."""
    index = basis.index_of(name)
    rows = _projection_rows(state, basis)
    prob = float(np.vdot(rows[index], rows[index]).real)
    if prob < ZERO_PROB:
        raise ZeroProbabilityError(
            f"outcome {name!r} has probability {prob:.3e} < {ZERO_PROB}"
        )
    return prob, _collapse(state, basis, index, rows, prob)


def pauli_expectation(state: StateVector, p: PauliString) -> float:
    """<state|P|state> for a Pauli string, identity on unlisted qubits."""
    psi = state.tensor_view()
    phi = psi
    for label, letter in zip(p.labels, p.letters):
        if letter == "I":
            continue
        ax = state.axis(label)
        phi = np.moveaxis(np.tensordot(_PAULI[letter], phi, axes=([1], [ax])), 0, ax)
    value = np.vdot(psi.reshape(-1), phi.reshape(-1))
    if abs(value.imag) > ATOL:
        raise ArithmeticError(f"Pauli expectation came out complex: {value}")
    return float(np.clip(value.real, -1.0, 1.0))


def equal_up_to_global_phase(a: StateVector, b: StateVector, tol: float = ATOL) -> bool:
    """True iff |<a|b>| >= 1 - tol. Requires identical label order."""
    if a.labels != b.labels:
        raise LabelError(f"label mismatch: {a.labels} vs {b.labels}")
    return bool(abs(np.vdot(a.amplitudes, b.amplitudes)) >= 1.0 - tol)


def _reference_residual(state: StateVector, reference: StateVector) -> np.ndarray:
    if not set(reference.labels) < set(state.labels):
        raise LabelError(
            f"reference labels {reference.labels} must be a strict subset "
            f"of state labels {state.labels}"
        )
    pos = [state.axis(t) for t in reference.labels]
    k = len(pos)
    psi = np.moveaxis(state.tensor_view(), pos, range(k)).reshape(2 ** k, -1)
    return reference.amplitudes.conj() @ psi


def projection_fidelity(state: StateVector, reference: StateVector) -> float:
    """Fidelity of the reduced state on the reference's qubits with the reference.

    Computed as the squared norm of (<reference| (x) identity)|state>.
    """
    residual = _reference_residual(state, reference)
    return float(min(np.vdot(residual, residual).real, 1.0))


def factor_out(state: StateVector, reference: StateVector) -> StateVector:
    """Remove qubits known to be in ``reference``, returning the remaining factor.

    Valid only when the state is (reference (x) rest), e.g. right after a
    measurement collapse; the remainder keeps the exact amplitudes of the
    rest factor, with no global-phase ambiguity.
    """
    residual = _reference_residual(state, reference)
    norm_sq = float(np.vdot(residual, residual).real)
    if abs(norm_sq - 1.0) > ATOL:
        raise ValueError(
            f"state does not factor as reference (x) rest "
            f"(projection weight {norm_sq:.6f})"
        )
    rest = tuple(l for l in state.labels if l not in reference.labels)
    return StateVector(rest, residual / np.sqrt(norm_sq))
