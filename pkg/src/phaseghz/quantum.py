"""Dense state-vector and density-matrix engine for small qubit registers.

Conventions
-----------
- Polarization encoding: |H> -> 0, |V> -> 1.
- Qubit 1 is the most significant bit of the computational-basis index, so
  |HHVV> has index 0b0011 = 3.
- Qubits are addressed by their 1-based path label (1..n), the way photons
  are labelled on the optical table.
- Global phases are kept as-is; comparisons that should ignore them say so.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_QUBITS = 10
NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10

Array = np.ndarray


class PostSelectionError(ValueError):
    """Raised when a post-selection keeps nothing of the input state."""

    def __init__(self, message: str, probability: float = 0.0):
        super().__init__(message)
        self.probability = probability


def _qubit_count(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    if n > MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds the dense limit of {MAX_QUBITS}")
    return n


def _frozen(arr: Array) -> Array:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state of ``n`` qubits."""

    amplitudes: Array

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1:
            raise ValueError("amplitudes must be one-dimensional")
        _qubit_count(amps.size)
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n(self) -> int:
        return _qubit_count(self.amplitudes.size)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def from_unnormalized(cls, amplitudes: Sequence[complex]) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=np.complex128)
        norm = np.linalg.norm(amps)
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm)

    def amplitude(self, bits: str) -> complex:
        """Amplitude of a basis state written in H/V letters, e.g. ``"HHVV"``."""
        return complex(self.amplitudes[basis_index(bits)])

    def overlap(self, other: "StateVector") -> complex:
        """<self|other>."""
        _check_same_dim(self.dim, other.dim)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive-semidefinite, unit-trace matrix on ``n`` qubits."""

    entries: Array

    def __post_init__(self):
        rho = _frozen(self.entries)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        _qubit_count(rho.shape[0])
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > HERMITIAN_TOL:
            raise ValueError(f"matrix is not Hermitian (max deviation {herm:.3g})")
        tr = np.trace(rho)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace is {tr!r}, expected 1")
        lam_min = float(np.linalg.eigvalsh(rho)[0])
        if lam_min < -PSD_TOL:
            raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {lam_min:.3g})")
        object.__setattr__(self, "entries", rho)

    @property
    def n(self) -> int:
        return _qubit_count(self.entries.shape[0])

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> Array:
        return np.linalg.eigvalsh(self.entries)

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    @classmethod
    def from_hermitian(cls, matrix: Array) -> "DensityMatrix":
        """Symmetrize away rounding-level anti-Hermitian parts, then validate."""
        m = np.asarray(matrix, dtype=np.complex128)
        m = 0.5 * (m + m.conj().T)
        return cls(m / np.trace(m).real)


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """A 2x2 operator acting on one qubit (1-based path label)."""

    qubit: int
    matrix: Array
    unitary: bool = False

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.shape != (2, 2):
            raise ValueError("local operator must be 2x2")
        if self.qubit < 1:
            raise IndexError("qubit labels start at 1")
        if self.unitary and np.max(np.abs(m.conj().T @ m - np.eye(2))) > NORM_TOL:
            raise ValueError("operator flagged unitary but U^dagger U != I")
        object.__setattr__(self, "matrix", m)

    def apply(self, state: StateVector) -> StateVector:
        _check_qubit(self.qubit, state.n)
        out = apply_single_qubit(state.amplitudes, self.matrix, self.qubit, state.n)
        if self.unitary:
            return StateVector(out)
        return StateVector.from_unnormalized(out)


def phase_unitary(theta: float) -> Array:
    """|H><H| + e^{i theta} |V><V|."""
    return np.diag([1.0, np.exp(1j * theta)]).astype(np.complex128)


def basis_index(bits: str) -> int:
    index = 0
    for ch in bits.upper():
        if ch not in "HV01":
            raise ValueError(f"invalid basis letter {ch!r}")
        index = (index << 1) | (ch in "V1")
    return index


def basis_state(bits: str) -> StateVector:
    """Computational basis state from H/V (or 0/1) letters."""
    amps = np.zeros(1 << len(bits), dtype=np.complex128)
    amps[basis_index(bits)] = 1.0
    return StateVector(amps)


def _check_qubit(qubit: int, n: int) -> None:
    if not 1 <= qubit <= n:
        raise IndexError(f"qubit {qubit} out of range for a {n}-qubit register")


def _check_same_dim(a: int, b: int) -> None:
    if a != b:
        raise ValueError(f"dimension mismatch: {a} vs {b}")


def apply_single_qubit(amplitudes: Array, matrix: Array, qubit: int, n: int) -> Array:
    psi = np.asarray(amplitudes, dtype=np.complex128).reshape((2,) * n)
    psi = np.tensordot(matrix, psi, axes=([1], [qubit - 1]))
    return np.moveaxis(psi, 0, qubit - 1).reshape(-1)


def kron_all(mats: Sequence[Array]) -> Array:
    out = np.ones((1, 1), dtype=np.complex128)
    for m in mats:
        out = np.kron(out, m)
    return out


def make_bell_psi_plus() -> StateVector:
    """(|HV> + |VH>)/sqrt(2), the pair emitted by the cascade decay."""
    return StateVector(np.array([0, 1, 1, 0], dtype=np.complex128) / np.sqrt(2))


def make_bell_phi_plus() -> StateVector:
    """(|HH> + |VV>)/sqrt(2)."""
    return StateVector(np.array([1, 0, 0, 1], dtype=np.complex128) / np.sqrt(2))


def apply_local_phase(state: StateVector, qubit: int, theta: float) -> StateVector:
    """Multiply every amplitude with |V> on ``qubit`` by e^{i theta}."""
    return LocalOperator(qubit, phase_unitary(theta), unitary=True).apply(state)


def make_phase_ghz(n: int, theta: float) -> StateVector:
    """(|H...H> + e^{i theta}|V...V>)/sqrt(2)."""
    if n < 2:
        raise ValueError("a GHZ state needs at least two qubits")
    if n > MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds the dense limit of {MAX_QUBITS}")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0 / np.sqrt(2)
    amps[-1] = np.exp(1j * theta) / np.sqrt(2)
    return StateVector(amps)


def pbs_fusion(state: StateVector, idler_pair: tuple[int, int]) -> tuple[StateVector, float]:
    """Post-select both idler photons exiting the PBS with equal polarization.

    An ideal PBS transmits H and reflects V, so a fourfold coincidence with one
    photon in each output port happens only when the two idlers share a
    polarization. The surviving component is renormalized.

    Returns
    -------
    (state, probability)
        The post-selected state and the squared norm of the kept component.

    Raises
    ------
    PostSelectionError
        If the kept component is zero (``probability`` attribute is 0).
    """
    a, b = idler_pair
    n = state.n
    _check_qubit(a, n)
    _check_qubit(b, n)
    if a == b:
        raise ValueError("idler indices must be distinct")
    idx = np.arange(state.dim)
    bit_a = (idx >> (n - a)) & 1
    bit_b = (idx >> (n - b)) & 1
    kept = np.where(bit_a == bit_b, state.amplitudes, 0.0)
    prob = float(np.vdot(kept, kept).real)
    if prob <= NORM_TOL:
        raise PostSelectionError("post-selection annihilates state", probability=0.0)
    return StateVector(kept / np.sqrt(prob)), prob


def pure_to_density(state: StateVector) -> DensityMatrix:
    psi = state.amplitudes
    return DensityMatrix.from_hermitian(np.outer(psi, psi.conj()))


def maximally_mixed(n: int) -> DensityMatrix:
    d = 1 << n
    return DensityMatrix(np.eye(d, dtype=np.complex128) / d)


def tensor(a, b):
    """Tensor product of two states of the same kind (a is the leading factor)."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector.from_unnormalized(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix.from_hermitian(np.kron(a.entries, b.entries))
    raise TypeError("tensor() needs two StateVectors or two DensityMatrices")


def fidelity_pure_target(rho: DensityMatrix, psi: StateVector) -> float:
    """<psi|rho|psi>."""
    _check_same_dim(rho.dim, psi.dim)
    v = psi.amplitudes
    f = float(np.real(np.vdot(v, rho.entries @ v)))
    if f < -PSD_TOL or f > 1.0 + PSD_TOL:
        raise ValueError(f"fidelity {f} outside [0, 1]")
    return min(max(f, 0.0), 1.0)


def random_pure_state(n: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state."""
    d = 1 << n
    z = rng.normal(size=d) + 1j * rng.normal(size=d)
    return StateVector.from_unnormalized(z)


def random_density_matrix(n: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Ginibre-distributed mixed state (Hilbert-Schmidt measure for full rank)."""
    d = 1 << n
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    return DensityMatrix.from_hermitian(g @ g.conj().T)


def random_product_state(n: int, rng: np.random.Generator) -> StateVector:
    """Tensor product of ``n`` Haar-random single-qubit states."""
    amps = np.ones(1, dtype=np.complex128)
    for _ in range(n):
        amps = np.kron(amps, random_pure_state(1, rng).amplitudes)
    return StateVector.from_unnormalized(amps)


def _psd_sqrt(m: Array) -> Array:
    lam, u = np.linalg.eigh(m)
    lam[lam < 1e-14 * max(lam[-1], 0.0)] = 0.0
    return (u * np.sqrt(lam)) @ u.conj().T


def state_fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 between mixed states."""
    _check_same_dim(rho.dim, sigma.dim)
    # singular values of sqrt(rho) sqrt(sigma) avoid sqrt-amplified roundoff on null spaces
    sv = np.linalg.svd(_psd_sqrt(rho.entries) @ _psd_sqrt(sigma.entries), compute_uv=False)
    return float(min(np.sum(sv) ** 2, 1.0))
