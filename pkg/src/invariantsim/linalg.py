"""Dense complex linear algebra primitives for small Hilbert spaces.

Everything here works on plain numpy arrays: state vectors are 1d complex
arrays of unit norm, operators are square complex matrices. Structural
properties (Hermitian, unitary, involutory) are enforced by explicit
checks with fixed tolerances rather than by wrapper types, so a failed
precondition always surfaces as a ValueError carrying the measured defect.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Structural tolerances, sized at roughly 100x accumulated round-off for
# the dimensions this library targets (dim <= 2**10).
HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
INVOLUTORY_TOL = 1e-10
STATE_NORM_TOL = 1e-12


def as_operator(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def as_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.size == 0:
        raise ValueError("empty state vector")
    return psi


def dagger(A: np.ndarray) -> np.ndarray:
    return np.asarray(A).conj().T


def hermiticity_defect(A) -> float:
    """max |A - A^dag|, elementwise."""
    A = as_operator(A)
    return float(np.max(np.abs(A - dagger(A))))


def unitarity_defect(A) -> float:
    """max |A A^dag - 1|, elementwise."""
    A = as_operator(A)
    return float(np.max(np.abs(A @ dagger(A) - np.eye(A.shape[0]))))


def involution_defect(A) -> float:
    """max |A^2 - 1|, elementwise."""
    A = as_operator(A)
    return float(np.max(np.abs(A @ A - np.eye(A.shape[0]))))


def is_hermitian(A, tol: float = HERMITIAN_TOL) -> bool:
    return hermiticity_defect(A) <= tol


def is_unitary(A, tol: float = UNITARY_TOL) -> bool:
    return unitarity_defect(A) <= tol


def is_involutory(A, tol: float = INVOLUTORY_TOL) -> bool:
    return involution_defect(A) <= tol


def assert_hermitian(A, tol: float = HERMITIAN_TOL, what: str = "operator") -> np.ndarray:
    A = as_operator(A)
    defect = hermiticity_defect(A)
    if defect > tol:
        raise ValueError(f"{what} is not Hermitian: max asymmetry {defect:.3e} exceeds {tol:.1e}")
    return A


def assert_state(psi, tol: float = STATE_NORM_TOL, what: str = "state") -> np.ndarray:
    psi = as_state(psi)
    nrm = float(np.linalg.norm(psi))
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"{what} is not normalized: |norm - 1| = {abs(nrm - 1.0):.3e}")
    return psi


def basis_state(dim: int, index: int) -> np.ndarray:
    """Computational basis ket |index> in a dim-dimensional space."""
    if not 0 <= index < dim:
        raise ValueError(f"basis index {index} out of range for dim {dim}")
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


def uniform_superposition(dim: int) -> np.ndarray:
    """The state (1/sqrt(dim)) sum_i |i>."""
    return np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)


def projector(psi: np.ndarray) -> np.ndarray:
    psi = as_state(psi)
    return np.outer(psi, psi.conj())


def frobenius_norm(A) -> float:
    return float(np.linalg.norm(np.asarray(A)))


@dataclass(frozen=True)
class Spectrum:
    """Full spectral decomposition of a Hermitian operator.

    eigenvalues are real and ascending; eigenvectors[:, i] is the i-th
    orthonormal eigenvector with a deterministic phase (the component of
    largest magnitude is real and positive).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def ground_state(self) -> np.ndarray:
        return self.eigenvectors[:, 0].copy()

    def reconstruct(self) -> np.ndarray:
        """sum_i lambda_i |v_i><v_i|."""
        V = self.eigenvectors
        return (V * self.eigenvalues) @ dagger(V)


def _fix_phases(V: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    V = V.copy()
    for i in range(V.shape[1]):
        j = int(np.argmax(np.abs(V[:, i])))
        phase = V[j, i] / abs(V[j, i])
        V[:, i] = V[:, i] / phase
    return V


def hermitian_eig(A, tol: float = HERMITIAN_TOL) -> Spectrum:
    """Spectral decomposition of a Hermitian matrix.

    Rejects non-Hermitian input with a diagnostic of the maximum asymmetry.
    Eigenvalues come out ascending, eigenvectors orthonormal with the fixed
    phase convention, so repeated calls on the same matrix are reproducible.
    """
    A = assert_hermitian(A, tol=tol)
    w, V = np.linalg.eigh(A)
    return Spectrum(eigenvalues=w, eigenvectors=_fix_phases(V))


def exp_generator(A, theta: float) -> np.ndarray:
    """exp(-i theta A) for Hermitian A, via spectral decomposition.

    The result is unitary to eigensolver precision, which matters more here
    than the cost: every generator in this library is Hermitian, and norm
    drift in a propagator must not be mistaken for physics.
    """
    A = assert_hermitian(A, what="generator")
    w, V = np.linalg.eigh(A)
    return (V * np.exp(-1j * theta * w)) @ dagger(V)


def commutator(A, B) -> np.ndarray:
    """AB - BA, exactly as computed in floating point."""
    A = as_operator(A)
    B = as_operator(B)
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return A @ B - B @ A


def fidelity_up_to_phase(psi, phi, norm_tol: float = 1e-10) -> float:
    """|<phi|psi>|^2 for normalized states: insensitive to global phase."""
    psi = as_state(psi)
    phi = as_state(phi)
    if psi.shape != phi.shape:
        raise ValueError(f"dimension mismatch: {psi.shape} vs {phi.shape}")
    for name, v in (("first", psi), ("second", phi)):
        nrm = float(np.linalg.norm(v))
        if abs(nrm - 1.0) > norm_tol:
            raise ValueError(f"{name} argument is not normalized: |norm - 1| = {abs(nrm - 1.0):.3e}")
    return float(abs(np.vdot(phi, psi)) ** 2)
