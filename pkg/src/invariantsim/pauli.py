"""Symbolic n-qubit Pauli string algebra.

Strings are kept symbolic (a word over IXYZ) so products and Lie brackets
carry exact phases from {+1, -1, +i, -i}. That exactness is what makes the
structure constants of the coefficient solver exact multiples of 2i, and
hence the resulting linear system purely real.

The word convention is big-endian: the first letter acts on the most
significant qubit, so "IZ" realizes kron(I, Z) = diag(1, -1, 1, -1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .linalg import as_operator

# Coefficients with magnitude at or below this are dropped; this defines the
# canonical form of a PauliSum and keeps term counts stable.
COEFF_PRUNE_TOL = 1e-14

PAULI_LETTERS = "IXYZ"

_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Single-qubit multiplication table: a * b = phase * c, phases exact.
_PROD = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


@dataclass(frozen=True, order=True)
class PauliString:
    """A tensor product of single-qubit Pauli operators, e.g. "XIZ"."""

    word: str

    def __post_init__(self):
        if not self.word or any(c not in PAULI_LETTERS for c in self.word):
            raise ValueError(f"invalid Pauli word {self.word!r}")

    @property
    def n(self) -> int:
        return len(self.word)

    @property
    def is_identity(self) -> bool:
        return set(self.word) == {"I"}

    @staticmethod
    def identity(n: int) -> "PauliString":
        return PauliString("I" * n)

    def dense(self) -> np.ndarray:
        """The 2^n x 2^n matrix realization (Hermitian, unitary, involutory)."""
        return _dense_word(self.word).copy()

    def __str__(self) -> str:
        return self.word


@lru_cache(maxsize=4096)
def _dense_word(word: str) -> np.ndarray:
    mat = reduce(np.kron, (_MATS[c] for c in word))
    mat.setflags(write=False)
    return mat


def pauli_product(P: PauliString, Q: PauliString) -> tuple[complex, PauliString]:
    """P * Q = phase * R with phase in {+1, -1, +i, -i}, computed exactly."""
    if P.n != Q.n:
        raise ValueError(f"qubit count mismatch: {P.n} vs {Q.n}")
    phase = complex(1)
    letters = []
    for a, b in zip(P.word, Q.word):
        ph, c = _PROD[(a, b)]
        phase *= ph
        letters.append(c)
    return phase, PauliString("".join(letters))


def lie_bracket(P: PauliString, Q: PauliString) -> "PauliSum":
    """[P, Q] as a PauliSum: empty when the strings commute, else 2*phase*R.

    The nonzero coefficient is always an exact purely imaginary unit times 2,
    which is why i*[P, Q] has real coefficients.
    """
    phase_pq, R = pauli_product(P, Q)
    phase_qp, _ = pauli_product(Q, P)
    coeff = phase_pq - phase_qp
    if coeff == 0:
        return PauliSum(P.n)
    return PauliSum(P.n, {R: coeff})


class PauliSum:
    """A linear combination of same-length Pauli strings.

    Stored in canonical form: coefficients with |c| <= COEFF_PRUNE_TOL are
    dropped on every mutation. Treated as an immutable value by convention.
    """

    def __init__(self, n: int, terms: dict[PauliString, complex] | None = None):
        self.n = int(n)
        self.terms: dict[PauliString, complex] = {}
        if terms:
            for P, c in terms.items():
                if P.n != self.n:
                    raise ValueError(f"string {P} has {P.n} qubits, expected {self.n}")
                if abs(c) > COEFF_PRUNE_TOL:
                    self.terms[P] = complex(c)

    @property
    def term_count(self) -> int:
        return len(self.terms)

    @property
    def is_empty(self) -> bool:
        return not self.terms

    def coefficient(self, P: PauliString) -> complex:
        return self.terms.get(P, 0.0 + 0.0j)

    def is_real(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol for c in self.terms.values())

    def max_imag(self) -> float:
        if not self.terms:
            return 0.0
        return max(abs(c.imag) for c in self.terms.values())

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if self.n != other.n:
            raise ValueError(f"qubit count mismatch: {self.n} vs {other.n}")
        out = dict(self.terms)
        for P, c in other.terms.items():
            out[P] = out.get(P, 0.0) + c
        return PauliSum(self.n, out)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + other.scaled(-1.0)

    def scaled(self, factor: complex) -> "PauliSum":
        return PauliSum(self.n, {P: c * factor for P, c in self.terms.items()})

    def items(self):
        return sorted(self.terms.items(), key=lambda kv: kv[0].word)

    def to_dense(self) -> np.ndarray:
        dim = 2 ** self.n
        out = np.zeros((dim, dim), dtype=complex)
        for P, c in self.terms.items():
            out += c * _dense_word(P.word)
        return out

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for P, c in self.items():
            if abs(c.imag) <= COEFF_PRUNE_TOL:
                parts.append(f"{c.real:+g} {P.word}")
            else:
                parts.append(f"({c.real:+g}{c.imag:+g}j) {P.word}")
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"PauliSum(n={self.n}, {self})"


def to_dense(S: PauliSum) -> np.ndarray:
    """Dense realization of a PauliSum; the empty sum maps to the zero matrix."""
    return S.to_dense()


# Contraction tensor for decomposition: _PT[k, a, b] = P_k[a, b] / 2, so that
# contracting both matrix indices of A against it yields Tr(P_k A) / 2 per qubit.
_PT = np.stack([_MATS[c] for c in PAULI_LETTERS]) / 2.0


def decompose(A, n: int, prune_tol: float = COEFF_PRUNE_TOL) -> PauliSum:
    """Expand a 2^n x 2^n matrix in the Pauli string basis.

    Coefficients are c_P = Tr(P A) / 2^n. The contraction is done one qubit
    at a time on the reshaped matrix, so the cost is O(n 4^n) instead of the
    16^n of the naive string-by-string trace.
    """
    A = as_operator(A)
    dim = 2 ** n
    if A.shape[0] != dim:
        raise ValueError(f"matrix dim {A.shape[0]} is not 2^{n}")
    X = A.reshape((2,) * (2 * n))
    # Axes are (i_1..i_n, j_1..j_n); each pass contracts one (i, j) pair
    # against _PT and prepends the resulting Pauli-label axis.
    for m in range(n):
        X = np.tensordot(_PT, X, axes=([1, 2], [n, m]))
    coeffs = X.transpose(tuple(reversed(range(n))))
    terms: dict[PauliString, complex] = {}
    for idx in np.argwhere(np.abs(coeffs) > prune_tol):
        word = "".join(PAULI_LETTERS[k] for k in idx)
        terms[PauliString(word)] = complex(coeffs[tuple(idx)])
    return PauliSum(n, terms)


def all_strings(n: int):
    """Iterate every n-qubit PauliString in lexicographic word order."""
    import itertools

    for letters in itertools.product(PAULI_LETTERS, repeat=n):
        yield PauliString("".join(letters))


def closure_defect(basis: list[PauliString]) -> list[PauliString]:
    """Strings produced by brackets within `basis` that are missing from it.

    A basis for the coefficient solver must be closed under the Lie bracket;
    closure under bracket saturation is the convention used throughout.
    """
    have = set(basis)
    missing = []
    for i, P in enumerate(basis):
        for Q in basis[i + 1:]:
            br = lie_bracket(P, Q)
            for R in br.terms:
                if R not in have and R not in missing:
                    missing.append(R)
    return missing


def close_under_bracket(basis: list[PauliString], max_size: int = 4096) -> list[PauliString]:
    """Saturate a string set under the Lie bracket."""
    out = list(dict.fromkeys(basis))
    while True:
        missing = closure_defect(out)
        if not missing:
            return out
        out.extend(missing)
        if len(out) > max_size:
            raise ValueError(f"bracket closure exceeded {max_size} strings")
