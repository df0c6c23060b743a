"""Problem builders: Deutsch-Jozsa variants and Grover search.

Each builder assembles a ProblemInstance holding the invariant schedule
(the track), the Hamiltonian schedule (the driver), the initial state, and
the target convention. Instances are verifiable end to end: the invariant
residual vanishes on the grid, the spectrum of I(s) is constant, the
propagated state rides the ground level, and the final state encodes the
answer with certainty independent of the total time T.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .evolve import EvolutionResult, PropagatorOptions, propagate
from .invariant import InvariantSchedule
from .linalg import (
    assert_state,
    basis_state,
    fidelity_up_to_phase,
    projector,
    uniform_superposition,
)
from .synth import (
    HamiltonianSchedule,
    _poly_pieces,
    commuting_hamiltonian,
    dj_polynomial_hamiltonian,
    linear_alpha,
    sine_alpha,
)

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)

CONSTANT = "constant"
BALANCED = "balanced"


@dataclass(frozen=True)
class BooleanFunctionSpec:
    """A promise function f: {0,1}^n -> {0,1}, constant or exactly balanced."""

    table: tuple[int, ...]

    def __post_init__(self):
        N = len(self.table)
        if N < 2 or N & (N - 1):
            raise ValueError(f"table length {N} is not a power of two")
        if any(v not in (0, 1) for v in self.table):
            raise ValueError("table entries must be bits")
        ones = sum(self.table)
        if ones not in (0, N, N // 2):
            raise ValueError(
                f"table with {ones} ones out of {N} violates the promise "
                "(must be constant or balanced)"
            )

    @staticmethod
    def from_bits(bits: str) -> "BooleanFunctionSpec":
        return BooleanFunctionSpec(tuple(int(c) for c in bits))

    @property
    def n(self) -> int:
        return len(self.table).bit_length() - 1

    @property
    def size(self) -> int:
        return len(self.table)

    @property
    def promise(self) -> str:
        ones = sum(self.table)
        return CONSTANT if ones in (0, self.size) else BALANCED

    @property
    def signs(self) -> np.ndarray:
        """(-1)^f(i) for every input i."""
        return np.array([(-1.0) ** v for v in self.table])

    @property
    def xi_plus(self) -> float:
        if self.n != 1:
            raise ValueError("xi_plus is a single-bit quantity")
        return 0.5 * (self.signs[0] + self.signs[1])

    @property
    def xi_minus(self) -> float:
        if self.n != 1:
            raise ValueError("xi_minus is a single-bit quantity")
        return 0.5 * (self.signs[0] - self.signs[1])

    def oracle_operator(self) -> np.ndarray:
        """U |i> = (-1)^f(i) |i>: diagonal, Hermitian, unitary, involutory."""
        return np.diag(self.signs).astype(complex)


VARIANT_KINDS = ("constant_H", "oscillating", "polynomial")


@dataclass(frozen=True)
class DJVariant:
    """Which interpolation drives the Deutsch-Jozsa invariant.

    The polynomial kind carries the two exponents of its interpolation; the
    remaining knobs of that family are pinned by the requirement that the
    endpoint encodes the answer, which also reverses the measurement labels.
    """

    kind: str = "constant_H"
    poly_n: int = 1
    poly_r: int = 1

    def __post_init__(self):
        if self.kind not in VARIANT_KINDS:
            raise ValueError(f"unknown variant {self.kind!r}; choose from {VARIANT_KINDS}")
        if self.poly_n < 1 or self.poly_r < 1:
            raise ValueError("polynomial exponents must be >= 1")

    @staticmethod
    def constant_H() -> "DJVariant":
        return DJVariant("constant_H")

    @staticmethod
    def oscillating() -> "DJVariant":
        return DJVariant("oscillating")

    @staticmethod
    def polynomial(n: int = 1, r: int = 1) -> "DJVariant":
        return DJVariant("polynomial", poly_n=n, poly_r=r)

    @property
    def labels_reversed(self) -> bool:
        return self.kind == "polynomial"


@dataclass
class ProblemInstance:
    """Everything needed to run and verify one computation."""

    kind: str  # "dj" or "grover"
    invariant: InvariantSchedule
    hamiltonian: HamiltonianSchedule
    initial_state: np.ndarray
    target_state: np.ndarray
    T: float
    labels_reversed: bool = False
    metadata: dict = field(default_factory=dict)

    def run(self, opts: PropagatorOptions | None = None) -> EvolutionResult:
        opts = opts or PropagatorOptions()
        return propagate(self.hamiltonian, self.initial_state, self.T, opts,
                         target=self.target_state)


def _validate_instance(instance: ProblemInstance) -> ProblemInstance:
    phi0 = instance.invariant.ground_state(0.0)
    fid = fidelity_up_to_phase(phi0, instance.initial_state)
    if fid < 1.0 - 1e-10:
        raise AssertionError(
            f"initial state is not the ground state of I(0): fidelity {fid}"
        )
    return instance


def dj_invariant_schedule(f: BooleanFunctionSpec, alpha, omega: float = 1.0) -> InvariantSchedule:
    """Conjugation-evolved invariant for the oracle of f.

    Conjugating omega*(1 - |phi0><phi0|) by exp(-i alpha(s) U) with the
    diagonal oracle U gives matrix elements
        omega * (delta_ij - exp(-2 i alpha(s) xi_ij) / N),
    with xi_ij = ((-1)^f(i) - (-1)^f(j)) / 2. The derivative is analytic,
    so the residual check against any candidate driver is a genuine
    two-route comparison.
    """
    N = f.size
    signs = f.signs
    xi = 0.5 * (signs[:, None] - signs[None, :])
    eye = np.eye(N, dtype=complex)

    def value(s: float) -> np.ndarray:
        return omega * (eye - np.exp(-2j * alpha.alpha(s) * xi) / N)

    def derivative(s: float) -> np.ndarray:
        return omega * (2j * alpha.dalpha(s) * xi) * np.exp(-2j * alpha.alpha(s) * xi) / N

    return InvariantSchedule(dim=N, value=value, derivative=derivative,
                             label=f"dj-{''.join(map(str, f.table))}")


def _dj_polynomial_invariant(f: BooleanFunctionSpec, poly_n: int, poly_r: int,
                             omega: float = 1.0) -> InvariantSchedule:
    """Single-qubit invariant of the polynomial interpolation s^n, s^r.

    On the Bloch sphere the track is a(s) = (cos Theta, -nz sin Theta,
    ny sin Theta) with Theta(s) = pi xi_plus sqrt((s^2n + s^2r)/2); the
    invariant is omega (1 - a.sigma) / 2. Both endpoints coincide with the
    other variants' tracks; only the interior path differs.
    """
    if f.n != 1:
        raise ValueError("the polynomial interpolation is defined for one qubit")
    xi_plus = f.xi_plus

    def value(s: float) -> np.ndarray:
        theta, _, ny, nz, _, _, _ = _poly_pieces(s, poly_n, poly_r, xi_plus)
        ax = math.cos(theta)
        ay = -nz * math.sin(theta)
        az = ny * math.sin(theta)
        return 0.5 * omega * (np.eye(2) - ax * _SX - ay * _SY - az * _SZ)

    def derivative(s: float) -> np.ndarray:
        theta, dtheta, ny, nz, dny, dnz, _ = _poly_pieces(s, poly_n, poly_r, xi_plus)
        sin_t, cos_t = math.sin(theta), math.cos(theta)
        dax = -dtheta * sin_t
        day = -(dnz * sin_t + nz * dtheta * cos_t)
        daz = dny * sin_t + ny * dtheta * cos_t
        return -0.5 * omega * (dax * _SX + day * _SY + daz * _SZ)

    return InvariantSchedule(dim=2, value=value, derivative=derivative,
                             label=f"dj-poly-{poly_n}-{poly_r}")


def dj_polynomial_evolution(f: BooleanFunctionSpec, poly_n: int, poly_r: int):
    """The unitary interpolation whose conjugation produces the polynomial
    invariant; exposed for cross-checks of conjugate_schedule."""
    if f.n != 1:
        raise ValueError("the polynomial interpolation is defined for one qubit")
    c = math.pi * f.xi_plus / (2.0 * math.sqrt(2))

    def U_of_s(s: float) -> np.ndarray:
        from .linalg import exp_generator

        gen = c * (s ** poly_n * _SY + s ** poly_r * _SZ)
        return exp_generator(gen, -1.0)  # exp(+i gen)

    return U_of_s


def dj_build(f: BooleanFunctionSpec, variant: DJVariant, T: float,
             omega: float = 1.0) -> ProblemInstance:
    """Assemble a Deutsch-Jozsa instance for the given variant.

    The initial state is the uniform superposition; the target follows the
    variant's label convention. The polynomial variant exists for one qubit
    only and reverses the measurement labels.
    """
    if T <= 0:
        raise ValueError(f"total time must be positive, got {T}")
    if omega <= 0:
        raise ValueError(f"gap parameter must be positive, got {omega}")
    N = f.size
    phi0 = uniform_superposition(N)
    U = f.oracle_operator()

    if variant.kind == "polynomial":
        if f.n != 1:
            raise ValueError("polynomial variant is defined for a single bit")
        invariant = _dj_polynomial_invariant(f, variant.poly_n, variant.poly_r, omega)
        hamiltonian = dj_polynomial_hamiltonian(variant.poly_n, variant.poly_r, f.xi_plus, T)
        # Labels reverse: a constant function ends on |->, a balanced one on |+>.
        if f.promise == CONSTANT:
            target = np.array([1, -1], dtype=complex) / math.sqrt(2)
        else:
            target = np.array([1, 1], dtype=complex) / math.sqrt(2)
    else:
        alpha = linear_alpha() if variant.kind == "constant_H" else sine_alpha()
        invariant = dj_invariant_schedule(f, alpha, omega)
        hamiltonian = commuting_hamiltonian(U, alpha, T)
        target = (U @ phi0).astype(complex)

    instance = ProblemInstance(
        kind="dj",
        invariant=invariant,
        hamiltonian=hamiltonian,
        initial_state=phi0,
        target_state=target,
        T=T,
        labels_reversed=variant.labels_reversed,
        metadata={
            "table": "".join(map(str, f.table)),
            "promise": f.promise,
            "variant": variant.kind,
            "poly_n": variant.poly_n,
            "poly_r": variant.poly_r,
            "omega": omega,
        },
    )
    return _validate_instance(instance)


def dj_classify(final: np.ndarray, n: int, labels_reversed: bool = False) -> tuple[str, float]:
    """Read the answer from the final state.

    certainty = |<+...+|final>|^2; under the promise it is exactly 1 or 0,
    so the 1/2 threshold never matters. A certainty away from both ends
    signals a broken promise (or a broken driver) and is rejected.
    """
    final = assert_state(final, tol=1e-8, what="final state")
    N = final.shape[0]
    if N != 2 ** n:
        raise ValueError(f"state dim {N} does not match {n} bits")
    certainty = float(abs(np.vdot(uniform_superposition(N), final)) ** 2)
    if 0.01 < certainty < 0.99:
        raise ValueError(
            f"promise violation: |<+..+|psi>|^2 = {certainty:.6f} is neither 0 nor 1"
        )
    label = CONSTANT if certainty > 0.5 else BALANCED
    if labels_reversed:
        label = BALANCED if label == CONSTANT else CONSTANT
    return label, certainty


def all_promise_functions(n: int):
    """Every constant and every balanced table on n bits, constants first."""
    N = 2 ** n
    yield BooleanFunctionSpec((0,) * N)
    yield BooleanFunctionSpec((1,) * N)
    for ones in itertools.combinations(range(N), N // 2):
        table = [0] * N
        for i in ones:
            table[i] = 1
        yield BooleanFunctionSpec(tuple(table))


@dataclass(frozen=True)
class GroverOracleSpec:
    """Search-problem oracle data.

    theta, delta, epsilon weight the |w><w|, cross, and |phi0><phi0| parts
    of the oracle. Reaching |w> at the end requires theta = epsilon, which
    is enforced at build time. The overlaps alpha = <w|phi0> = 1/sqrt(N)
    and beta = sqrt((N-1)/N) follow from the uniform initial state.
    """

    N: int
    w: int
    theta: float = 0.0
    delta: float = 1.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"search space must have N >= 2, got {self.N}")
        if not 0 <= self.w < self.N:
            raise ValueError(f"marked index {self.w} out of range for N={self.N}")
        if abs(self.theta - self.epsilon) > 1e-12:
            raise ValueError(
                "oracle weights must satisfy theta = epsilon "
                f"(got theta={self.theta}, epsilon={self.epsilon}); "
                "otherwise the interpolation does not terminate at |w>"
            )
        if abs(self.delta + self.epsilon * self.overlap_alpha) < 1e-12:
            raise ValueError("degenerate oracle: delta + epsilon*alpha = 0")

    @property
    def overlap_alpha(self) -> float:
        return 1.0 / math.sqrt(self.N)

    @property
    def overlap_beta(self) -> float:
        return math.sqrt((self.N - 1.0) / self.N)

    def r_vector(self) -> tuple[float, float, float]:
        """(r0, r_x, r_z) of the oracle in the {|w>, |y>} operator basis."""
        a, b = self.overlap_alpha, self.overlap_beta
        r0 = 0.5 * (self.theta + self.epsilon + 2.0 * a * self.delta)
        rx = b * (self.delta + self.epsilon * a)
        rz = 0.5 * (self.theta - self.epsilon) + a * (self.delta + self.epsilon * a)
        return r0, rx, rz


def grover_build(spec: GroverOracleSpec, T: float, sign: int = +1) -> ProblemInstance:
    """Assemble a search instance in the full N-dimensional space.

    The two-level construction lives in span{|w>, |y>} with |y> the
    normalized part of phi0 orthogonal to |w>, but all operators are built
    as N x N matrices so that any leakage out of the subspace would show up
    in the diagnostics. The driver is H = (pi / 2T) U with
    U = sign * (r_x sigma_x + r_z sigma_z)/|r| extended by the identity off
    the subspace; both sign choices reach |w| up to a global phase.
    """
    if sign not in (+1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if T <= 0:
        raise ValueError(f"total time must be positive, got {T}")
    N = spec.N
    phi0 = uniform_superposition(N)
    wket = basis_state(N, spec.w)
    a, b = spec.overlap_alpha, spec.overlap_beta
    yket = (phi0 - a * wket) / b

    _, rx, rz = spec.r_vector()
    rnorm = math.hypot(rx, rz)
    sx = np.outer(wket, yket.conj()) + np.outer(yket, wket.conj())
    sz = projector(wket) - projector(yket)
    span = projector(wket) + projector(yket)
    U = sign * (rx * sx + rz * sz) / rnorm + (np.eye(N) - span)

    hamiltonian = commuting_hamiltonian(U, linear_alpha(), T)

    P0 = projector(phi0)
    Pw = projector(wket)
    cross = np.outer(wket, phi0.conj()) - np.outer(phi0, wket.conj())
    # U phi0 = usign |w>, which fixes the sign of the invariant's cross term.
    usign = sign * math.copysign(1.0, rx * b + rz * a)
    eye = np.eye(N, dtype=complex)

    def value(s: float) -> np.ndarray:
        c = math.cos(0.5 * math.pi * s)
        d = math.sin(0.5 * math.pi * s)
        return (eye - c * c * P0 - d * d * Pw
                + usign * 0.5j * math.sin(math.pi * s) * cross)

    def derivative(s: float) -> np.ndarray:
        return (0.5 * math.pi * math.sin(math.pi * s) * (P0 - Pw)
                + usign * 0.5j * math.pi * math.cos(math.pi * s) * cross)

    invariant = InvariantSchedule(dim=N, value=value, derivative=derivative,
                                  label=f"grover-N{N}-w{spec.w}")

    instance = ProblemInstance(
        kind="grover",
        invariant=invariant,
        hamiltonian=hamiltonian,
        initial_state=phi0,
        target_state=wket,
        T=T,
        metadata={
            "N": N,
            "w": spec.w,
            "sign": sign,
            "theta": spec.theta,
            "delta": spec.delta,
            "epsilon": spec.epsilon,
            "overlap_alpha": a,
            "overlap_beta": b,
            "r_x": rx,
            "r_z": rz,
        },
    )
    return _validate_instance(instance)


def grover_run(instance: ProblemInstance,
               opts: PropagatorOptions | None = None) -> tuple[int, float]:
    """Propagate a search instance and read out the most likely index.

    Returns (found index, fidelity with |w>); a fidelity below 0.99 means
    the construction failed and is raised instead of returned.
    """
    if instance.kind != "grover":
        raise ValueError("instance was not built by grover_build")
    result = instance.run(opts)
    found = int(np.argmax(np.abs(result.final_state) ** 2))
    fidelity = float(result.final_fidelity)
    if fidelity < 0.99:
        raise ValueError(
            f"construction failure: fidelity with the marked state is {fidelity:.6f}"
        )
    return found, fidelity
