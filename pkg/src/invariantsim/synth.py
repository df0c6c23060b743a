"""Hamiltonian synthesis from invariant schedules.

Two routes are implemented. When the target interpolation is generated by a
single involutory operator U, the driver is the closed form

    H(s, T) = (1/T) alpha'(s) U,

constant in s for the linear profile alpha(s) = pi s / 2. When it is not,
the driver is obtained pointwise in s from the invariant equation itself:
expanding I(s) = sum_k lambda_k(s) O_k and H = sum_k h_k(s, T) O_k over an
operator basis closed under the Lie bracket turns

    dI/ds + i T [H, I] = 0

into a real linear system for the h_k, because the structure constants of a
Pauli-string basis are exact imaginary numbers. Underdetermined systems are
resolved by the minimum-norm solution; the leftover freedom (anything
commuting with I(s)) is pure gauge and never affects which state is reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import quad

from .invariant import FD_STEP, InvariantSchedule, fd_matrix_derivative
from .linalg import (
    as_operator,
    assert_hermitian,
    hermitian_eig,
    involution_defect,
    unitarity_defect,
)
from .pauli import PauliString, PauliSum, closure_defect, decompose, lie_bracket
from .reportio import write_csv

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class AlphaProfile:
    """Interpolation angle alpha(s) with its derivative.

    Valid profiles start at an integer multiple of pi and end half a turn
    later: alpha(0) = branch*pi, alpha(1) = (branch + 1/2)*pi. Anything else
    would leave the final invariant pointing somewhere other than the
    solution state.
    """

    alpha: Callable[[float], float]
    dalpha: Callable[[float], float]
    branch: int = 0

    def validate(self, tol: float = BOUNDARY_TOL) -> None:
        a0 = self.alpha(0.0) - self.branch * math.pi
        a1 = self.alpha(1.0) - (self.branch + 0.5) * math.pi
        if abs(a0) > tol or abs(a1) > tol:
            raise ValueError(
                "alpha profile violates the boundary conditions: "
                f"alpha(0) off by {a0:.3e}, alpha(1) off by {a1:.3e}"
            )


def linear_alpha(branch: int = 0) -> AlphaProfile:
    """alpha(s) = branch*pi + pi*s/2; the choice that makes H constant."""
    return AlphaProfile(
        alpha=lambda s: branch * math.pi + 0.5 * math.pi * s,
        dalpha=lambda s: 0.5 * math.pi,
        branch=branch,
    )


def sine_alpha(branch: int = 0) -> AlphaProfile:
    """alpha(s) = branch*pi + (pi/2) sin(pi s / 2); an oscillating driver."""
    return AlphaProfile(
        alpha=lambda s: branch * math.pi + 0.5 * math.pi * math.sin(0.5 * math.pi * s),
        dalpha=lambda s: 0.25 * math.pi ** 2 * math.cos(0.5 * math.pi * s),
        branch=branch,
    )


@dataclass
class HamiltonianSchedule:
    """(s, T) -> H(s, T), Hermitian for all sampled arguments.

    pauli_view, when present, returns the same operator as a PauliSum;
    scalar_profile, when present, exposes the scalar frequency profile
    omega(s, T) of a commuting-case schedule (H = omega * fixed operator).
    """

    dim: int
    value: Callable[[float, float], np.ndarray]
    pauli_view: Callable[[float, float], PauliSum] | None = None
    scalar_profile: Callable[[float, float], float] | None = None
    commuting_case: bool = False
    source: str = "user"
    diagnostics: dict = field(default_factory=dict)

    def at(self, s: float, T: float) -> np.ndarray:
        return self.value(float(s), float(T))

    def to_csv(self, path: str, T: float, grid) -> None:
        """One row per grid point: s followed by the Pauli coefficients."""
        grid = np.asarray(grid, dtype=float)
        if self.pauli_view is not None:
            sums = [self.pauli_view(s, T) for s in grid]
        else:
            n = int(round(math.log2(self.dim)))
            if 2 ** n != self.dim:
                raise ValueError("no pauli_view and dim is not a power of two")
            sums = [decompose(self.value(s, T), n) for s in grid]
        words = sorted({P.word for S in sums for P in S.terms})
        columns = ["s"] + words
        rows = []
        for s, S in zip(grid, sums):
            rows.append([s] + [S.coefficient(PauliString(w)).real for w in words])
        write_csv(path, columns, rows)


def commuting_hamiltonian(U, alpha: AlphaProfile, T: float) -> HamiltonianSchedule:
    """Closed-form driver H(s, T) = (1/T) alpha'(s) U for involutory U.

    U must be simultaneously Hermitian and unitary (hence U^2 = 1), and the
    alpha profile must satisfy its boundary conditions; both are rejected
    otherwise. With alpha(s) = pi s / 2 the result is independent of s and
    equals (pi / 2T) U.
    """
    U = assert_hermitian(U, tol=1e-10, what="interpolation generator")
    defect = unitarity_defect(U)
    if defect > 1e-10:
        raise ValueError(f"generator is not unitary: defect {defect:.3e}")
    defect = involution_defect(U)
    if defect > 1e-10:
        raise ValueError(f"generator is not involutory: defect {defect:.3e}")
    if T <= 0:
        raise ValueError(f"total time must be positive, got {T}")
    alpha.validate()
    U = U.copy()

    def value(s: float, TT: float) -> np.ndarray:
        return (alpha.dalpha(s) / TT) * U

    return HamiltonianSchedule(
        dim=U.shape[0],
        value=value,
        scalar_profile=lambda s, TT: alpha.dalpha(s) / TT,
        commuting_case=True,
        source="closed_form",
    )


class _BasisData(NamedTuple):
    strings: list[PauliString]
    gamma: np.ndarray  # real structure constants: [O_i, O_j] = i * gamma[k,i,j] O_k


def _structure_constants(basis: list[PauliString]) -> _BasisData:
    missing = closure_defect(basis)
    if missing:
        raise ValueError(
            "basis is not closed under the Lie bracket; missing "
            + ", ".join(str(P) for P in missing)
        )
    M = len(basis)
    index = {P: k for k, P in enumerate(basis)}
    gamma = np.zeros((M, M, M))
    for i, Pi in enumerate(basis):
        for j, Pj in enumerate(basis):
            if j <= i:
                continue
            br = lie_bracket(Pi, Pj)
            for R, c in br.terms.items():
                if abs(c.real) > 1e-14:
                    raise AssertionError("structure constant is not purely imaginary")
                gamma[index[R], i, j] = c.imag
                gamma[index[R], j, i] = -c.imag
    return _BasisData(strings=list(basis), gamma=gamma)


def solve_coefficients(I: InvariantSchedule, basis: list[PauliString], T: float, grid,
                       span_tol: float = 1e-9, consistency_tol: float = 1e-7) -> HamiltonianSchedule:
    """Solve the invariant equation for H(s, T) over a Pauli-string basis.

    At each s the expansion coefficients lambda_k(s) of I(s) and their
    derivative turn the operator equation into coupled linear equations

        lambda'_k(s) = T sum_i [sum_j gamma_kij lambda_j(s)] h_i(s, T),

    which are real because the i in the commutator cancels against the
    imaginary structure constants. The least-squares minimum-norm solution
    fixes the gauge reproducibly. Raises when I(s) leaves the span of the
    basis plus identity, or when no basis combination reproduces dI/ds
    (reported with the least-squares residual).
    """
    if T <= 0:
        raise ValueError(f"total time must be positive, got {T}")
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    if not basis:
        raise ValueError("empty basis")
    n = basis[0].n
    if 2 ** n != I.dim:
        raise ValueError(f"basis acts on {n} qubits but the invariant has dim {I.dim}")
    data = _structure_constants(basis)
    dense_basis = np.stack([P.dense() for P in data.strings])
    dim = I.dim
    ident = np.eye(dim)

    def coefficients(A: np.ndarray, what: str, allow_identity: bool) -> np.ndarray:
        lam = np.einsum("kij,ji->k", dense_basis, A) / dim
        if float(np.max(np.abs(lam.imag))) > 1e-10:
            raise ValueError(f"{what} has non-real basis coefficients")
        lam = lam.real
        rest = A - np.einsum("k,kij->ij", lam, dense_basis)
        if allow_identity:
            rest = rest - (np.trace(rest) / dim) * ident
        defect = float(np.max(np.abs(rest)))
        if defect > span_tol:
            raise ValueError(
                f"{what} leaves the span of the basis (defect {defect:.3e}); "
                "the linear system would be inconsistent"
            )
        return lam

    def solve_at(s: float) -> tuple[np.ndarray, float, float]:
        lam = coefficients(I.at(s), f"I({s:g})", allow_identity=True)
        dlam = coefficients(I.derivative_at(s), f"dI/ds({s:g})", allow_identity=False)
        B = np.einsum("kij,j->ki", data.gamma, lam)
        h1, _, rank, svals = np.linalg.lstsq(B, dlam, rcond=None)
        resid = float(np.linalg.norm(B @ h1 - dlam))
        pos = svals[svals > max(svals.max(initial=0.0), 1.0) * 1e-15]
        cond = float(pos.max() / pos.min()) if pos.size else math.inf
        return h1, resid, cond

    scale = max(1.0, max(float(np.linalg.norm(I.derivative_at(s))) for s in grid))
    worst_resid = 0.0
    worst_cond = 1.0
    for s in grid:
        _, resid, cond = solve_at(s)
        worst_resid = max(worst_resid, resid)
        worst_cond = max(worst_cond, cond)
    if worst_resid > consistency_tol * scale:
        raise ValueError(
            "no Hamiltonian in the basis span reproduces dI/ds: "
            f"least-squares residual {worst_resid:.3e}"
        )

    strings = data.strings

    def pauli_view(s: float, TT: float) -> PauliSum:
        h1, _, _ = solve_at(s)
        return PauliSum(n, {P: c / TT for P, c in zip(strings, h1)})

    def value(s: float, TT: float) -> np.ndarray:
        h1, _, _ = solve_at(s)
        return np.einsum("k,kij->ij", h1, dense_basis) / TT

    return HamiltonianSchedule(
        dim=dim,
        value=value,
        pauli_view=pauli_view,
        commuting_case=False,
        source="solver",
        diagnostics={
            "max_lstsq_residual": worst_resid,
            "max_condition_number": worst_cond,
        },
    )


def _poly_pieces(s: float, n: int, r: int, xi_plus: float):
    """Shared kinematics of the polynomial interpolation at time s.

    Everything is arranged as nonnegative powers of s over ghat >= 1, so the
    formulas evaluate cleanly at s = 0 (0**0 being 1) instead of hitting the
    apparent 0/0 of the raw expressions.
    """
    m = min(n, r)
    ghat = math.sqrt(s ** (2 * (n - m)) + s ** (2 * (r - m)))
    theta = (math.pi * xi_plus / math.sqrt(2)) * s ** m * ghat
    dtheta = (math.pi * xi_plus / math.sqrt(2)) * (
        n * s ** (2 * n - m - 1) + r * s ** (2 * r - m - 1)
    ) / ghat
    ny = s ** (n - m) / ghat
    nz = s ** (r - m) / ghat
    if n == r:
        dny = dnz = kappa = 0.0
    else:
        dny = (n - r) * s ** (n + 2 * r - 1 - 3 * m) / ghat ** 3
        dnz = -(n - r) * s ** (2 * n + r - 1 - 3 * m) / ghat ** 3
        kappa = (n - r) * s ** (abs(n - r) - 1) / ghat ** 2
    return theta, dtheta, ny, nz, dny, dnz, kappa


def dj_polynomial_coefficients(s: float, n: int, r: int, xi_plus: float, T: float) -> tuple[float, float, float]:
    """(h_x, h_y, h_z) of the polynomial-interpolation driver at time s.

    This is the minimum-norm solution of the invariant equation for the
    polynomial invariant: with I(s) = (1 - a(s).sigma)/2 on the Bloch
    sphere, the unique solution orthogonal to the gauge direction is
    h = (a x a') / (2T). For n = r it collapses to the commuting closed
    form -(pi n s^(n-1) xi_plus / (2 sqrt2 T)) (sigma_y + sigma_z); for
    n != r the sigma_x component -kappa sin^2(theta) / 2T appears because
    the rotation axis itself moves.
    """
    theta, dtheta, ny, nz, dny, dnz, kappa = _poly_pieces(s, n, r, xi_plus)
    sin_t, cos_t = math.sin(theta), math.cos(theta)
    hx = -kappa * sin_t * sin_t / (2.0 * T)
    hy = -(ny * dtheta + dny * sin_t * cos_t) / (2.0 * T)
    hz = -(nz * dtheta + dnz * sin_t * cos_t) / (2.0 * T)
    return hx, hy, hz


_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def dj_polynomial_hamiltonian(n: int, r: int, xi_plus: float, T: float) -> HamiltonianSchedule:
    """Single-qubit driver for the polynomial interpolation s^n, s^r.

    xi_plus is +-1 for a constant function and 0 for a balanced one (where
    the invariant is constant and the minimum-norm driver vanishes). The
    schedule satisfies the invariant residual contract on [0, 1] including
    the s -> 0 limit, and for n = r it is a commuting-case schedule with
    frequency profile pi n s^(n-1) / (2 sqrt2 T).
    """
    if n < 1 or r < 1:
        raise ValueError(f"polynomial exponents must be >= 1, got ({n}, {r})")
    if T <= 0:
        raise ValueError(f"total time must be positive, got {T}")
    if abs(xi_plus) not in (0.0, 1.0):
        raise ValueError(f"xi_plus must be in {{-1, 0, 1}}, got {xi_plus}")

    def value(s: float, TT: float) -> np.ndarray:
        hx, hy, hz = dj_polynomial_coefficients(s, n, r, xi_plus, TT)
        return hx * _SX + hy * _SY + hz * _SZ

    def pauli_view(s: float, TT: float) -> PauliSum:
        hx, hy, hz = dj_polynomial_coefficients(s, n, r, xi_plus, TT)
        return PauliSum(1, {PauliString("X"): hx, PauliString("Y"): hy, PauliString("Z"): hz})

    profile = None
    if n == r:
        def profile(s: float, TT: float) -> float:
            return math.pi * n * s ** (n - 1) / (2.0 * math.sqrt(2) * TT)

    return HamiltonianSchedule(
        dim=2,
        value=value,
        pauli_view=pauli_view,
        scalar_profile=profile,
        commuting_case=(n == r),
        source="closed_form",
    )


def effective_frequency(H: HamiltonianSchedule, T: float) -> float:
    """Mean frequency of a scalar-profile schedule: integral of omega(s, T)
    over s in [0, 1], by adaptive quadrature to 1e-10 absolute tolerance."""
    if H.scalar_profile is None:
        raise ValueError("schedule has no scalar frequency profile")
    value, _ = quad(lambda s: H.scalar_profile(s, T), 0.0, 1.0, epsabs=1e-12, limit=200)
    return float(value)


class AdiabaticityResult(NamedTuple):
    value: float
    crossing_s: float | None


def adiabaticity_metric(H: HamiltonianSchedule, T: float, grid,
                        gap_tol: float = 1e-9) -> AdiabaticityResult:
    """Worst adiabatic-condition quotient max |<n| dH/dt |m>| / (E_n - E_m)^2.

    dH/dt = (1/T) dH/ds by the chain rule in normalized time. A value much
    larger than one certifies that the run is far outside the adiabatic
    regime. Levels that touch while coupled produce an infinite value with
    the crossing location; degenerate pairs with vanishing coupling are a
    removable 0/0 and contribute nothing.
    """
    grid = np.asarray(grid, dtype=float)
    worst = 0.0
    for s in grid:
        Hs = H.at(s, T)
        dHdt = fd_matrix_derivative(lambda x: H.at(x, T), float(s)) / T
        spec = hermitian_eig(Hs, tol=1e-9)
        V, E = spec.eigenvectors, spec.eigenvalues
        coupling = V.conj().T @ dHdt @ V
        num_scale = max(1.0, float(np.max(np.abs(coupling))))
        for a in range(len(E)):
            for b in range(len(E)):
                if a == b:
                    continue
                gap = abs(E[a] - E[b])
                num = abs(coupling[a, b])
                if gap < gap_tol:
                    if num > 1e-10 * num_scale:
                        return AdiabaticityResult(value=math.inf, crossing_s=float(s))
                    continue
                worst = max(worst, num / gap ** 2)
    return AdiabaticityResult(value=worst, crossing_s=None)
