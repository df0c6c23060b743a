"""Invariant schedules: construction, the defining residual, and spectral flow.

An invariant schedule I(s) on s in [0, 1] is the track the computation rides:
it is Hermitian at every s, its spectrum is constant in s, and the driving
Hamiltonian must satisfy

    dI/ds + i T [H(s, T), I(s)] = 0.

The residual of that equation, maximized over a grid, is the central
verification quantity of the whole library.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linalg import (
    Spectrum,
    as_operator,
    assert_hermitian,
    assert_state,
    commutator,
    dagger,
    frobenius_norm,
    hermitian_eig,
    projector,
)
from .reportio import write_csv

# Central-difference step for d/ds when no analytic derivative is available.
# Balances truncation against cancellation for matrix entries of order one;
# a Richardson stage at h/2 removes the leading error term.
FD_STEP = 1e-5


def fd_matrix_derivative(f: Callable[[float], np.ndarray], s: float,
                         h: float = FD_STEP, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Finite-difference d f / d s with Richardson extrapolation.

    Uses a central stencil in the interior and one-sided second-order
    stencils within h of the domain edges, so f is never evaluated outside
    [lo, hi].
    """

    def stencil(hh: float) -> np.ndarray:
        if s - hh < lo:
            return (-3.0 * f(s) + 4.0 * f(s + hh) - f(s + 2.0 * hh)) / (2.0 * hh)
        if s + hh > hi:
            return (3.0 * f(s) - 4.0 * f(s - hh) + f(s - 2.0 * hh)) / (2.0 * hh)
        return (f(s + hh) - f(s - hh)) / (2.0 * hh)

    d_h = stencil(h)
    d_h2 = stencil(h / 2.0)
    return d_h2 + (d_h2 - d_h) / 3.0


@dataclass
class InvariantSchedule:
    """s -> I(s), with an optional analytic derivative.

    value(s) must be Hermitian for every s in [0, 1]; the eigenvalues of
    I(s) are constants of the motion, which spectrum_flow verifies. The
    ground state map uses the deterministic eigensolver phase convention.
    """

    dim: int
    value: Callable[[float], np.ndarray]
    derivative: Callable[[float], np.ndarray] | None = None
    label: str = ""

    def at(self, s: float) -> np.ndarray:
        return self.value(float(s))

    def derivative_at(self, s: float, h: float = FD_STEP) -> np.ndarray:
        if self.derivative is not None:
            return self.derivative(float(s))
        return fd_matrix_derivative(self.value, float(s), h=h)

    def spectrum_at(self, s: float) -> Spectrum:
        return hermitian_eig(self.at(s), tol=1e-10)

    def ground_state(self, s: float) -> np.ndarray:
        return self.spectrum_at(s).ground_state


@dataclass
class GapReport:
    """Eigenvalue tracks of I(s) over a grid, with drift and gap summaries."""

    grid: np.ndarray
    eigenvalue_tracks: np.ndarray  # shape (len(grid), dim), ascending per row
    min_gap: float
    max_eigenvalue_drift: float
    degenerate: bool

    def to_csv(self, path: str) -> None:
        dim = self.eigenvalue_tracks.shape[1]
        columns = ["s"] + [f"lambda_{i}" for i in range(dim)] + ["gap"]
        rows = []
        for k, s in enumerate(self.grid):
            tracks = self.eigenvalue_tracks[k]
            rows.append([s, *tracks, tracks[1] - tracks[0]])
        write_csv(path, columns, rows)


def projector_invariant(phi0: np.ndarray, omega: float = 1.0) -> np.ndarray:
    """omega * (1 - |phi0><phi0|): ground state phi0 at eigenvalue 0, all
    other levels degenerate at the gap parameter omega."""
    phi0 = assert_state(phi0)
    if omega <= 0:
        raise ValueError(f"gap parameter must be positive, got {omega}")
    dim = phi0.shape[0]
    return omega * (np.eye(dim) - projector(phi0))


def conjugate_schedule(U_of_s: Callable[[float], np.ndarray], I0: np.ndarray,
                       identity_tol: float = 1e-10, label: str = "") -> InvariantSchedule:
    """I(s) = U(s) I0 U(s)^dag.

    Unitary similarity preserves the spectrum of I0 exactly, so any schedule
    built this way has constant eigenvalue tracks by construction. U(0) must
    be the identity; the derivative falls back to finite differences.
    """
    I0 = assert_hermitian(I0, tol=1e-10, what="initial invariant")
    dim = I0.shape[0]
    U0 = as_operator(U_of_s(0.0))
    defect = float(np.max(np.abs(U0 - np.eye(dim))))
    if defect > identity_tol:
        raise ValueError(f"U(0) differs from the identity by {defect:.3e}")

    def value(s: float) -> np.ndarray:
        U = as_operator(U_of_s(s))
        return U @ I0 @ dagger(U)

    return InvariantSchedule(dim=dim, value=value, derivative=None, label=label)


def invariant_residual(I: InvariantSchedule, H, T: float, grid) -> float:
    """max over the grid of || dI/ds + i T [H(s,T), I(s)] ||_F.

    H is anything exposing value(s, T) -> matrix (a HamiltonianSchedule).
    Uses the schedule's analytic derivative when present, else the
    Richardson-checked central difference.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    if T <= 0:
        raise ValueError(f"total time must be positive, got {T}")
    worst = 0.0
    for s in grid:
        Is = I.at(s)
        Hs = as_operator(H.value(s, T))
        if Hs.shape != Is.shape:
            raise ValueError(f"dimension mismatch: H is {Hs.shape}, I is {Is.shape}")
        R = I.derivative_at(s) + 1j * T * commutator(Hs, Is)
        worst = max(worst, frobenius_norm(R))
    return worst


def residual_profile(I: InvariantSchedule, H, T: float, grid) -> np.ndarray:
    """Per-grid-point Frobenius norm of the invariant-equation residual."""
    grid = np.asarray(grid, dtype=float)
    out = np.empty(grid.shape)
    for k, s in enumerate(grid):
        R = I.derivative_at(s) + 1j * T * commutator(as_operator(H.value(s, T)), I.at(s))
        out[k] = frobenius_norm(R)
    return out


def spectrum_flow(I: InvariantSchedule, grid, degeneracy_tol: float = 1e-9) -> GapReport:
    """Eigenvalue tracks over the grid.

    Drift is the worst deviation of any track from its s=0 value; the gap is
    the distance between the two lowest levels. A gap below degeneracy_tol
    anywhere flags the report as degenerate.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    tracks = np.empty((grid.size, I.dim))
    for k, s in enumerate(grid):
        tracks[k] = np.linalg.eigvalsh(assert_hermitian(I.at(s), tol=1e-10, what="I(s)"))
    drift = float(np.max(np.abs(tracks - tracks[0])))
    gaps = tracks[:, 1] - tracks[:, 0]
    min_gap = float(np.min(gaps))
    return GapReport(
        grid=grid,
        eigenvalue_tracks=tracks,
        min_gap=min_gap,
        max_eigenvalue_drift=drift,
        degenerate=bool(min_gap < degeneracy_tol),
    )
