"""Spectral and real-coordinate state containers.

A state holds one complex velocity and one complex magnetic coefficient
per representative mode; coefficients at negated modes are implied by
conjugation and never stored, which makes the reality constraint
unviolable by construction.  Every coefficient must be orthogonal to its
wavevector (the divergence-free constraint).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import ModeLattice, canonical, leray_project

DIVERGENCE_TOL = 1e-12


@dataclass
class SpectralState:
    """Complex Fourier coefficients on the representative modes.

    ``u`` and ``b`` are (D, 3) complex arrays, row i belonging to
    ``lattice.representatives[i]``.
    """

    lattice: ModeLattice
    u: np.ndarray
    b: np.ndarray

    @classmethod
    def zeros(cls, lattice: ModeLattice) -> "SpectralState":
        D = lattice.D
        return cls(lattice, np.zeros((D, 3), dtype=complex), np.zeros((D, 3), dtype=complex))

    @classmethod
    def random(cls, lattice: ModeLattice, rng, scale: float = 1.0) -> "SpectralState":
        """Random valid state: gaussian coefficients projected mode-wise."""
        D = lattice.D
        raw_u = scale * (rng.standard_normal((D, 3)) + 1j * rng.standard_normal((D, 3)))
        raw_b = scale * (rng.standard_normal((D, 3)) + 1j * rng.standard_normal((D, 3)))
        state = cls(lattice, raw_u, raw_b)
        state.project()
        return state

    def copy(self) -> "SpectralState":
        return SpectralState(self.lattice, self.u.copy(), self.b.copy())

    def get_u(self, k) -> np.ndarray:
        """Velocity coefficient at any k in K_N (conjugated for the negated half)."""
        rep, conj = canonical(k, self.lattice)
        coef = self.u[self.lattice.index[rep]]
        return np.conj(coef) if conj else coef

    def get_b(self, k) -> np.ndarray:
        rep, conj = canonical(k, self.lattice)
        coef = self.b[self.lattice.index[rep]]
        return np.conj(coef) if conj else coef

    def project(self) -> None:
        """Re-apply the per-mode orthogonal projection in place."""
        k = self.lattice.k_arr.astype(float)
        ksq = self.lattice.ksq
        for arr in (self.u, self.b):
            arr -= ((arr * k).sum(axis=1) / ksq)[:, None] * k

    def energy_u(self) -> float:
        return float(np.sum(np.abs(self.u) ** 2))

    def energy_b(self) -> float:
        return float(np.sum(np.abs(self.b) ** 2))

    def energy(self) -> float:
        """Sum of squared coefficient magnitudes over the representative modes."""
        return self.energy_u() + self.energy_b()

    def scaled(self, factor: float) -> "SpectralState":
        return SpectralState(self.lattice, factor * self.u, factor * self.b)


@dataclass
class RealState:
    """Real/imaginary split of a spectral state: four (D, 3) real arrays."""

    lattice: ModeLattice
    r: np.ndarray
    s: np.ndarray
    rt: np.ndarray
    st: np.ndarray

    @classmethod
    def zeros(cls, lattice: ModeLattice) -> "RealState":
        D = lattice.D
        return cls(lattice, *(np.zeros((D, 3)) for _ in range(4)))

    def copy(self) -> "RealState":
        return RealState(self.lattice, self.r.copy(), self.s.copy(), self.rt.copy(), self.st.copy())

    def blocks(self):
        return self.r, self.s, self.rt, self.st


def to_real(state: SpectralState) -> RealState:
    return RealState(
        state.lattice,
        state.u.real.copy(),
        state.u.imag.copy(),
        state.b.real.copy(),
        state.b.imag.copy(),
    )


def to_complex(state: RealState) -> SpectralState:
    return SpectralState(state.lattice, state.r + 1j * state.s, state.rt + 1j * state.st)


@dataclass
class Diagnostic:
    kind: str
    mode: tuple
    magnitude: float

    def __str__(self):
        return f"{self.kind} at mode {self.mode}: {self.magnitude:.3e}"


def validate(state: SpectralState, lattice: ModeLattice | None = None) -> list[Diagnostic]:
    """List every violated invariant (divergence, shape) with its magnitude."""
    lattice = lattice or state.lattice
    out: list[Diagnostic] = []
    D = lattice.D
    for name, arr in (("u", state.u), ("b", state.b)):
        if arr.shape != (D, 3):
            out.append(Diagnostic(f"bad {name} shape {arr.shape}", (), float("nan")))
            continue
        div = np.abs((arr * lattice.k_arr).sum(axis=1))
        for i in np.nonzero(div > DIVERGENCE_TOL)[0]:
            out.append(
                Diagnostic(f"divergence violation ({name})", lattice.representatives[i], float(div[i]))
            )
    return out
