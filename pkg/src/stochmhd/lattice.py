"""Wavevector lattice for the truncated Fourier system.

The lattice K_N collects all nonzero integer wavevectors with sup-norm at
most N.  Because coefficients at -k are complex conjugates of those at k,
the state only stores one representative per +/- pair.  The representative
set splits into three sign classes:

    class 1:  k3 > 0
    class 2:  k3 = 0, k2 > 0
    class 3:  k3 = k2 = 0, k1 > 0

so that K_N is the disjoint union of the representatives and their
negatives.  Enumeration order is lexicographic for reproducible layouts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, OutOfLatticeError

Vec = tuple[int, int, int]


def is_representative(k: Vec) -> bool:
    """True if k belongs to the canonical half of the lattice (sign classes above)."""
    k1, k2, k3 = k
    if k3 != 0:
        return k3 > 0
    if k2 != 0:
        return k2 > 0
    return k1 > 0


def sign_class(k: Vec) -> int:
    """Sign class (1, 2 or 3) of a representative wavevector."""
    if not is_representative(k):
        raise ValueError(f"{k} is not a representative")
    if k[2] > 0:
        return 1
    if k[1] > 0:
        return 2
    return 3


@dataclass(frozen=True)
class ModeLattice:
    """Truncated lattice with its canonical-representative bookkeeping.

    Attributes
    ----------
    N : truncation radius (sup-norm).
    representatives : canonical half, lexicographically sorted; length D.
    full_set : all of K_N (representatives and their negatives).
    index : representative -> position in ``representatives``.
    k_arr, ksq : integer array (D, 3) and squared euclidean norms (D,).
    """

    N: int
    representatives: tuple[Vec, ...]
    full_set: frozenset[Vec]
    index: dict[Vec, int] = field(repr=False)
    k_arr: np.ndarray = field(repr=False)
    ksq: np.ndarray = field(repr=False)

    @property
    def D(self) -> int:
        return len(self.representatives)

    def __contains__(self, k: Vec) -> bool:
        return tuple(k) in self.full_set

    def to_json(self) -> str:
        return json.dumps(
            {"N": self.N, "representatives": [list(k) for k in self.representatives]}
        )


def build_lattice(N: int) -> ModeLattice:
    """Enumerate K_N and its canonical half.

    The representative count D satisfies the closed formula
    ((2N+1)^3 - 1) / 2, split across the three sign classes as
    (2N+1)^2 N, (2N+1) N and N.
    """
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ConfigurationError(f"truncation radius must be a positive integer, got {N!r}")
    N = int(N)
    rng = range(-N, N + 1)
    full = [
        (k1, k2, k3)
        for k1 in rng
        for k2 in rng
        for k3 in rng
        if (k1, k2, k3) != (0, 0, 0)
    ]
    reps = sorted(k for k in full if is_representative(k))
    index = {k: i for i, k in enumerate(reps)}
    k_arr = np.array(reps, dtype=np.int64)
    ksq = np.sum(k_arr * k_arr, axis=1).astype(np.float64)
    return ModeLattice(
        N=N,
        representatives=tuple(reps),
        full_set=frozenset(full),
        index=index,
        k_arr=k_arr,
        ksq=ksq,
    )


def canonical(k: Vec, lattice: ModeLattice) -> tuple[Vec, bool]:
    """Map k in K_N to its stored representative.

    Returns the representative and a flag set when k lies in the negated
    half (so that the stored coefficient must be conjugated on read).
    """
    k = tuple(int(c) for c in k)
    if k not in lattice.full_set:
        raise OutOfLatticeError(f"{k} is not in K_{lattice.N}")
    if is_representative(k):
        return k, False
    return (-k[0], -k[1], -k[2]), True


def leray_project(k, theta):
    """Project a per-mode coefficient onto the plane orthogonal to k.

    Works on a single 3-vector or on an array whose last axis has length 3
    (all entries projected against the same k).
    """
    k = np.asarray(k, dtype=np.float64)
    ksq = float(k @ k)
    if ksq == 0.0:
        raise ConfigurationError("cannot project at the zero wavevector")
    theta = np.asarray(theta)
    return theta - np.tensordot(theta, k, axes=([-1], [0]))[..., None] * (k / ksq)
