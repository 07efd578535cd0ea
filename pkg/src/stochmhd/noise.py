"""Degenerate divergence-free forcing and Wiener increment sampling.

Each forced mode carries one complex noise map per channel (velocity and
magnetic): a 3 x rank complex matrix whose range is orthogonal to the mode.
A rank-1 map is the column-vector reading (single scalar Wiener component);
rank up to 3 covers the general matrix reading, which is what makes the
trace intensity well defined.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .lattice import ModeLattice, canonical, leray_project

ORTHO_TOL = 1e-12


@dataclass
class NoiseIntensity:
    sigma_u_sq: float
    sigma_b_sq: float
    eps0_u: float
    eps0_b: float

    @property
    def total(self) -> float:
        return self.sigma_u_sq + self.sigma_b_sq

    @property
    def eps0_total(self) -> float:
        return self.eps0_u + self.eps0_b


@dataclass
class ForcingConfig:
    """Per-mode noise maps.  Unforced modes simply have no entry."""

    lattice: ModeLattice
    q_u: dict = field(default_factory=dict)  # mode -> (3, rank) complex
    q_b: dict = field(default_factory=dict)

    @property
    def forced_modes(self) -> set:
        return set(self.q_u) | set(self.q_b)

    def add(self, mode, channel: str, q) -> "ForcingConfig":
        mode = tuple(int(c) for c in mode)
        q = np.atleast_2d(np.asarray(q, dtype=complex))
        if q.shape[0] != 3:
            q = q.T
        if q.shape[0] != 3:
            raise ConfigurationError(f"noise map at {mode} must have 3 rows, got {q.shape}")
        target = self.q_u if channel == "u" else self.q_b if channel == "b" else None
        if target is None:
            raise ConfigurationError(f"channel must be 'u' or 'b', got {channel!r}")
        if mode in target:
            target[mode] = np.hstack([target[mode], q])
        else:
            target[mode] = q
        return self

    @classmethod
    def single_mode(cls, lattice, mode, sigma_sq_u=0.0, sigma_sq_b=0.0) -> "ForcingConfig":
        """Isotropic rank-2 forcing of one mode with prescribed trace intensities."""
        mode = tuple(int(c) for c in mode)
        m = np.asarray(mode, dtype=float)
        probe = np.eye(3)[np.argmin(np.abs(m))]
        e1 = np.cross(m, probe)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(m, e1)
        e2 /= np.linalg.norm(e2)
        cfg = cls(lattice)
        if sigma_sq_u > 0:
            amp = np.sqrt(sigma_sq_u / 2.0)
            cfg.add(mode, "u", amp * np.stack([e1, e2], axis=1))
        if sigma_sq_b > 0:
            amp = np.sqrt(sigma_sq_b / 2.0)
            cfg.add(mode, "b", amp * np.stack([e1, e2], axis=1))
        return cfg


@dataclass
class ForcingDiagnostic:
    kind: str
    mode: tuple
    magnitude: float


def validate_forcing(config: ForcingConfig, lattice: ModeLattice | None = None) -> list[ForcingDiagnostic]:
    lattice = lattice or config.lattice
    out = []
    for channel, table in (("u", config.q_u), ("b", config.q_b)):
        for mode, q in table.items():
            if mode not in lattice.index:
                out.append(ForcingDiagnostic(f"mode not a lattice representative ({channel})", mode, float("nan")))
                continue
            k = np.asarray(mode, dtype=float)
            viol = float(np.abs(k @ q).max()) if q.size else 0.0
            if viol > ORTHO_TOL:
                out.append(ForcingDiagnostic(f"range not orthogonal to mode ({channel})", mode, viol))
    return out


def intensity(config: ForcingConfig) -> NoiseIntensity:
    """Trace intensities (sum of squared singular values per channel).

    With the matrix reading the per-mode trace equals the squared Frobenius
    norm, so the energy-identity intensity and the hitting-bound intensity
    coincide.
    """
    def tr(table):
        return float(sum(np.sum(np.abs(q) ** 2) for q in table.values()))

    su, sb = tr(config.q_u), tr(config.q_b)
    return NoiseIntensity(su, sb, su, sb)


def sample_increments(config: ForcingConfig, dt: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """One Wiener increment per channel: dense (D, 3) complex arrays q . xi sqrt(dt).

    Modes are visited in lattice order for a deterministic draw sequence.
    """
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    lattice = config.lattice
    sq = np.sqrt(dt)
    out_u = np.zeros((lattice.D, 3), dtype=complex)
    out_b = np.zeros((lattice.D, 3), dtype=complex)
    for table, out in ((config.q_u, out_u), (config.q_b, out_b)):
        for mode in sorted(table):
            q = table[mode]
            xi = rng.standard_normal(q.shape[1])
            out[lattice.index[mode]] = (q @ xi) * sq
    return out_u, out_b


def stacked_maps(config: ForcingConfig):
    """Dense (D*3, R) real-input maps per channel, for vectorized ensembles.

    Columns follow the same (sorted mode, column) order as
    sample_increments, so both paths draw the same number of normals.
    """
    lattice = config.lattice
    out = []
    for table in (config.q_u, config.q_b):
        cols = []
        for mode in sorted(table):
            q = table[mode]
            i = lattice.index[mode]
            for jc in range(q.shape[1]):
                col = np.zeros(lattice.D * 3, dtype=complex)
                col[3 * i:3 * i + 3] = q[:, jc]
                cols.append(col)
        out.append(np.stack(cols, axis=1) if cols else np.zeros((lattice.D * 3, 0), dtype=complex))
    return out[0], out[1]


def load_forcing(path, lattice: ModeLattice) -> ForcingConfig:
    """Read a forcing config file.

    Format: JSON list of entries {"mode": [k1, k2, k3], "channel": "u"|"b",
    "columns": [[[re, im], [re, im], [re, im]], ...]} with one inner triple
    per noise column.
    """
    with open(path) as fh:
        entries = json.load(fh)
    cfg = ForcingConfig(lattice)
    for entry in entries:
        mode = tuple(int(c) for c in entry["mode"])
        rep, conj = canonical(mode, lattice)
        if conj:
            raise ConfigurationError(f"forced mode {mode} must be given as its representative {rep}")
        cols = []
        for col in entry["columns"]:
            cols.append([complex(re, im) for re, im in col])
        q = np.array(cols, dtype=complex).T  # (3, rank)
        cfg.add(rep, entry["channel"], q)
    problems = validate_forcing(cfg, lattice)
    if problems:
        raise ConfigurationError(
            "invalid forcing file: " + "; ".join(f"{p.kind} at {p.mode}" for p in problems)
        )
    return cfg
