"""Time stepping for the truncated stochastic system.

Two fixed-step schemes: plain Euler-Maruyama, and an exponential
integrator that applies the stiff per-mode decay factor exactly (the
default, since the dissipation rate grows like the squared wavenumber).
Additive noise keeps both schemes first-order weak; no adaptivity.

Ensembles are integrated in one vectorized sweep over trajectories, with
one counter-based (Philox) stream per trajectory spawned from the base
seed, so results are bit-reproducible regardless of chunking or thread
count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, ConfigurationError
from .lattice import ModeLattice
from .noise import ForcingConfig, sample_increments, stacked_maps
from .states import SpectralState
from .dynamics import drift, drift_batched, tables_for

BLOWUP_ENERGY = 1e12
_SCHEMES = ("euler_maruyama", "exponential")


@dataclass
class IntegratorConfig:
    dt: float
    t_end: float
    scheme: str = "exponential"
    record_every: int = 1
    seed: int = 0
    linear_only: bool = False  # per-mode Ornstein-Uhlenbeck reference dynamics

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.t_end < self.dt:
            raise ConfigurationError("t_end must be at least one step")
        if self.record_every < 1:
            raise ConfigurationError("record_every must be >= 1")
        if self.scheme not in _SCHEMES:
            raise ConfigurationError(f"scheme must be one of {_SCHEMES}, got {self.scheme!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class Trajectory:
    lattice: ModeLattice
    times: np.ndarray
    u: np.ndarray            # (M, D, 3) complex snapshots
    b: np.ndarray
    energy_u: np.ndarray
    energy_b: np.ndarray
    dissipation_integral: np.ndarray

    @property
    def energies(self) -> np.ndarray:
        return self.energy_u + self.energy_b

    def state_at(self, i: int) -> SpectralState:
        return SpectralState(self.lattice, self.u[i].copy(), self.b[i].copy())

    def to_csv(self, path, per_mode: bool = False) -> None:
        cols = ["t", "energy_u", "energy_b"]
        data = [self.times, self.energy_u, self.energy_b]
        if per_mode:
            for j, k in enumerate(self.lattice.representatives):
                cols.append(f"u{list(k)}".replace(" ", ""))
                data.append(np.sum(np.abs(self.u[:, j, :]) ** 2, axis=1))
            for j, k in enumerate(self.lattice.representatives):
                cols.append(f"b{list(k)}".replace(" ", ""))
                data.append(np.sum(np.abs(self.b[:, j, :]) ** 2, axis=1))
        table = np.column_stack(data)
        np.savetxt(path, table, delimiter=",", header=",".join(cols), comments="")


@dataclass
class EnsembleResult:
    lattice: ModeLattice
    times: np.ndarray
    energy_u: np.ndarray           # (B, M)
    energy_b: np.ndarray
    dissipation_integral: np.ndarray
    final_u: np.ndarray            # (B, D, 3)
    final_b: np.ndarray
    hit_times: np.ndarray | None = None       # first time total energy <= threshold
    hit_censored: np.ndarray | None = None
    u: np.ndarray | None = None    # (B, M, D, 3) when snapshots were requested
    b: np.ndarray | None = None

    @property
    def energies(self) -> np.ndarray:
        return self.energy_u + self.energy_b


def _project_batch(u, lattice):
    kf = lattice.k_arr.astype(float)[None]
    dots = (u * kf).sum(axis=2)
    u -= (dots / lattice.ksq[None])[:, :, None] * kf


def step(state: SpectralState, forcing: ForcingConfig, config: IntegratorConfig, rng) -> SpectralState:
    """One step of the chosen scheme for a single state."""
    lattice = state.lattice
    dt = config.dt
    inc_u, inc_b = sample_increments(forcing, dt, rng) if forcing.forced_modes else (0.0, 0.0)
    if config.linear_only:
        nl_u = np.zeros_like(state.u)
        nl_b = np.zeros_like(state.b)
    else:
        d = drift(state, lattice)
        nl_u = d.du + lattice.ksq[:, None] * state.u
        nl_b = d.db + lattice.ksq[:, None] * state.b
    if config.scheme == "euler_maruyama":
        u1 = state.u + dt * (-lattice.ksq[:, None] * state.u + nl_u) + inc_u
        b1 = state.b + dt * (-lattice.ksq[:, None] * state.b + nl_b) + inc_b
    else:
        lam = lattice.ksq[:, None] * dt
        decay = np.exp(-lam)
        phi1 = (1.0 - decay) / lam
        u1 = decay * state.u + dt * phi1 * nl_u + inc_u
        b1 = decay * state.b + dt * phi1 * nl_b + inc_b
    out = SpectralState(lattice, u1, b1)
    out.project()
    e = out.energy()
    if not np.isfinite(e) or e > BLOWUP_ENERGY:
        worst = int(np.argmax(np.abs(out.u).max(axis=1) + np.abs(out.b).max(axis=1)))
        raise BlowUpError(
            f"energy {e:.3e} exceeded blow-up guard", mode=lattice.representatives[worst]
        )
    return out


def _run_block(u, b, gens, forcing, config, lattice, hit_threshold_sq, record_states, t_offset=0.0):
    """Integrate one block of trajectories; u, b are (B, D, 3), modified copies."""
    B = u.shape[0]
    dt = config.dt
    n_steps = config.n_steps
    tables = tables_for(lattice)
    ksq_row = lattice.ksq[None, :, None]
    lam = lattice.ksq[:, None] * dt
    decay = np.exp(-lam)[None]
    phi1 = ((1.0 - np.exp(-lam)) / lam)[None]
    Qu, Qb = stacked_maps(forcing)
    Ru, Rb = Qu.shape[1], Qb.shape[1]
    sqdt = np.sqrt(dt)

    rec_idx = [0]
    rec_times = [t_offset]
    for nstep in range(1, n_steps + 1):
        if nstep % config.record_every == 0 or nstep == n_steps:
            rec_idx.append(nstep)
            rec_times.append(t_offset + nstep * dt)
    rec_pos = {nstep: i for i, nstep in enumerate(rec_idx)}
    M = len(rec_idx)

    eu = np.zeros((B, M))
    eb = np.zeros((B, M))
    diss = np.zeros((B, M))
    snaps_u = np.zeros((B, M, lattice.D, 3), dtype=complex) if record_states else None
    snaps_b = np.zeros_like(snaps_u) if record_states else None

    def per_traj_energy(x):
        return np.sum(np.abs(x) ** 2, axis=(1, 2))

    def record(pos):
        eu[:, pos] = per_traj_energy(u)
        eb[:, pos] = per_traj_energy(b)
        diss[:, pos] = diss_acc
        if record_states:
            snaps_u[:, pos] = u
            snaps_b[:, pos] = b

    diss_acc = np.zeros(B)
    tau = np.full(B, np.inf)
    if hit_threshold_sq is not None:
        inside = per_traj_energy(u) + per_traj_energy(b) <= hit_threshold_sq
        tau[inside] = 0.0
    record(0)

    chunk = 64
    xi_buf = None
    for nstep in range(1, n_steps + 1):
        # left-endpoint quadrature of the dissipation, matching the step
        diss_acc += dt * np.sum(
            2.0 * ksq_row * (np.abs(u) ** 2 + np.abs(b) ** 2), axis=(1, 2)
        )
        if Ru + Rb:
            off = (nstep - 1) % chunk
            if off == 0:
                n_draw = min(chunk, n_steps - nstep + 1)
                xi_buf = np.stack(
                    [g.standard_normal((n_draw, Ru + Rb)) for g in gens], axis=0
                )
            xi = xi_buf[:, off, :]
            inc_u = (xi[:, :Ru] @ Qu.T).reshape(B, lattice.D, 3) * sqdt
            inc_b = (xi[:, Ru:] @ Qb.T).reshape(B, lattice.D, 3) * sqdt
        else:
            inc_u = inc_b = 0.0

        if config.linear_only:
            nl_u = nl_b = 0.0
        else:
            du, db = drift_batched(u, b, tables)
            nl_u = du + ksq_row * u
            nl_b = db + ksq_row * b

        if config.scheme == "euler_maruyama":
            u = u + dt * (-ksq_row * u + nl_u) + inc_u
            b = b + dt * (-ksq_row * b + nl_b) + inc_b
        else:
            u = decay * u + dt * (phi1 * nl_u) + inc_u
            b = decay * b + dt * (phi1 * nl_b) + inc_b
        _project_batch(u, lattice)
        _project_batch(b, lattice)

        total = per_traj_energy(u) + per_traj_energy(b)
        if not np.all(np.isfinite(total)) or total.max() > BLOWUP_ENERGY:
            bad = int(np.argmax(np.where(np.isfinite(total), total, np.inf)))
            worst = int(np.argmax(np.abs(u[bad]).max(axis=1) + np.abs(b[bad]).max(axis=1)))
            raise BlowUpError(
                f"energy exceeded blow-up guard at t={nstep * dt:.4g}",
                time=nstep * dt,
                mode=lattice.representatives[worst],
                trajectory=bad,
                partial=(np.array(rec_times[: len(rec_idx)]), eu, eb),
            )
        if hit_threshold_sq is not None:
            newly = (total <= hit_threshold_sq) & ~np.isfinite(tau)
            tau[newly] = nstep * dt
        if nstep in rec_pos:
            record(rec_pos[nstep])

    return np.array(rec_times), eu, eb, diss, u, b, tau, snaps_u, snaps_b


def simulate_ensemble(
    init_u,
    init_b,
    forcing: ForcingConfig,
    config: IntegratorConfig,
    lattice: ModeLattice,
    n_trajectories: int = 1,
    hit_threshold_sq: float | None = None,
    record_states: bool = False,
    threads: int = 1,
) -> EnsembleResult:
    """Integrate an ensemble from a common (or per-trajectory) initial state.

    init_u/init_b are (D, 3) (shared start) or (B, D, 3).  One Philox
    stream per trajectory is spawned from config.seed; the trajectory ->
    stream assignment is independent of the thread count.
    """
    init_u = np.asarray(init_u, dtype=complex)
    init_b = np.asarray(init_b, dtype=complex)
    if init_u.ndim == 2:
        init_u = np.broadcast_to(init_u, (n_trajectories,) + init_u.shape).copy()
        init_b = np.broadcast_to(init_b, (n_trajectories,) + init_b.shape).copy()
    B = init_u.shape[0]
    seeds = np.random.SeedSequence(config.seed).spawn(B)
    gens = [np.random.Generator(np.random.Philox(s)) for s in seeds]

    threads = max(1, int(threads))
    bounds = np.linspace(0, B, min(threads, B) + 1).astype(int)
    slices = [slice(a, z) for a, z in zip(bounds[:-1], bounds[1:]) if z > a]

    def run(sl):
        return _run_block(
            init_u[sl].copy(), init_b[sl].copy(), gens[sl], forcing, config,
            lattice, hit_threshold_sq, record_states,
        )

    if len(slices) == 1:
        results = [run(slices[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(slices)) as pool:
            results = list(pool.map(run, slices))

    times = results[0][0]
    cat = lambda i: np.concatenate([r[i] for r in results], axis=0)
    tau = cat(6)
    censored = ~np.isfinite(tau)
    horizon = times[-1]
    tau = np.where(censored, horizon, tau)
    return EnsembleResult(
        lattice=lattice,
        times=times,
        energy_u=cat(1),
        energy_b=cat(2),
        dissipation_integral=cat(3),
        final_u=cat(4),
        final_b=cat(5),
        hit_times=tau if hit_threshold_sq is not None else None,
        hit_censored=censored if hit_threshold_sq is not None else None,
        u=cat(7) if record_states else None,
        b=cat(8) if record_states else None,
    )


def simulate(
    init: SpectralState,
    forcing: ForcingConfig,
    config: IntegratorConfig,
    lattice: ModeLattice | None = None,
) -> Trajectory:
    """Single recorded trajectory (deterministic given config.seed)."""
    lattice = lattice or init.lattice
    res = simulate_ensemble(
        init.u, init.b, forcing, config, lattice, n_trajectories=1, record_states=True
    )
    return Trajectory(
        lattice=lattice,
        times=res.times,
        u=res.u[0],
        b=res.b[0],
        energy_u=res.energy_u[0],
        energy_b=res.energy_b[0],
        dissipation_integral=res.dissipation_integral[0],
    )
