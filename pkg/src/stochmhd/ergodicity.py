"""Monte Carlo checks of the dissipation/forcing balance and long-run behaviour.

Each check returns a small result dataclass carrying the measured
quantities, the tolerance actually applied, and a boolean verdict.  The
statistical policy throughout: an identity or bound is accepted when the
empirical value sits within three Monte Carlo standard errors, plus an
explicit first-order-in-dt bias allowance where a discrete scheme is
compared against a continuous-time identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ConstraintError
from .integrator import IntegratorConfig, simulate_ensemble
from .lattice import ModeLattice
from .noise import ForcingConfig, intensity
from .states import SpectralState


def _default_init(lattice: ModeLattice, energy: float, seed: int = 2024) -> SpectralState:
    """A fixed mildly rough initial state rescaled to the requested energy."""
    rng = np.random.default_rng(seed)
    st = SpectralState.random(lattice, rng, scale=1.0)
    if energy == 0.0:
        return SpectralState.zeros(lattice)
    return st.scaled(np.sqrt(energy / st.energy()))


# ---------------------------------------------------------------------------
# energy identity


@dataclass
class AuditResult:
    lhs: float                 # E[e(T)] + E[dissipation integral]
    rhs: float                 # e(0) + (total noise intensity) * T
    residual: float
    standard_error: float
    bias_allowance: float
    n_trajectories: int
    passed: bool


def energy_balance_audit(
    forcing: ForcingConfig,
    init: SpectralState,
    dt: float,
    t_end: float,
    n_trajectories: int,
    seed: int = 0,
    scheme: str = "exponential",
    threads: int = 1,
) -> AuditResult:
    """Check E[e(T)] + E[int 2 sum |k|^2 e_k] = e(0) + sigma_total^2 T.

    The bias allowance is dt times the initial dissipation rate, the
    leading error of the left-endpoint quadrature and of a first-order
    scheme over the transient.
    """
    lattice = init.lattice
    cfg = IntegratorConfig(
        dt=dt, t_end=t_end, scheme=scheme, seed=seed,
        record_every=max(1, cfg_steps(dt, t_end)),
    )
    res = simulate_ensemble(
        init.u, init.b, forcing, cfg, lattice,
        n_trajectories=n_trajectories, threads=threads,
    )
    totals = res.energies[:, -1] + res.dissipation_integral[:, -1]
    lhs = float(totals.mean())
    rhs = init.energy() + intensity(forcing).total * t_end
    se = float(totals.std(ddof=1) / np.sqrt(n_trajectories))
    diss_rate0 = 2.0 * float(
        np.sum(lattice.ksq[:, None] * (np.abs(init.u) ** 2 + np.abs(init.b) ** 2))
    )
    sigma = intensity(forcing).total
    allowance = dt * (diss_rate0 + 2.0 * lattice.ksq.max() * sigma * t_end)
    resid = lhs - rhs
    return AuditResult(
        lhs=lhs, rhs=rhs, residual=resid, standard_error=se,
        bias_allowance=allowance, n_trajectories=n_trajectories,
        passed=abs(resid) <= 3.0 * se + allowance,
    )


def cfg_steps(dt: float, t_end: float) -> int:
    return int(round(t_end / dt))


@dataclass
class HalvingResult:
    residual_coarse: float
    residual_fine: float
    ratio: float
    passed: bool


def audit_residual_halving(
    init: SpectralState,
    dt: float,
    t_end: float,
    scheme: str = "exponential",
) -> HalvingResult:
    """Noiseless version of the audit at dt and dt/2.

    Without forcing the identity e(T) + dissipation = e(0) holds exactly
    in continuous time, so the residual isolates the first-order scheme
    bias; halving dt should roughly halve it.
    """
    lattice = init.lattice
    empty = ForcingConfig(lattice, {}, {})
    resids = []
    for step in (dt, dt / 2.0):
        cfg = IntegratorConfig(
            dt=step, t_end=t_end, scheme=scheme, record_every=cfg_steps(step, t_end)
        )
        res = simulate_ensemble(init.u, init.b, empty, cfg, lattice, n_trajectories=1)
        resids.append(
            float(res.energies[0, -1] + res.dissipation_integral[0, -1]) - init.energy()
        )
    ratio = abs(resids[1]) / abs(resids[0])
    return HalvingResult(
        residual_coarse=resids[0], residual_fine=resids[1], ratio=ratio,
        passed=0.3 <= ratio <= 0.7,
    )


# ---------------------------------------------------------------------------
# moment bound


@dataclass
class MomentBoundResult:
    mean_energy: float
    bound: float
    standard_error: float
    t_end: float
    passed: bool


def moment_bound_check(
    forcing: ForcingConfig,
    init: SpectralState,
    dt: float,
    t_end: float,
    n_trajectories: int,
    seed: int = 0,
    linear_only: bool = False,
    threads: int = 1,
) -> MomentBoundResult:
    """Check E[e(t)] <= e(0) + (total noise intensity) / 2 at the horizon.

    The smallest dissipation rate on the lattice is 2 (squared wavenumber
    at least 1 both ways in the balance), which gives the stated constant.
    """
    lattice = init.lattice
    cfg = IntegratorConfig(
        dt=dt, t_end=t_end, seed=seed, linear_only=linear_only,
        record_every=max(1, cfg_steps(dt, t_end) // 40),
    )
    res = simulate_ensemble(
        init.u, init.b, forcing, cfg, lattice,
        n_trajectories=n_trajectories, threads=threads,
    )
    finals = res.energies[:, -1]
    se = float(finals.std(ddof=1) / np.sqrt(n_trajectories))
    bound = init.energy() + intensity(forcing).total / 2.0
    return MomentBoundResult(
        mean_energy=float(finals.mean()), bound=bound, standard_error=se,
        t_end=t_end, passed=float(finals.mean()) <= bound + 3.0 * se,
    )


def ou_stationary_energy(forcing: ForcingConfig) -> float:
    """Closed-form stationary mean energy of the linearized (per-mode
    Ornstein-Uhlenbeck) dynamics: sum of intensity / (2 |k|^2) over maps."""
    total = 0.0
    for maps in (forcing.q_u, forcing.q_b):
        for mode, q in maps.items():
            ksq = float(mode[0] ** 2 + mode[1] ** 2 + mode[2] ** 2)
            total += float(np.sum(np.abs(q) ** 2)) / (2.0 * ksq)
    return total


# ---------------------------------------------------------------------------
# hitting times of the small-energy ball


@dataclass
class HittingResult:
    times: np.ndarray
    survival: np.ndarray
    bound: np.ndarray
    standard_error: np.ndarray
    delta: float
    n_censored: int
    passed: bool


def hitting_times(
    forcing: ForcingConfig,
    init: SpectralState,
    c_sq: float,
    dt: float,
    t_end: float,
    n_trajectories: int,
    seed: int = 0,
    n_grid: int = 20,
    threads: int = 1,
) -> HittingResult:
    """Survival function of the first entry time into {e <= c_sq}.

    Valid only when the ball absorbs more than the noise pumps in:
    requires c_sq > total noise intensity, giving the exponential tail
    with rate 2 delta, delta = 1 - intensity / c_sq.
    """
    eps0 = intensity(forcing).eps0_total
    if c_sq <= eps0:
        raise ConstraintError(
            f"threshold c_sq={c_sq} must exceed the noise intensity {eps0}"
        )
    delta = 1.0 - eps0 / c_sq
    lattice = init.lattice
    cfg = IntegratorConfig(
        dt=dt, t_end=t_end, seed=seed, record_every=cfg_steps(dt, t_end)
    )
    res = simulate_ensemble(
        init.u, init.b, forcing, cfg, lattice,
        n_trajectories=n_trajectories, hit_threshold_sq=c_sq, threads=threads,
    )
    tau = res.hit_times
    censored = res.hit_censored
    grid = np.linspace(t_end / n_grid, t_end, n_grid)
    # censored trajectories survive past the horizon, so P(tau >= t) is
    # estimated exactly on the grid
    survival = np.array([np.mean((tau >= t) | censored) for t in grid])
    bound = (init.energy() / c_sq) * np.exp(-2.0 * delta * grid)
    se = np.sqrt(np.clip(survival * (1.0 - survival), 0.0, None) / n_trajectories)
    ok = bool(np.all(survival <= bound + 3.0 * se))
    return HittingResult(
        times=grid, survival=survival, bound=bound, standard_error=se,
        delta=delta, n_censored=int(censored.sum()), passed=ok,
    )


# ---------------------------------------------------------------------------
# recurrence and initial-condition independence


@dataclass
class RecurrenceResult:
    horizons: tuple
    mean_visits: np.ndarray
    slope: float
    passed: bool


def recurrence_count(
    forcing: ForcingConfig,
    init: SpectralState,
    ball_energy: float,
    sample_interval: float,
    horizons: tuple = (50.0, 100.0, 200.0),
    dt: float = 0.01,
    n_trajectories: int = 32,
    seed: int = 0,
    threads: int = 1,
) -> RecurrenceResult:
    """Mean number of sample times nh with e(nh) inside the energy ball,
    per horizon prefix.  A recurrent chain keeps accumulating visits, so
    the count should grow linearly; the verdict is just slope > 0."""
    lattice = init.lattice
    t_end = max(horizons)
    every = max(1, int(round(sample_interval / dt)))
    cfg = IntegratorConfig(dt=dt, t_end=t_end, seed=seed, record_every=every)
    res = simulate_ensemble(
        init.u, init.b, forcing, cfg, lattice,
        n_trajectories=n_trajectories, threads=threads,
    )
    inside = res.energies <= ball_energy
    visits = []
    for h in horizons:
        mask = (res.times > 0) & (res.times <= h + 1e-9)
        visits.append(float(inside[:, mask].sum(axis=1).mean()))
    visits = np.array(visits)
    slope = float(np.polyfit(np.array(horizons, dtype=float), visits, 1)[0])
    return RecurrenceResult(
        horizons=tuple(horizons), mean_visits=visits, slope=slope, passed=slope > 0.0
    )


@dataclass
class MeasureCompareResult:
    horizons: tuple
    ks_distances: np.ndarray
    noise_band: float
    monotone: bool
    within_band: bool
    passed: bool


def empirical_measure_compare(
    forcing: ForcingConfig,
    init_a: SpectralState,
    init_b: SpectralState,
    horizons: tuple = (125.0, 250.0, 500.0),
    dt: float = 0.02,
    sample_interval: float = 0.5,
    n_trajectories: int = 48,
    seed: int = 0,
    band_factor: float = 1.5,
    n_subgroups: int = 4,
    threads: int = 1,
) -> MeasureCompareResult:
    """Kolmogorov-Smirnov distance between time-averaged energy samples
    started from two different states, across increasing horizons.

    Three trajectory groups run in one batch: group A from init_a, group
    B from init_b, group A' from init_a with independent noise.  Samples
    are the recorded energies over the whole window (0, h], so the
    occupation measure still carries the transient from the initial
    state, diluted like 1/h; convergence to a unique invariant measure
    predicts the A-to-B distance decreasing with horizon and ending
    within band_factor times the A-to-A' distance at the final horizon
    (the sampling noise floor).

    Each reported distance is the mean over n_subgroups disjoint
    trajectory subsets.  Averaging suppresses the variance of a single
    pooled statistic, and the finite-sample bias of the statistic also
    shrinks with the window length, so both components decrease with h.
    """
    lattice = init_a.lattice
    B = n_trajectories
    init_u = np.concatenate(
        [np.broadcast_to(s.u, (B,) + s.u.shape) for s in (init_a, init_b, init_a)]
    )
    init_b_arr = np.concatenate(
        [np.broadcast_to(s.b, (B,) + s.b.shape) for s in (init_a, init_b, init_a)]
    )
    t_end = max(horizons)
    every = max(1, int(round(sample_interval / dt)))
    cfg = IntegratorConfig(dt=dt, t_end=t_end, seed=seed, record_every=every)
    res = simulate_ensemble(
        init_u, init_b_arr, forcing, cfg, lattice,
        n_trajectories=3 * B, threads=threads,
    )
    e = res.energies
    groups = (e[:B], e[B: 2 * B], e[2 * B:])
    n_sub = max(1, min(n_subgroups, B))
    edges = np.linspace(0, B, n_sub + 1).astype(int)

    def distance(ga, gb, h):
        mask = (res.times > 0) & (res.times <= h + 1e-9)
        vals = [
            stats.ks_2samp(ga[a:z, mask].ravel(), gb[a:z, mask].ravel()).statistic
            for a, z in zip(edges[:-1], edges[1:])
        ]
        return float(np.mean(vals))

    ks = np.array([distance(groups[0], groups[1], h) for h in horizons])
    band = distance(groups[0], groups[2], t_end)
    monotone = bool(np.all(np.diff(ks) < 0.0))
    within = bool(ks[-1] <= band_factor * max(band, 1e-12))
    return MeasureCompareResult(
        horizons=tuple(horizons), ks_distances=ks, noise_band=band,
        monotone=monotone, within_band=within, passed=monotone and within,
    )
