"""Drift of the truncated velocity/magnetic system.

Two independent evaluation paths are provided on purpose:

* the complex path sums the mode-convolution directly over pairs
  (h, l) in K_N with h + l = k, reading negated-half coefficients through
  conjugation;
* the real path works in the split coordinates (r, s, r~, s~) and sums the
  three restricted convolutions over representative pairs (h + l = k,
  h - l = k, l - h = k).

Both are assembled from precomputed index tables so evaluation is a handful
of gather/scatter numpy ops, batchable over ensembles.  The second
directional derivative of the real drift doubles as the oracle for the
exact double-bracket formula.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft, sparse

from .errors import ConstraintError
from .lattice import ModeLattice, build_lattice, canonical
from .states import RealState, SpectralState, to_complex, to_real, validate


# ---------------------------------------------------------------------------
# precomputed interaction tables


@dataclass
class _PairTable:
    """Index arrays for one family of convolution pairs."""

    ik: np.ndarray   # output mode (representative index)
    ih: np.ndarray   # first factor (representative index)
    ch: np.ndarray   # conjugate flag for the first factor
    il: np.ndarray   # second factor
    cl: np.ndarray
    kvec: np.ndarray  # (T, 3) float, output wavevector
    ksq: np.ndarray   # (T,)
    accum: sparse.csr_matrix  # (D, T) summation matrix, pair rows -> output modes

    @classmethod
    def from_lists(cls, rows, k_arr):
        D = k_arr.shape[0]
        if not rows:
            z = np.zeros(0, dtype=np.int64)
            empty = sparse.csr_matrix((D, 0))
            return cls(z, z, z.astype(bool), z.copy(), z.astype(bool),
                       np.zeros((0, 3)), np.zeros(0), empty)
        ik, ih, ch, il, cl = (np.array(col) for col in zip(*rows))
        kvec = k_arr[ik].astype(float)
        T = ik.size
        accum = sparse.csr_matrix(
            (np.ones(T), (ik.astype(np.int64), np.arange(T))), shape=(D, T)
        )
        return cls(
            ik.astype(np.int64), ih.astype(np.int64), ch.astype(bool),
            il.astype(np.int64), cl.astype(bool), kvec, (kvec ** 2).sum(axis=1),
            accum,
        )


@dataclass
class ConvolutionTables:
    lattice: ModeLattice
    full: _PairTable          # h, l over all of K_N with h + l = k
    star_sum: _PairTable      # h, l representatives, h + l = k
    star_diff: _PairTable     # h - l = k (second factor conjugated)
    star_rdiff: _PairTable    # l - h = k (first factor conjugated)


@lru_cache(maxsize=None)
def _tables_for_N(N: int) -> ConvolutionTables:
    lattice = build_lattice(N)
    reps = lattice.representatives
    idx = lattice.index
    full_rows = []
    for ik, k in enumerate(reps):
        for h in lattice.full_set:
            l = (k[0] - h[0], k[1] - h[1], k[2] - h[2])
            if l == (0, 0, 0) or l not in lattice.full_set:
                continue
            (hr, hc) = canonical(h, lattice)
            (lr, lc) = canonical(l, lattice)
            full_rows.append((ik, idx[hr], hc, idx[lr], lc))

    def star(rows_for):
        rows = []
        for ik, k in enumerate(reps):
            for ih, h in enumerate(reps):
                l = rows_for(k, h)
                il = idx.get(l)
                if il is not None:
                    rows.append((ik, ih, False, il, False))
        return _PairTable.from_lists(rows, lattice.k_arr)

    return ConvolutionTables(
        lattice=lattice,
        full=_PairTable.from_lists(full_rows, lattice.k_arr),
        star_sum=star(lambda k, h: (k[0] - h[0], k[1] - h[1], k[2] - h[2])),
        star_diff=star(lambda k, h: (h[0] - k[0], h[1] - k[1], h[2] - k[2])),
        star_rdiff=star(lambda k, h: (h[0] + k[0], h[1] + k[1], h[2] + k[2])),
    )


def tables_for(lattice: ModeLattice) -> ConvolutionTables:
    return _tables_for_N(lattice.N)


# ---------------------------------------------------------------------------
# complex drift (batched core works on (D, 3, B) views)


def _gather(arr, idx, conj):
    out = arr[idx]
    if conj.any():
        out = out.copy()
        out[conj] = np.conj(out[conj])
    return out


def _scatter_pairs(table, first, second, project_output, sign, out):
    """Accumulate sign * i * (k . first_h) * [P_k] second_l into out (D, 3, B)."""
    if table.ik.size == 0:
        return
    fh = _gather(first, table.ih, table.ch)            # (T, 3, B)
    sl = _gather(second, table.il, table.cl)
    kdotf = (table.kvec[:, :, None] * fh).sum(axis=1)  # (T, B)
    if project_output:
        kdots = (table.kvec[:, :, None] * sl).sum(axis=1)
        sl = sl - (kdots / table.ksq[:, None])[:, None, :] * table.kvec[:, :, None]
    contrib = (sign * 1j) * kdotf[:, None, :] * sl
    T = contrib.shape[0]
    out += (table.accum @ contrib.reshape(T, -1)).reshape(out.shape)


def nonlinear_parts_pairs(u, b, tables: ConvolutionTables):
    """Pair-table evaluation of the four bilinear terms.

    Direct summation over the interaction table; quadratic in the mode
    count, so only used as the reference implementation against which the
    padded-transform path is checked.  Shapes as in
    nonlinear_parts_batched.
    """
    B, D, _ = u.shape
    U = np.ascontiguousarray(u.transpose(1, 2, 0))
    Bf = np.ascontiguousarray(b.transpose(1, 2, 0))
    t = tables.full
    lat = tables.lattice

    parts = []
    specs = [
        (U, U, True, -1.0),    # -i (k.u_h) P_k u_l
        (Bf, Bf, True, +1.0),  # +i (k.b_h) P_k b_l
        (U, Bf, False, -1.0),  # -i (k.u_h) b_l
        (Bf, U, False, +1.0),  # +i (k.b_h) u_l
    ]
    for first, second, proj, sign in specs:
        out = np.zeros((D, 3, B), dtype=complex)
        _scatter_pairs(t, first, second, proj, sign, out)
        parts.append(out)

    # project the magnetic rows onto the divergence-free planes
    kf = lat.k_arr.astype(float)[:, :, None]
    ksq = lat.ksq[:, None]
    for i in (2, 3):
        dots = (parts[i] * kf).sum(axis=1)
        parts[i] = parts[i] - (dots / ksq)[:, None, :] * kf
    return tuple(p.transpose(2, 0, 1) for p in parts)


# ---------------------------------------------------------------------------
# padded-transform evaluation of the convolution
#
# Interactions couple modes with infinity norm up to 2N, so a grid of
# 4N + 1 points per axis represents every product coefficient without
# wrap-around and the truncated convolution is exact.


@dataclass
class _GridPlan:
    """Index bookkeeping between representative modes and the half grid
    used by the real transforms (third axis truncated to M // 2 + 1)."""

    M: int
    scat_idx: np.ndarray    # flat half-grid slots receiving mode values
    scat_src: np.ndarray    # representative index feeding each slot
    scat_conj: np.ndarray
    gath_idx: np.ndarray    # (D,) half-grid slot holding each representative
    gath_conj: np.ndarray


@lru_cache(maxsize=None)
def _grid_plan(N: int) -> _GridPlan:
    lattice = build_lattice(N)
    M = 4 * N + 1
    H = M // 2 + 1

    def flat(vec):
        return ((vec[0] % M) * M + vec[1] % M) * H + vec[2] % M

    scat_idx, scat_src, scat_conj = [], [], []
    gath_idx, gath_conj = [], []
    for j, k in enumerate(lattice.representatives):
        for vec, conj in ((k, False), ((-k[0], -k[1], -k[2]), True)):
            if vec[2] % M < H:
                scat_idx.append(flat(vec))
                scat_src.append(j)
                scat_conj.append(conj)
        if k[2] % M < H:
            gath_idx.append(flat(k))
            gath_conj.append(False)
        else:
            gath_idx.append(flat((-k[0], -k[1], -k[2])))
            gath_conj.append(True)
    return _GridPlan(
        M=M,
        scat_idx=np.array(scat_idx),
        scat_src=np.array(scat_src),
        scat_conj=np.array(scat_conj, dtype=bool),
        gath_idx=np.array(gath_idx),
        gath_conj=np.array(gath_conj, dtype=bool),
    )


def _fields_on_grid(coef, plan):
    """(B, n, D) coefficients -> real fields (B, n, M, M, M)."""
    B, n, _ = coef.shape
    M = plan.M
    H = M // 2 + 1
    spec = np.zeros((B, n, M * M * H), dtype=complex)
    vals = coef[:, :, plan.scat_src]
    np.conj(vals, where=plan.scat_conj[None, None, :], out=vals)
    spec[:, :, plan.scat_idx] = vals
    grid = fft.irfftn(spec.reshape(B, n, M, M, H), s=(M, M, M), axes=(-3, -2, -1))
    return grid * M ** 3


def _grid_to_modes(prod, plan):
    """Real product grids (B, n, M, M, M) -> coefficients (B, n, D)."""
    M = plan.M
    spec = fft.rfftn(prod, axes=(-3, -2, -1)).reshape(prod.shape[:2] + (-1,))
    vals = spec[:, :, plan.gath_idx]
    np.conj(vals, where=plan.gath_conj[None, None, :], out=vals)
    return vals / M ** 3


def nonlinear_parts_batched(u, b, tables: ConvolutionTables):
    """The four bilinear terms for batched states u, b of shape (B, D, 3).

    Returns (advection, lorentz, transport, stretching), the velocity-row
    pair followed by the magnetic-row pair, each (B, D, 3) and
    divergence-free per mode (the magnetic rows are projected after
    assembly so the flow stays on the constraint manifold).

    Both fields are divergence free, so each term is evaluated in flux
    form on the padded grid: the convolution sum (k . u_h) v_l equals the
    transform of the component products u_m v_j contracted with i k_m.
    """
    lat = tables.lattice
    plan = _grid_plan(lat.N)
    B = u.shape[0]
    G = _fields_on_grid(
        np.concatenate((u.transpose(0, 2, 1), b.transpose(0, 2, 1)), axis=1), plan
    )
    Gu, Gb = G[:, :3], G[:, 3:]

    # 21 distinct scalar products: uu and bb symmetric pairs, ub all nine
    sym = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
    prods = np.concatenate(
        (
            np.stack([Gu[:, i] * Gu[:, j] for i, j in sym], axis=1),
            np.stack([Gb[:, i] * Gb[:, j] for i, j in sym], axis=1),
            (Gu[:, :, None] * Gb[:, None, :]).reshape((B, 9) + G.shape[2:]),
        ),
        axis=1,
    )
    S = _grid_to_modes(prods, plan)
    sym_map = np.array([[0, 1, 2], [1, 3, 4], [2, 4, 5]])
    S_uu = S[:, sym_map]
    S_bb = S[:, 6:12][:, sym_map]
    S_ub = S[:, 12:].reshape(B, 3, 3, lat.D)

    kf = lat.k_arr.astype(float)
    contract = lambda S: 1j * np.einsum("dm,bmjd->bdj", kf, S)
    adv = -contract(S_uu)
    lor = contract(S_bb)
    trans = -contract(S_ub)
    stretch = contract(S_ub.transpose(0, 2, 1, 3))

    kfb = kf[None]
    ksq = lat.ksq[None, :, None]
    out = []
    for part in (adv, lor, trans, stretch):
        dots = (part * kfb).sum(axis=2, keepdims=True)
        out.append(part - dots / ksq * kfb)
    return tuple(out)


def drift_batched(u, b, tables: ConvolutionTables):
    """Full drift (dissipation + nonlinearity) for batched states (B, D, 3)."""
    adv, lor, trans, stretch = nonlinear_parts_batched(u, b, tables)
    ksq = tables.lattice.ksq[None, :, None]
    return -ksq * u + adv + lor, -ksq * b + trans + stretch


@dataclass
class DriftOutput:
    lattice: ModeLattice
    du: np.ndarray
    db: np.ndarray


@dataclass
class NonlinearBreakdown:
    lattice: ModeLattice
    advection: np.ndarray    # -P((u.grad)u)
    lorentz: np.ndarray      # +P((b.grad)b)
    transport: np.ndarray    # -(u.grad)b
    stretching: np.ndarray   # +(b.grad)u


def _check_state(state: SpectralState):
    problems = validate(state)
    if problems:
        raise ConstraintError("invalid state: " + "; ".join(map(str, problems)))


def drift(state: SpectralState, lattice: ModeLattice | None = None) -> DriftOutput:
    lattice = lattice or state.lattice
    _check_state(state)
    du, db = drift_batched(state.u[None], state.b[None], tables_for(lattice))
    return DriftOutput(lattice, du[0], db[0])


def nonlinear_breakdown(state: SpectralState, lattice: ModeLattice | None = None) -> NonlinearBreakdown:
    lattice = lattice or state.lattice
    _check_state(state)
    adv, lor, trans, stretch = nonlinear_parts_batched(
        state.u[None], state.b[None], tables_for(lattice)
    )
    return NonlinearBreakdown(lattice, adv[0], lor[0], trans[0], stretch[0])


def energy_production(state: SpectralState, lattice: ModeLattice | None = None) -> float:
    """Nonlinear contribution to d(energy)/dt; identically zero up to rounding.

    The advection and Lorentz/stretching terms exchange energy between
    modes and between the two fields but create none in total.
    """
    lattice = lattice or state.lattice
    parts = nonlinear_breakdown(state, lattice)
    du_nl = parts.advection + parts.lorentz
    db_nl = parts.transport + parts.stretching
    return float(
        2.0 * np.real(np.sum(du_nl * np.conj(state.u)) + np.sum(db_nl * np.conj(state.b)))
    )


def energy_production_batched(u, b, tables: ConvolutionTables) -> np.ndarray:
    adv, lor, trans, stretch = nonlinear_parts_batched(u, b, tables)
    return 2.0 * np.real(
        np.sum((adv + lor) * np.conj(u), axis=(1, 2))
        + np.sum((trans + stretch) * np.conj(b), axis=(1, 2))
    )


# ---------------------------------------------------------------------------
# real-coordinate drift, assembled from the split-coordinate formulas


def _real_bilinear(table, dot_field, lin_field, project, coeff, out):
    """Accumulate coeff * (k . dot_h) * [P_k] lin_l into out (D, 3)."""
    if table.ik.size == 0:
        return
    dh = dot_field[table.ih]
    ll = lin_field[table.il]
    kdot = (table.kvec * dh).sum(axis=1)
    if project:
        ll = ll - ((table.kvec * ll).sum(axis=1) / table.ksq)[:, None] * table.kvec
    np.add.at(out, table.ik, coeff * kdot[:, None] * ll)


def real_drift_F0(state: RealState, lattice: ModeLattice | None = None) -> RealState:
    """Drift in the split coordinates, summed over representative pairs only.

    Sign pattern per block: each term is coeff * (k . X_h) * P_k(Y_l) (the
    magnetic-row terms carry no projection in the raw sums; their output is
    projected at the end, matching the complex path).
    """
    lattice = lattice or state.lattice
    tab = tables_for(lattice)
    A, Bt, C = tab.star_sum, tab.star_diff, tab.star_rdiff
    r, s, rt, st = state.blocks()
    D = lattice.D

    Fr = np.zeros((D, 3))
    Fs = np.zeros((D, 3))
    Frt = np.zeros((D, 3))
    Fst = np.zeros((D, 3))

    # velocity rows: projected terms
    for table, c1, c2 in ((A, +1, +1), (Bt, -1, +1), (C, +1, -1)):
        _real_bilinear(table, r, s, True, c1, Fr)
        _real_bilinear(table, s, r, True, c2, Fr)
    for table, c1, c2 in ((A, -1, -1), (Bt, +1, -1), (C, -1, +1)):
        _real_bilinear(table, rt, st, True, c1, Fr)
        _real_bilinear(table, st, rt, True, c2, Fr)

    for table, c1, c2 in ((A, -1, +1), (Bt, -1, -1), (C, -1, -1)):
        _real_bilinear(table, r, r, True, c1, Fs)
        _real_bilinear(table, s, s, True, c2, Fs)
    for table, c1, c2 in ((A, +1, -1), (Bt, +1, +1), (C, +1, +1)):
        _real_bilinear(table, rt, rt, True, c1, Fs)
        _real_bilinear(table, st, st, True, c2, Fs)

    # magnetic rows: raw terms, projected after assembly
    for table, c1, c2 in ((A, +1, +1), (Bt, -1, +1), (C, +1, -1)):
        _real_bilinear(table, r, st, False, c1, Frt)
        _real_bilinear(table, s, rt, False, c2, Frt)
    for table, c1, c2 in ((A, -1, -1), (Bt, +1, -1), (C, -1, +1)):
        _real_bilinear(table, rt, s, False, c1, Frt)
        _real_bilinear(table, st, r, False, c2, Frt)

    for table, c1, c2 in ((A, -1, +1), (Bt, -1, -1), (C, -1, -1)):
        _real_bilinear(table, r, rt, False, c1, Fst)
        _real_bilinear(table, s, st, False, c2, Fst)
    for table, c1, c2 in ((A, +1, -1), (Bt, +1, +1), (C, +1, +1)):
        _real_bilinear(table, rt, r, False, c1, Fst)
        _real_bilinear(table, st, s, False, c2, Fst)

    kf = lattice.k_arr.astype(float)
    ksq = lattice.ksq[:, None]
    for F in (Frt, Fst):
        F -= ((F * kf).sum(axis=1, keepdims=True) / ksq) * kf

    Fr -= lattice.ksq[:, None] * r
    Fs -= lattice.ksq[:, None] * s
    Frt -= lattice.ksq[:, None] * rt
    Fst -= lattice.ksq[:, None] * st
    return RealState(lattice, Fr, Fs, Frt, Fst)


# ---------------------------------------------------------------------------
# second directional derivative (the bracket oracle)


def _perturbation(mode, v_r, v_s, v_tr, v_ts, lattice: ModeLattice) -> RealState:
    out = RealState.zeros(lattice)
    i = lattice.index[tuple(mode)]
    out.r[i] = v_r
    out.s[i] = v_s
    out.rt[i] = v_tr
    out.st[i] = v_ts
    return out


def _real_axpy(x: RealState, y: RealState, a=1.0) -> RealState:
    return RealState(
        x.lattice, x.r + a * y.r, x.s + a * y.s, x.rt + a * y.rt, x.st + a * y.st
    )


def hessian_bilinear(V, W, lattice: ModeLattice, method: str = "bilinear", step: float = 1e-3) -> RealState:
    """Second directional derivative of the real drift along two constant fields.

    The drift is quadratic plus linear, so the result is state-independent.
    ``method="bilinear"`` evaluates F(V+W) - F(V) - F(W) exactly;
    ``method="fd"`` uses central differences at the origin with one
    Richardson extrapolation step, as an independent cross-check.
    """
    for fld in (V, W):
        m = np.asarray(fld.mode, dtype=float)
        for vec in (fld.v_r, fld.v_s, fld.v_tr, fld.v_ts):
            if abs(float(m @ np.asarray(vec, dtype=float))) > 1e-9:
                raise ConstraintError(f"field at mode {fld.mode} not orthogonal to it")

    pV = _perturbation(V.mode, V.v_r, V.v_s, V.v_tr, V.v_ts, lattice)
    pW = _perturbation(W.mode, W.v_r, W.v_s, W.v_tr, W.v_ts, lattice)

    if method == "bilinear":
        fVW = real_drift_F0(_real_axpy(pV, pW), lattice)
        fV = real_drift_F0(pV, lattice)
        fW = real_drift_F0(pW, lattice)
        return RealState(
            lattice,
            fVW.r - fV.r - fW.r,
            fVW.s - fV.s - fW.s,
            fVW.rt - fV.rt - fW.rt,
            fVW.st - fV.st - fW.st,
        )
    if method == "fd":
        def second_diff(eps):
            pp = real_drift_F0(_real_axpy(_real_axpy(RealState.zeros(lattice), pV, eps), pW, eps), lattice)
            pm = real_drift_F0(_real_axpy(_real_axpy(RealState.zeros(lattice), pV, eps), pW, -eps), lattice)
            mp = real_drift_F0(_real_axpy(_real_axpy(RealState.zeros(lattice), pV, -eps), pW, eps), lattice)
            mm = real_drift_F0(_real_axpy(_real_axpy(RealState.zeros(lattice), pV, -eps), pW, -eps), lattice)
            scale = 1.0 / (4.0 * eps * eps)
            return RealState(
                lattice,
                scale * (pp.r - pm.r - mp.r + mm.r),
                scale * (pp.s - pm.s - mp.s + mm.s),
                scale * (pp.rt - pm.rt - mp.rt + mm.rt),
                scale * (pp.st - pm.st - mp.st + mm.st),
            )

        d1 = second_diff(step)
        d2 = second_diff(step / 2.0)
        return RealState(
            lattice,
            (4.0 * d2.r - d1.r) / 3.0,
            (4.0 * d2.s - d1.s) / 3.0,
            (4.0 * d2.rt - d1.rt) / 3.0,
            (4.0 * d2.st - d1.st) / 3.0,
        )
    raise ValueError(f"unknown method {method!r}")


def real_drift_from_complex(state: RealState, lattice: ModeLattice | None = None) -> RealState:
    """Coordinate-mapped complex drift; reference for the real path."""
    lattice = lattice or state.lattice
    d = drift(to_complex(state), lattice)
    return to_real(SpectralState(lattice, d.du, d.db))
