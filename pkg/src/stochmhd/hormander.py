"""Exact double brackets of the drift with constant vector fields, and the
span-closure decision for hypoellipticity of the forced system.

For constant fields V at mode m and W at mode n, the iterated bracket
[[F0, V], W] is again a constant field, supported on the representatives of
{m+n, n-m, m-n} that lie in the lattice.  Its coefficients follow in closed
form from the (state-independent) second derivatives of the drift; the
independent cross-check is the finite-difference/bilinear Hessian of the
real drift (see dynamics.hessian_bilinear).

The closure engine tracks, for every representative mode, the subspace of
its 8-dimensional constant-field space reached from the forced modes, and
iterates bracket generation to a fixed point.  Full dimension everywhere is
exactly the spanning condition required for smooth transition densities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ConstraintError, OutOfLatticeError
from .lattice import ModeLattice, canonical, is_representative
from .states import RealState

RANK_TOL = 1e-10
_BLOCKS = ("r", "s", "rt", "st")


@dataclass
class ConstantVectorField:
    """Element of the constant-field space at one representative mode.

    Four real 3-vectors, the coefficients on the r, s, r~, s~ directions of
    the mode; each must be orthogonal to the mode.
    """

    mode: tuple
    v_r: np.ndarray
    v_s: np.ndarray
    v_tr: np.ndarray
    v_ts: np.ndarray

    def __post_init__(self):
        self.mode = tuple(int(c) for c in self.mode)
        m = np.asarray(self.mode, dtype=float)
        for name in ("v_r", "v_s", "v_tr", "v_ts"):
            vec = np.asarray(getattr(self, name), dtype=float)
            setattr(self, name, vec)
            if vec.shape != (3,):
                raise ConstraintError(f"{name} must be a 3-vector")
            if abs(float(m @ vec)) > 1e-9 * max(1.0, float(np.abs(vec).max())):
                raise ConstraintError(f"{name} at mode {self.mode} is not orthogonal to it")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.v_r, self.v_s, self.v_tr, self.v_ts])

    @classmethod
    def from_vector(cls, mode, vec) -> "ConstantVectorField":
        vec = np.asarray(vec, dtype=float)
        return cls(mode, vec[0:3], vec[3:6], vec[6:9], vec[9:12])

    def is_zero(self, tol=0.0) -> bool:
        return bool(np.abs(self.as_vector()).max() <= tol)


@dataclass
class BracketResult:
    """Sparse constant field: representative mode -> stacked (4, 3) coefficients."""

    lattice: ModeLattice
    coefficients: dict

    def at(self, mode) -> np.ndarray:
        rep, conj = canonical(mode, self.lattice)
        if conj:
            raise OutOfLatticeError(f"{mode} is not a representative; coefficients live on the canonical half")
        return self.coefficients.get(rep, np.zeros((4, 3)))

    def as_real_state(self) -> RealState:
        out = RealState.zeros(self.lattice)
        for mode, coef in self.coefficients.items():
            i = self.lattice.index[mode]
            out.r[i], out.s[i], out.rt[i], out.st[i] = coef
        return out


def _proj(k, vecs):
    """Project rows of vecs orthogonal to k."""
    ksq = float(k @ k)
    return vecs - np.outer(vecs @ k, k) / ksq


def bracket_pairs(m, n, A, B, lattice: ModeLattice) -> dict:
    """[[F0, V], W] for every pair of rows V of A (fields at m) and W of B (at n).

    A is (a, 12), B is (b, 12), rows in (r, s, r~, s~) block order.  Returns
    {representative mode: (a*b, 12) array of bracket coefficients}.
    """
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    a = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_2d(np.asarray(B, dtype=float))
    vr, vs, vtr, vts = (a[:, 3 * i:3 * i + 3] for i in range(4))
    wr, ws, wtr, wts = (b[:, 3 * i:3 * i + 3] for i in range(4))

    mi = tuple(int(c) for c in m)
    ni = tuple(int(c) for c in n)
    targets = {}
    for t in {
        (mi[0] + ni[0], mi[1] + ni[1], mi[2] + ni[2]),
        (ni[0] - mi[0], ni[1] - mi[1], ni[2] - mi[2]),
        (mi[0] - ni[0], mi[1] - ni[1], mi[2] - ni[2]),
    }:
        if t == (0, 0, 0) or t not in lattice.full_set or not is_representative(t):
            continue
        targets[t] = None

    out = {}
    for t in targets:
        k = np.asarray(t, dtype=float)
        # delta factors of the second-derivative tables at output mode k
        d1 = 1.0 if ni == (t[0] - mi[0], t[1] - mi[1], t[2] - mi[2]) else 0.0  # n = k - m
        d2 = 1.0 if ni == (mi[0] - t[0], mi[1] - t[1], mi[2] - t[2]) else 0.0  # n = m - k
        d3 = 1.0 if ni == (mi[0] + t[0], mi[1] + t[1], mi[2] + t[2]) else 0.0  # n = m + k

        def sym(x, y):
            # (x . k) P_k(y) + (y . k) P_k(x), batched over the pair grid
            return (x @ k)[:, None, None] * _proj(k, y)[None, :, :] + (
                (y @ k)[None, :, None] * _proj(k, x)[:, None, :]
            )

        def skew(x, y):
            # x (y . k) - y (x . k): first factor from V, second from W
            return x[:, None, :] * (y @ k)[None, :, None] - y[None, :, :] * (x @ k)[:, None, None]

        r_row = (
            (d1 + d2 - d3) * sym(vs, wr)
            + (d1 - d2 + d3) * sym(vr, ws)
            + (-d1 - d2 + d3) * sym(vts, wtr)
            + (-d1 + d2 - d3) * sym(vtr, wts)
        )
        s_row = (
            (-d1 - d2 - d3) * sym(vr, wr)
            + (d1 - d2 - d3) * sym(vs, ws)
            + (d1 + d2 + d3) * sym(vtr, wtr)
            + (-d1 + d2 + d3) * sym(vts, wts)
        )
        rt_row = (
            (d1 + d2 - d3) * skew(vts, wr)
            + (d1 - d2 + d3) * skew(vtr, ws)
            - (d1 + d2 - d3) * skew(vs, wtr)
            - (d1 - d2 + d3) * skew(vr, wts)
        )
        st_row = (
            -(d1 + d2 + d3) * skew(vtr, wr)
            + (d1 - d2 - d3) * skew(vts, ws)
            + (d1 + d2 + d3) * skew(vr, wtr)
            - (d1 - d2 - d3) * skew(vs, wts)
        )
        stacked = np.concatenate([r_row, s_row, rt_row, st_row], axis=2)
        out[t] = stacked.reshape(-1, 12)
    return out


def double_bracket(V: ConstantVectorField, W: ConstantVectorField, lattice: ModeLattice) -> BracketResult:
    """Iterated bracket of the drift with two constant fields."""
    for fld in (V, W):
        if tuple(fld.mode) not in lattice.index:
            raise OutOfLatticeError(f"mode {fld.mode} is not a representative of K_{lattice.N}")
    per_mode = bracket_pairs(V.mode, W.mode, V.as_vector()[None, :], W.as_vector()[None, :], lattice)
    coefs = {}
    for mode, rows in per_mode.items():
        coef = rows[0].reshape(4, 3)
        if np.abs(coef).max() > 0.0:
            coefs[mode] = coef
    return BracketResult(lattice, coefs)


def mixed_brackets(v, vt, m, w, wt, n, lattice: ModeLattice):
    """The two bracket combinations used to fuse equal-norm modes.

    With V^r/V^s carrying (v, vt) on the real/imaginary blocks at m and
    W^r/W^s likewise at n, returns

        [[F0, V^r], W^s] + [[F0, V^s], W^r],
        [[F0, V^r], W^r] - [[F0, V^s], W^s],

    supported at m+n purely on the (r, r~) and (s, s~) blocks respectively.
    """
    zero = np.zeros(3)
    Vr = ConstantVectorField(m, v, zero, vt, zero)
    Vs = ConstantVectorField(m, zero, v, zero, vt)
    Wr = ConstantVectorField(n, w, zero, wt, zero)
    Ws = ConstantVectorField(n, zero, w, zero, wt)

    def add(res1, res2, sign):
        modes = set(res1.coefficients) | set(res2.coefficients)
        out = {}
        for mode in modes:
            coef = res1.coefficients.get(mode, 0) + sign * res2.coefficients.get(mode, 0)
            if np.abs(coef).max() > 0.0:
                out[mode] = coef
        return BracketResult(lattice, out)

    first = add(double_bracket(Vr, Ws, lattice), double_bracket(Vs, Wr, lattice), +1)
    second = add(double_bracket(Vr, Wr, lattice), double_bracket(Vs, Ws, lattice), -1)
    return first, second


# ---------------------------------------------------------------------------
# closure


@dataclass
class ClosureReport:
    lattice: ModeLattice
    forced: tuple
    method: str
    attained: dict            # representative -> dimension reached (0..8)
    iterations: int
    provisional: list = field(default_factory=list)  # equal-norm fusions granted only by span

    @property
    def A_of_N(self) -> list:
        return [k for k in self.lattice.representatives if self.attained[k] == 8]

    @property
    def hypoelliptic(self) -> bool:
        return all(self.attained[k] == 8 for k in self.lattice.representatives)

    def to_json(self) -> str:
        return json.dumps(
            {
                "forced": [list(k) for k in self.forced],
                "N": self.lattice.N,
                "method": self.method,
                "per_mode_dim": {str(list(k)): int(d) for k, d in self.attained.items()},
                "A": [list(k) for k in self.A_of_N],
                "hypoelliptic": self.hypoelliptic,
                "iterations": self.iterations,
            }
        )


def full_basis(mode, lattice: ModeLattice) -> np.ndarray:
    """Orthonormal basis (8 x 12) of the constant-field space at a mode."""
    m = np.asarray(mode, dtype=float)
    # two orthonormal vectors spanning the plane orthogonal to m
    probe = np.eye(3)[np.argmin(np.abs(m))]
    e1 = np.cross(m, probe)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(m, e1)
    e2 /= np.linalg.norm(e2)
    rows = []
    for block in range(4):
        for e in (e1, e2):
            row = np.zeros(12)
            row[3 * block:3 * block + 3] = e
            rows.append(row)
    return np.array(rows)


def _canonical_forced(forced, lattice: ModeLattice):
    reps = []
    for k in forced:
        rep, _ = canonical(tuple(int(c) for c in k), lattice)
        if rep not in reps:
            reps.append(rep)
    return tuple(reps)


def _rank_basis(rows: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the row space, rank cut at RANK_TOL relative."""
    if rows.size == 0:
        return np.zeros((0, 12))
    _, sing, vt = np.linalg.svd(rows, full_matrices=False)
    if sing.size == 0 or sing[0] == 0.0:
        return np.zeros((0, 12))
    r = int(np.sum(sing > RANK_TOL * sing[0]))
    return vt[:r]


def _span_closure(forced, lattice: ModeLattice) -> ClosureReport:
    bases = {k: np.zeros((0, 12)) for k in lattice.representatives}
    dims = {k: 0 for k in lattice.representatives}
    for k in forced:
        bases[k] = full_basis(k, lattice)
        dims[k] = 8
    fresh = set(forced)
    iterations = 0
    while fresh and iterations < lattice.D + 1:
        iterations += 1
        active = [k for k in lattice.representatives if dims[k] > 0]
        pending = {}
        for m in active:
            for n in active:
                if m not in fresh and n not in fresh:
                    continue
                # skip if every in-lattice target is already saturated
                cand = []
                for t in (
                    tuple(a + b for a, b in zip(m, n)),
                    tuple(b - a for a, b in zip(m, n)),
                    tuple(a - b for a, b in zip(m, n)),
                ):
                    if t == (0, 0, 0) or t not in lattice.full_set:
                        continue
                    rep, _ = canonical(t, lattice)
                    cand.append(rep)
                if all(dims[t] == 8 for t in cand):
                    continue
                for t, rows in bracket_pairs(m, n, bases[m], bases[n], lattice).items():
                    if dims[t] == 8:
                        continue
                    pending.setdefault(t, []).append(rows)
        fresh = set()
        for t, chunks in pending.items():
            stacked = np.vstack([bases[t]] + chunks)
            newb = _rank_basis(stacked)
            if newb.shape[0] > dims[t]:
                bases[t] = newb
                dims[t] = newb.shape[0]
                fresh.add(t)
    return ClosureReport(lattice, forced, "span", dims, iterations)


def _rules_closure(forced, lattice: ModeLattice) -> ClosureReport:
    """Fixed point of the sufficient fusion rules on mode sets.

    Fusions: for attained m, n (negatives included implicitly), m + n joins
    when it is in the lattice, m and n are linearly independent and
    |m| != |n|.  Equal-norm pairs fall outside that inequality argument;
    they are granted only when an explicit bracket-rank certificate at the
    target passes, and each such grant is recorded in the provisional
    list.
    """
    attained = set(forced)
    provisional = []
    iterations = 0
    changed = True

    def equal_norm_certificate(m, n, rep):
        got = bracket_pairs(m, n, full_basis(m, lattice), full_basis(n, lattice), lattice)
        rows = got.get(rep)
        return rows is not None and _rank_basis(rows).shape[0] == 8

    while changed and iterations <= lattice.D:
        iterations += 1
        changed = False
        current = list(attained)
        for m in current:
            for n in current:
                for sm in (1, -1):
                    for sn in (1, -1):
                        mm = tuple(sm * c for c in m)
                        nn = tuple(sn * c for c in n)
                        t = tuple(a + b for a, b in zip(mm, nn))
                        if t == (0, 0, 0) or t not in lattice.full_set:
                            continue
                        rep, _ = canonical(t, lattice)
                        if rep in attained:
                            continue
                        cross = np.cross(mm, nn)
                        if not np.any(cross):
                            continue  # linearly dependent
                        if sum(c * c for c in mm) == sum(c * c for c in nn):
                            if equal_norm_certificate(m, n, rep):
                                provisional.append((mm, nn, rep))
                                attained.add(rep)
                                changed = True
                            continue
                        attained.add(rep)
                        changed = True
    dims = {k: (8 if k in attained else 0) for k in lattice.representatives}
    return ClosureReport(lattice, forced, "rules", dims, iterations, provisional)


def closure(forced, lattice: ModeLattice, method: str = "span") -> ClosureReport:
    """Bracket-reachability closure of a forced mode set."""
    forced = _canonical_forced(forced, lattice)
    if method == "span":
        return _span_closure(forced, lattice)
    if method == "rules":
        return _rules_closure(forced, lattice)
    raise ConfigurationError(f"unknown closure method {method!r}")


def verdict(forced, lattice: ModeLattice):
    """Hypoellipticity decision via the span engine."""
    report = closure(forced, lattice, method="span")
    return report.hypoelliptic, report
