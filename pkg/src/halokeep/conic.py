"""
Sparse conic programs over zero, nonnegative and second-order cones.

Problems are stated as::

    minimize    c^T z
    subject to  G z + s = h,   s in K = K_1 x ... x K_p

where each ``K_i`` is the zero cone ``{0}``, the nonnegative orthant, or a
second-order cone ``{(t, w): |w|_2 <= t}``. Zero-cone rows are equalities.

:func:`solve` is a primal-dual interior-point method on the homogeneous
self-dual embedding with Nesterov-Todd scaling and Mehrotra predictor-corrector
steps. Each iteration factors one sparse quasidefinite KKT system.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

ZERO, NONNEG, SOC = "zero", "nonneg", "soc"
_KINDS = (ZERO, NONNEG, SOC)


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    PRIMAL_INFEASIBLE = "primal-infeasible"
    DUAL_INFEASIBLE = "dual-infeasible"
    MAX_ITERATIONS = "max-iterations"
    NUMERICAL_ERROR = "numerical-error"


@dataclass
class ConicProgram:
    """``minimize c^T z  s.t.  G z + s = h, s in cones`` with ``G`` sparse (CSC)."""

    c: np.ndarray
    G: sp.csc_matrix
    h: np.ndarray
    cones: list

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.h = np.asarray(self.h, dtype=float).ravel()
        self.G = sp.csc_matrix(self.G, dtype=float)
        self.cones = [(str(k), int(d)) for k, d in self.cones]
        m, n = self.G.shape
        if len(self.c) != n:
            raise ValueError(f"c has length {len(self.c)}, G has {n} columns")
        if len(self.h) != m:
            raise ValueError(f"h has length {len(self.h)}, G has {m} rows")
        total = 0
        for kind, dim in self.cones:
            if kind not in _KINDS:
                raise ValueError(f"unknown cone kind {kind!r}")
            if dim < 1 or (kind == SOC and dim < 2):
                raise ValueError(f"invalid {kind} cone dimension {dim}")
            total += dim
        if total != m:
            raise ValueError(f"cone dimensions sum to {total}, expected {m} rows")

    @property
    def n(self) -> int:
        return self.G.shape[1]

    @property
    def m(self) -> int:
        return self.G.shape[0]


@dataclass
class ConicSolution:
    status: Status
    z: np.ndarray
    y: np.ndarray
    s: np.ndarray
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    gap: float
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL


# --------------------------------------------------------------------------
# cone bookkeeping


class _Cones:
    """Index layout of the inequality cones (nonnegative first, then SOCs grouped by size)."""

    def __init__(self, n_lp, soc_dims):
        self.n_lp = n_lp
        self.groups = {}  # dim -> (k, dim) index array into the inequality vector
        offset = n_lp
        order = []
        for d in soc_dims:
            order.append((d, offset))
            offset += d
        for d in sorted(set(soc_dims)):
            starts = np.array([o for dd, o in order if dd == d], dtype=int)
            self.groups[d] = starts[:, None] + np.arange(d)[None, :]
        self.m = offset
        self.degree = n_lp + len(soc_dims)
        e = np.zeros(self.m)
        e[:n_lp] = 1.0
        for idx in self.groups.values():
            e[idx[:, 0]] = 1.0
        self.e = e

    def shift_into(self, u):
        """Return ``u + (1 + alpha) e`` if ``u`` is not strictly inside the cone."""
        alpha = -np.inf
        if self.n_lp:
            alpha = max(alpha, -np.min(u[: self.n_lp]))
        for idx in self.groups.values():
            v = u[idx]
            alpha = max(alpha, np.max(np.linalg.norm(v[:, 1:], axis=1) - v[:, 0]))
        if alpha < 0:
            return u.copy()
        return u + (1.0 + alpha) * self.e

    def jordan(self, u, v):
        out = np.empty_like(u)
        out[: self.n_lp] = u[: self.n_lp] * v[: self.n_lp]
        for idx in self.groups.values():
            a, b = u[idx], v[idx]
            out[idx[:, 0]] = np.einsum("ij,ij->i", a, b)
            out[idx[:, 1:]] = a[:, :1] * b[:, 1:] + b[:, :1] * a[:, 1:]
        return out

    def jordan_div(self, lam, d):
        """Solve ``lam o x = d`` for ``x``."""
        out = np.empty_like(d)
        out[: self.n_lp] = d[: self.n_lp] / lam[: self.n_lp]
        for idx in self.groups.values():
            l, v = lam[idx], d[idx]
            l0, l1 = l[:, 0], l[:, 1:]
            det = l0 * l0 - np.einsum("ij,ij->i", l1, l1)
            x0 = (l0 * v[:, 0] - np.einsum("ij,ij->i", l1, v[:, 1:])) / det
            out[idx[:, 0]] = x0
            out[idx[:, 1:]] = (v[:, 1:] - x0[:, None] * l1) / l0[:, None]
        return out

    def max_step(self, lam, d):
        """Largest ``a`` with ``lam + a d`` in the cone (``inf`` if unbounded)."""
        amax = np.inf
        if self.n_lp:
            dl = d[: self.n_lp]
            neg = dl < 0
            if np.any(neg):
                amax = min(amax, np.min(-lam[: self.n_lp][neg] / dl[neg]))
        for idx in self.groups.values():
            u, v = lam[idx], d[idx]
            a = v[:, 0] ** 2 - np.einsum("ij,ij->i", v[:, 1:], v[:, 1:])
            b = u[:, 0] * v[:, 0] - np.einsum("ij,ij->i", u[:, 1:], v[:, 1:])
            c = u[:, 0] ** 2 - np.einsum("ij,ij->i", u[:, 1:], u[:, 1:])
            amax = min(amax, _first_positive_root(a, b, c, u[:, 0], v[:, 0]))
        return amax


def _first_positive_root(a, b, c, u0, v0):
    """Smallest ``t > 0`` with ``a t^2 + 2 b t + c = 0`` (vectorized), ``c > 0`` assumed."""
    best = np.inf
    disc = b * b - a * c
    with np.errstate(divide="ignore", invalid="ignore"):
        sq = np.sqrt(np.maximum(disc, 0.0))
        q = -(b + np.where(b >= 0, sq, -sq))
        r1 = np.where(a != 0, q / a, np.inf)
        r2 = np.where(q != 0, c / q, np.inf)
        lin = np.where((np.abs(a) <= 1e-300) & (b < 0), -c / (2 * b), np.inf)
    roots = np.stack([r1, r2, lin])
    roots = np.where((disc >= 0) & (roots > 0), roots, np.inf)
    cand = roots.min(axis=0)
    # the leading coordinate must also stay nonnegative
    with np.errstate(divide="ignore"):
        t0 = np.where(v0 < 0, -u0 / v0, np.inf)
    cand = np.minimum(cand, t0)
    if cand.size:
        best = float(cand.min())
    return best


class _Scaling:
    """Nesterov-Todd scaling ``W`` with ``W z = W^-1 s = lam``."""

    def __init__(self, cones: _Cones, s, z):
        self.cones = cones
        nl = cones.n_lp
        self.lp_w = np.sqrt(s[:nl] / z[:nl])
        self.W = {}
        self.Winv = {}
        for d, idx in cones.groups.items():
            S, Z = s[idx], z[idx]
            sJs = S[:, 0] ** 2 - np.einsum("ij,ij->i", S[:, 1:], S[:, 1:])
            zJz = Z[:, 0] ** 2 - np.einsum("ij,ij->i", Z[:, 1:], Z[:, 1:])
            sJs = np.maximum(sJs, 1e-300)
            zJz = np.maximum(zJz, 1e-300)
            sb = S / np.sqrt(sJs)[:, None]
            zb = Z / np.sqrt(zJz)[:, None]
            gamma = np.sqrt(0.5 * (1.0 + np.einsum("ij,ij->i", sb, zb)))
            Jzb = zb.copy()
            Jzb[:, 1:] *= -1.0
            wb = (sb + Jzb) / (2.0 * gamma)[:, None]
            eta = (sJs / zJz) ** 0.25
            J = np.diag(np.r_[1.0, -np.ones(d - 1)])
            # W / eta is the square root of the hyperbolic reflection 2 wb wb^T - J
            v = wb.copy()
            v[:, 0] += 1.0
            v /= np.sqrt(2.0 * (wb[:, 0] + 1.0))[:, None]
            H = 2.0 * np.einsum("ki,kj->kij", v, v) - J
            Jv = v.copy()
            Jv[:, 1:] *= -1.0
            Hinv = 2.0 * np.einsum("ki,kj->kij", Jv, Jv) - J
            self.W[d] = eta[:, None, None] * H
            self.Winv[d] = Hinv / eta[:, None, None]
        self.lam = self.apply(z)

    def apply(self, v, inverse=False):
        out = np.empty_like(v)
        nl = self.cones.n_lp
        out[:nl] = v[:nl] / self.lp_w if inverse else v[:nl] * self.lp_w
        mats = self.Winv if inverse else self.W
        for d, idx in self.cones.groups.items():
            out[idx] = np.einsum("kij,kj->ki", mats[d], v[idx])
        return out

    def w2_blocks(self):
        """Diagonal entries for the LP part and dense ``W^2`` blocks per SOC group."""
        return self.lp_w ** 2, {d: np.einsum("kij,kjl->kil", W, W) for d, W in self.W.items()}


# --------------------------------------------------------------------------
# KKT system


class _KKT:
    """``[[0, A^T, G^T], [A, 0, 0], [G, 0, -W^2]]`` with static regularization."""

    def __init__(self, A, G, cones: _Cones, reg=1e-9):
        self.n = A.shape[1]
        self.p = A.shape[0]
        self.m = G.shape[0]
        self.cones = cones
        self.reg = reg
        n, p, m = self.n, self.p, self.m
        N = n + p + m
        static = sp.bmat([[None, A.T, G.T], [A, None, None], [G, None, None]], format="coo")
        # scaling block pattern, placed after the static entries
        rows, cols = [], []
        nl = cones.n_lp
        rows.append(np.arange(nl))
        cols.append(np.arange(nl))
        for d, idx in cones.groups.items():
            rr = np.repeat(idx, d, axis=1)  # (k, d*d): row index repeated over columns
            cc = np.tile(idx, (1, d))
            rows.append(rr.ravel())
            cols.append(cc.ravel())
        wr = np.concatenate(rows) + n + p
        wc = np.concatenate(cols) + n + p
        diag = np.arange(N)
        self.rows = np.concatenate([static.row, wr, diag])
        self.cols = np.concatenate([static.col, wc, diag])
        self.static_data = static.data
        self.n_w = len(wr)
        self.reg_diag = np.concatenate([np.full(n, reg), np.full(p, -reg), np.full(m, -reg)])
        self.N = N
        self.K_true = None
        self.lu = None

    def factor(self, scaling: _Scaling):
        lp_w2, blocks = scaling.w2_blocks()
        parts = [lp_w2]
        for d in self.cones.groups:
            parts.append(blocks[d].reshape(len(blocks[d]), -1).ravel())
        w2 = -np.concatenate(parts) if parts else np.zeros(0)
        data = np.concatenate([self.static_data, w2, self.reg_diag])
        K = sp.csc_matrix((data, (self.rows, self.cols)), shape=(self.N, self.N))
        true = np.concatenate([self.static_data, w2, np.zeros(self.N)])
        self.K_true = sp.csc_matrix((true, (self.rows, self.cols)), shape=(self.N, self.N))
        self.lu = spla.splu(K, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                            options={"SymmetricMode": True})

    def solve(self, rhs, refine=3):
        x = self.lu.solve(rhs)
        for _ in range(refine):
            r = rhs - self.K_true @ x
            if np.linalg.norm(r, np.inf) <= 1e-15 * (1.0 + np.linalg.norm(rhs, np.inf)):
                break
            x = x + self.lu.solve(r)
        return x


# --------------------------------------------------------------------------
# solver


def _split(program: ConicProgram):
    """Separate zero-cone rows (equalities) from cone rows; order LP then SOC."""
    eq_rows, lp_rows, soc_rows, soc_dims = [], [], [], []
    row = 0
    for kind, dim in program.cones:
        rng = list(range(row, row + dim))
        if kind == ZERO:
            eq_rows += rng
        elif kind == NONNEG:
            lp_rows += rng
        else:
            soc_rows += rng
            soc_dims.append(dim)
        row += dim
    eq_rows = np.array(eq_rows, dtype=int)
    ineq_rows = np.array(lp_rows + soc_rows, dtype=int)
    G = program.G.tocsr()
    return (G[eq_rows].tocsc(), program.h[eq_rows], G[ineq_rows].tocsc(), program.h[ineq_rows],
            eq_rows, ineq_rows, _Cones(len(lp_rows), soc_dims))


def _equilibrate(A, G, cones: _Cones, iters=15):
    """Ruiz scaling; one shared factor per second-order cone keeps cones invariant."""
    n = A.shape[1]
    D = np.ones(n)
    EA = np.ones(A.shape[0])
    EG = np.ones(G.shape[0])
    A_ = A.copy()
    G_ = G.copy()
    for _ in range(iters):
        M = sp.vstack([A_, G_]).tocsc()
        col = np.sqrt(np.maximum(abs(M).max(axis=0).toarray().ravel(), 1e-12))
        rowA = np.sqrt(np.maximum(abs(A_).max(axis=1).toarray().ravel(), 1e-12)) if A_.shape[0] else np.ones(0)
        rowG = np.sqrt(np.maximum(abs(G_).max(axis=1).toarray().ravel(), 1e-12)) if G_.shape[0] else np.ones(0)
        for idx in cones.groups.values():
            rowG[idx] = rowG[idx].max(axis=1, keepdims=True)
        col = np.clip(col, 1e-4, 1e4)
        rowA = np.clip(rowA, 1e-4, 1e4)
        rowG = np.clip(rowG, 1e-4, 1e4)
        D /= col
        EA /= rowA
        EG /= rowG
        A_ = sp.diags(1.0 / rowA) @ A_ @ sp.diags(1.0 / col)
        G_ = sp.diags(1.0 / rowG) @ G_ @ sp.diags(1.0 / col)
        if np.all(np.abs(col - 1) < 1e-2) and np.all(np.abs(rowG - 1) < 1e-2) \
                and np.all(np.abs(rowA - 1) < 1e-2):
            break
    return sp.csc_matrix(A_), sp.csc_matrix(G_), D, EA, EG


def solve(program: ConicProgram, tol=1e-8, max_iter=100, verbose=False) -> ConicSolution:
    """Solve a conic program; see the module docstring for the problem form.

    The returned solution carries unscaled primal ``z``, slack ``s`` and dual
    ``y`` (indexed like the rows of ``G``) together with residuals measured
    on the original data:

    * primal: ``|G z + s - h| / (1 + |h|)``
    * dual: ``|G^T y + c| / (1 + |c|)``
    * gap: ``|c^T z + h^T y| / (1 + |c^T z|)``

    All three must fall below ``tol``, and the dual residual and gap must also
    do so with ``c`` rescaled to unit max-norm, so the accuracy of ``z`` does
    not depend on the scale of the objective.
    """
    # iterates of infeasible programs diverge along the certificate ray;
    # overflow there is expected and caught by the finiteness checks
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _solve(program, tol, max_iter, verbose)


def _solve(program, tol, max_iter, verbose):
    A0, b0, G0, h0, eq_rows, ineq_rows, cones = _split(program)
    c0 = program.c
    n, p, m = program.n, A0.shape[0], G0.shape[0]

    A, G, D, EA, EG = _equilibrate(A0, G0, cones)
    c = D * c0
    b = EA * b0
    h = EG * h0
    # normalizing the objective makes the iterates, and so the argmin, invariant
    # to a positive rescaling of c
    cmax = np.linalg.norm(c, np.inf)
    cscale = 1.0 / cmax if cmax > 0 else 1.0
    c = c * cscale
    # the same normalization on the original data, for the stopping test
    c0max = np.linalg.norm(c0, np.inf)
    kc = 1.0 / c0max if c0max > 0 else 1.0

    kkt = _KKT(A, G, cones)
    nrm_c0 = np.linalg.norm(c0)
    nrm_bh0 = np.linalg.norm(np.concatenate([b0, h0]))

    def unscale(x, y, z, s, tau):
        zx = D * x / tau
        yy = EA * y / tau / cscale
        zz = EG * z / tau / cscale
        ss = s / EG / tau
        return zx, yy, zz, ss

    def residuals(zx, yy, zz, ss):
        rp = np.concatenate([A0 @ zx - b0, G0 @ zx + ss - h0])
        rd = A0.T @ yy + G0.T @ zz + c0
        pcost = float(c0 @ zx)
        dcost = -float(b0 @ yy + h0 @ zz)
        pres = np.linalg.norm(rp) / (1.0 + nrm_bh0)
        dres = np.linalg.norm(rd) / (1.0 + nrm_c0)
        gap = abs(pcost - dcost) / (1.0 + abs(pcost))
        # dual residual and gap of the unit-objective problem
        dres_n = kc * np.linalg.norm(rd) / (1.0 + kc * nrm_c0)
        gap_n = kc * abs(pcost - dcost) / (1.0 + kc * abs(pcost))
        return pres, dres, gap, pcost, max(dres_n, gap_n)

    # initial point: least-squares primal and dual estimates shifted into the cone
    I_scaling = _Scaling(cones, np.ones(m), np.ones(m)) if m else None
    if m:
        I_scaling.lp_w[:] = 1.0
        for d in I_scaling.W:
            I_scaling.W[d][:] = np.eye(d)
            I_scaling.Winv[d][:] = np.eye(d)
    kkt.factor(I_scaling)
    sol = kkt.solve(np.concatenate([np.zeros(n), b, h]))
    x = sol[:n]
    s = cones.shift_into(-sol[n + p:])
    sol = kkt.solve(np.concatenate([-c, np.zeros(p), np.zeros(m)]))
    y = sol[n:n + p]
    z = cones.shift_into(sol[n + p:])
    tau, kappa = 1.0, 1.0

    status = Status.MAX_ITERATIONS
    best = None
    it = 0
    for it in range(max_iter + 1):
        zx, yy, zz, ss = unscale(x, y, z, s, tau)
        pres, dres, gap, pcost, unit_res = residuals(zx, yy, zz, ss)
        if verbose:
            print(f"{it:3d} pcost {pcost: .6e} pres {pres:.2e} dres {dres:.2e} gap {gap:.2e} "
                  f"tau {tau:.2e} kappa {kappa:.2e}")
        score = max(pres, dres, gap, unit_res)
        if best is None or score < best[0]:
            best = (score, zx, yy, zz, ss, pres, dres, gap, pcost, it)
        if score < tol:
            status = Status.OPTIMAL
            break
        # infeasibility certificates on the scaled iterate
        hz_by = float(h @ z + b @ y)
        if hz_by < 0:
            res = np.linalg.norm(A.T @ y + G.T @ z) / -hz_by
            if res < tol:
                status = Status.PRIMAL_INFEASIBLE
                break
        cx = float(c @ x)
        if cx < 0:
            res = np.linalg.norm(np.concatenate([A @ x, G @ x + s])) / -cx
            if res < tol:
                status = Status.DUAL_INFEASIBLE
                break
        if it == max_iter:
            break

        rx = A.T @ y + G.T @ z + c * tau
        ry = -(A @ x) + b * tau
        rz = -(G @ x) + h * tau - s
        rt = -(c @ x) - b @ y - h @ z - kappa
        mu = (s @ z + tau * kappa) / (cones.degree + 1)

        try:
            W = _Scaling(cones, s, z)
            kkt.factor(W)
        except (RuntimeError, FloatingPointError, np.linalg.LinAlgError):
            status = Status.NUMERICAL_ERROR
            break
        lam = W.lam
        d1 = kkt.solve(np.concatenate([-c, b, h]))
        x1, y1, z1 = d1[:n], d1[n:n + p], d1[n + p:]
        den_base = -(c @ x1) - b @ y1 - h @ z1 + kappa / tau

        def direction(eta, ds_target, dk_target):
            rhs = np.concatenate([-eta * rx, eta * ry, eta * rz - W.apply(cones.jordan_div(lam, ds_target))])
            d2 = kkt.solve(rhs)
            x2, y2, z2 = d2[:n], d2[n:n + p], d2[n + p:]
            dtau = (-eta * rt + c @ x2 + b @ y2 + h @ z2 + dk_target / tau) / den_base
            dx = x2 + dtau * x1
            dy = y2 + dtau * y1
            dz = z2 + dtau * z1
            ds = W.apply(cones.jordan_div(lam, ds_target) - W.apply(dz))
            dkappa = (dk_target - kappa * dtau) / tau
            return dx, dy, dz, ds, dtau, dkappa

        def step_length(dz, ds, dtau, dkappa):
            a = min(cones.max_step(lam, W.apply(ds, inverse=True)), cones.max_step(lam, W.apply(dz)))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkappa < 0:
                a = min(a, -kappa / dkappa)
            return a

        # predictor
        aff = direction(1.0, -cones.jordan(lam, lam), -tau * kappa)
        a_aff = min(1.0, step_length(aff[2], aff[3], aff[4], aff[5]))
        sigma = min(1.0, max(0.0, (1.0 - a_aff))) ** 3
        # corrector with second-order term
        ds_t = (-cones.jordan(lam, lam)
                - cones.jordan(W.apply(aff[3], inverse=True), W.apply(aff[2]))
                + sigma * mu * cones.e)
        dk_t = -tau * kappa - aff[4] * aff[5] + sigma * mu
        dx, dy, dz, ds, dtau, dkappa = direction(1.0 - sigma, ds_t, dk_t)
        alpha = min(1.0, 0.99 * step_length(dz, ds, dtau, dkappa))
        if not np.isfinite(alpha) or alpha <= 0:
            status = Status.NUMERICAL_ERROR
            break
        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * ds
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa
        if not (np.all(np.isfinite(x)) and np.isfinite(tau)):
            status = Status.NUMERICAL_ERROR
            break

    if status == Status.OPTIMAL:
        zx, yy, zz, ss = unscale(x, y, z, s, tau)
    elif status in (Status.PRIMAL_INFEASIBLE, Status.DUAL_INFEASIBLE):
        # certificates: report the normalized ray, not an iterate
        if status == Status.PRIMAL_INFEASIBLE:
            scale = -(h @ z + b @ y)
            yy, zz = EA * y / scale, EG * z / scale
            zx, ss = np.full(n, np.nan), np.full(m, np.nan)
        else:
            scale = -(c @ x)
            zx, ss = D * x / scale, s / EG / scale
            yy, zz = np.full(p, np.nan), np.full(m, np.nan)
        pres = dres = gap = np.nan
        pcost = np.nan
    else:
        _, zx, yy, zz, ss, pres, dres, gap, pcost, _ = best

    y_full = np.empty(program.m)
    y_full[eq_rows] = yy
    y_full[ineq_rows] = zz
    s_full = np.zeros(program.m)
    s_full[ineq_rows] = ss
    return ConicSolution(status=status, z=zx, y=y_full, s=s_full, objective=pcost,
                         iterations=it, primal_residual=pres, dual_residual=dres, gap=gap,
                         info={"tau": tau, "kappa": kappa})


def kkt_residuals(program: ConicProgram, sol: ConicSolution):
    """Independent re-evaluation of a solution's optimality conditions.

    Returns primal, dual and gap residuals plus the complementary slackness
    ``s^T y`` and the worst cone violations of ``s`` and ``y``.
    """
    G, h, c = program.G, program.h, program.c
    z, y, s = sol.z, sol.y, sol.s
    pres = np.linalg.norm(G @ z + s - h) / (1.0 + np.linalg.norm(h))
    dres = np.linalg.norm(G.T @ y + c) / (1.0 + np.linalg.norm(c))
    pcost = float(c @ z)
    gap = abs(pcost + float(h @ y)) / (1.0 + abs(pcost))
    cone_viol_s = cone_viol_y = 0.0
    row = 0
    comp = 0.0
    for kind, dim in program.cones:
        sv, yv = s[row:row + dim], y[row:row + dim]
        if kind == ZERO:
            cone_viol_s = max(cone_viol_s, np.abs(sv).max())
        elif kind == NONNEG:
            cone_viol_s = max(cone_viol_s, max(0.0, -sv.min()))
            cone_viol_y = max(cone_viol_y, max(0.0, -yv.min()))
            comp += abs(float(sv @ yv))
        else:
            cone_viol_s = max(cone_viol_s, max(0.0, np.linalg.norm(sv[1:]) - sv[0]))
            cone_viol_y = max(cone_viol_y, max(0.0, np.linalg.norm(yv[1:]) - yv[0]))
            comp += abs(float(sv @ yv))
        row += dim
    return {"primal": pres, "dual": dres, "gap": gap, "complementarity": comp,
            "cone_violation_s": cone_viol_s, "cone_violation_y": cone_viol_y}


# --------------------------------------------------------------------------
# plain-text dump format
#
#   conic-program 1
#   n <n> m <m>
#   cones <kind> <dim> <kind> <dim> ...
#   c <n floats>
#   h <m floats>
#   G <nnz>
#   <row> <col> <value>      (nnz lines, 0-based)


def dump_program(program: ConicProgram, path):
    G = program.G.tocoo()
    lines = ["conic-program 1", f"n {program.n} m {program.m}",
             "cones " + " ".join(f"{k} {d}" for k, d in program.cones),
             "c " + " ".join(repr(float(v)) for v in program.c),
             "h " + " ".join(repr(float(v)) for v in program.h),
             f"G {G.nnz}"]
    lines += [f"{i} {j} {float(v)!r}" for i, j, v in zip(G.row, G.col, G.data)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_program(path) -> ConicProgram:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].split()[0] != "conic-program":
        raise ValueError(f"{path}: not a conic-program file")
    _, n, _, m = lines[1].split()
    n, m = int(n), int(m)
    tok = lines[2].split()[1:]
    cones = [(tok[i], int(tok[i + 1])) for i in range(0, len(tok), 2)]
    c = np.array([float(v) for v in lines[3].split()[1:]])
    h = np.array([float(v) for v in lines[4].split()[1:]])
    nnz = int(lines[5].split()[1])
    trip = np.array([ln.split() for ln in lines[6:6 + nnz]], dtype=float).reshape(-1, 3)
    G = sp.csc_matrix((trip[:, 2], (trip[:, 0].astype(int), trip[:, 1].astype(int))), shape=(m, n))
    return ConicProgram(c, G, h, cones)
