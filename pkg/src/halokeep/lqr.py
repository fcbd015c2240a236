"""Periodic Riccati recursion and the cost-to-go ellipsoids it defines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linearize import LinearizedModel


class RiccatiError(RuntimeError):
    pass


@dataclass(frozen=True)
class CostWeights:
    """Quadratic weights of the periodic LQR problem and the ellipsoid level ``c``."""

    Q: np.ndarray
    R: np.ndarray
    Q_N: np.ndarray
    c: float = 1.0

    def __post_init__(self):
        for name in ("Q", "Q_N"):
            M = np.asarray(getattr(self, name))
            if not np.allclose(M, M.T) or np.linalg.eigvalsh(M).min() < -1e-12 * max(1.0, np.abs(M).max()):
                raise ValueError(f"{name} must be symmetric positive semidefinite")
        R = np.asarray(self.R)
        if not np.allclose(R, R.T) or np.linalg.eigvalsh(R).min() <= 0:
            raise ValueError("R must be symmetric positive definite")
        if not self.c > 0:
            raise ValueError("level c must be positive")

    @classmethod
    def scaled_identity(cls, q, r, c=1.0, n=6, m=3, q_terminal=None):
        q_terminal = q if q_terminal is None else q_terminal
        return cls(q * np.eye(n), r * np.eye(m), q_terminal * np.eye(n), c)

    @classmethod
    def in_units(cls, q, r, params, length_m=None, time_s=None, c=1.0, q_terminal=None):
        """Scaled-identity weights declared in a physical unit system, returned nondimensional.

        ``q`` weighs squared position and velocity error measured in
        ``length_m`` and ``length_m / time_s``; ``r`` weighs squared
        acceleration in ``length_m / time_s**2``. ``None`` keeps the system's
        own unit. The cost, and so the level ``c``, is the same number in
        either frame; only the ellipsoid's shape depends on the choice.
        """
        lu = params.length_unit_m if length_m is None else float(length_m)
        tu = params.time_unit_s if time_s is None else float(time_s)
        s_len = params.length_unit_m / lu
        s_vel = s_len * tu / params.time_unit_s
        s_acc = s_vel * tu / params.time_unit_s
        S = np.diag([s_len] * 3 + [s_vel] * 3)
        base = cls.scaled_identity(q, r, c, q_terminal=q_terminal)
        return cls(S @ base.Q @ S, s_acc ** 2 * base.R, S @ base.Q_N @ S, c)


@dataclass(frozen=True)
class CostToGo:
    """Periodic cost-to-go matrices; ``P[k]`` belongs to knot phase ``k``, ``P[-1] ~ P[0]``."""

    P: np.ndarray
    periods: int = 0
    residual: float = 0.0

    def at(self, k: int) -> np.ndarray:
        return self.P[k % (len(self.P) - 1)]


def _riccati_step(P_next, A, B, Q, R):
    BtP = B.T @ P_next
    G = np.linalg.solve(R + BtP @ B, BtP @ A)
    P = Q + A.T @ P_next @ A - A.T @ P_next @ B @ G
    return 0.5 * (P + P.T)


def _sequence(x, n):
    x = np.asarray(x, dtype=float)
    return [x] * n if x.ndim == 2 else list(x)


def _step_map(A, B, R):
    # Riccati step as X -> Q + A^T X (I + G X)^-1 A with G = B R^-1 B^T
    return A, B @ np.linalg.solve(R, B.T)


def _compose(a, b):
    """Triple of ``X -> F_a(F_b(X))`` for maps ``F(X) = Q + A^T X (I + G X)^-1 A``."""
    Aa, Ga, Qa = a
    Ab, Gb, Qb = b
    W = np.linalg.inv(np.eye(len(Aa)) + Ga @ Qb)
    A = Ab @ W @ Aa
    G = Gb + Ab @ W @ Ga @ Ab.T
    Q = Qa + Aa.T @ Qb @ W @ Aa
    return A, 0.5 * (G + G.T), 0.5 * (Q + Q.T)


def _apply(triple, X):
    A, G, Q = triple
    Y = Q + A.T @ X @ np.linalg.solve(np.eye(len(A)) + G @ X, A)
    return 0.5 * (Y + Y.T)


def _sweep(P, seed, model, Qs, Rs):
    n = model.n_segments
    P[n] = seed
    for k in range(n - 1, -1, -1):
        P[k] = _riccati_step(P[k + 1], model.A[k], model.B[k], Qs[k], Rs[k])


def _relative_change(P, P_prev, n):
    num = np.linalg.norm(P[:n] - P_prev[:n], axis=(1, 2))
    den = np.linalg.norm(P_prev[:n], axis=(1, 2))
    return float(np.max(np.where(den > 0, num / np.where(den > 0, den, 1.0), num)))


def periodic_riccati(model: LinearizedModel, weights: CostWeights, tol=1e-8, max_periods=500,
                     require_pd=True, doubling=True) -> CostToGo:
    """Iterate the backward Riccati map over whole periods until it repeats.

    The first sweep is seeded with ``Q_N`` at the end of the period; each
    further sweep is seeded with the previous sweep's value at the start.
    Convergence is declared when the largest relative Frobenius change of any
    knot's matrix between two consecutive sweeps falls below ``tol``.

    With ``doubling`` the one-period map is composed with itself repeatedly
    (each doubling costs about one sweep of work) to jump far along the
    iteration before the per-knot sweeps; lightly damped center modes make
    plain sweeps contract slowly. Doublings and sweeps both count against
    ``max_periods``; the result is always accepted by the sweep criterion.
    """
    n = model.n_segments
    Qs = _sequence(weights.Q, n)
    Rs = _sequence(weights.R, n)
    P = np.empty((n + 1, 6, 6))
    seed = np.asarray(weights.Q_N, dtype=float)
    work = 0
    if doubling:
        period = (np.eye(6), np.zeros((6, 6)), np.zeros((6, 6)))
        for k in range(n - 1, -1, -1):
            A, G = _step_map(model.A[k], model.B[k], Rs[k])
            period = _compose((A, G, Qs[k]), period)
        power = period
        x = _apply(power, seed)
        work = 1
        while work < max_periods // 2:
            power = _compose(power, power)
            x_new = _apply(power, seed)
            work += 1
            ch = np.linalg.norm(x_new - x) / max(np.linalg.norm(x), np.finfo(float).tiny)
            x = x_new
            if ch < 0.1 * tol or not np.all(np.isfinite(x)):
                break
        if np.all(np.isfinite(x)):
            seed = x
    P_prev = None
    change = np.inf
    for sweep in range(1, max_periods + 1 - work):
        _sweep(P, seed, model, Qs, Rs)
        if P_prev is not None:
            change = _relative_change(P, P_prev, n)
            if change < tol:
                break
        P_prev = P.copy()
        seed = P[0]
    else:
        raise RiccatiError(f"periodic Riccati recursion did not converge in {max_periods} periods "
                           f"(last relative change {change:.3e})")
    P[n] = P[0]
    if require_pd:
        for k in range(n):
            if np.linalg.eigvalsh(P[k]).min() <= 0:
                raise RiccatiError(f"cost-to-go lost positive definiteness at knot {k}")
    return CostToGo(P.copy(), sweep + work, change)


def ellipsoid_shape(ctg: CostToGo, c: float = None):
    """Factors ``L_k`` with ``L_k^T L_k = P_k`` so ``dx^T P_k dx <= c`` reads ``|L_k dx| <= sqrt(c)``."""
    out = np.empty_like(ctg.P)
    for k, P in enumerate(ctg.P):
        try:
            out[k] = np.linalg.cholesky(P).T
        except np.linalg.LinAlgError as exc:
            raise RiccatiError(f"P[{k}] is not numerically positive definite") from exc
    return out
