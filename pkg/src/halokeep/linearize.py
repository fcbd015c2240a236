"""Discrete-time Jacobians of the RK4 zero-order-hold step along a reference orbit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import DEFAULT_SUBSTEPS, SystemParams, _rhs, jacobian
from .halo import ReferenceOrbit

_FU = np.vstack([np.zeros((3, 3)), np.eye(3)])


def _rk4_stage_jacobians(x, u, h, params):
    mu = params.mu
    x = np.asarray(x, dtype=float)
    u0, u1, u2 = (float(c) for c in u)
    I = np.eye(6)

    k1 = _rhs(0.0, x, mu, u0, u1, u2)
    K1x = jacobian(x, mu)
    K1u = _FU

    x2 = x + 0.5 * h * k1
    k2 = _rhs(0.0, x2, mu, u0, u1, u2)
    J2 = jacobian(x2, mu)
    K2x = J2 @ (I + 0.5 * h * K1x)
    K2u = J2 @ (0.5 * h * K1u) + _FU

    x3 = x + 0.5 * h * k2
    k3 = _rhs(0.0, x3, mu, u0, u1, u2)
    J3 = jacobian(x3, mu)
    K3x = J3 @ (I + 0.5 * h * K2x)
    K3u = J3 @ (0.5 * h * K2u) + _FU

    x4 = x + h * k3
    J4 = jacobian(x4, mu)
    K4x = J4 @ (I + h * K3x)
    K4u = J4 @ (h * K3u) + _FU

    A = I + (h / 6.0) * (K1x + 2.0 * K2x + 2.0 * K3x + K4x)
    B = (h / 6.0) * (K1u + 2.0 * K2u + 2.0 * K3u + K4u)
    x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + _rhs(0.0, x4, mu, u0, u1, u2))
    return A, B, x_next


def rk4_jacobians(x, u, dt: float, params: SystemParams, substeps: int = DEFAULT_SUBSTEPS):
    """Exact ``(A, B) = (d f_d/dx, d f_d/du)`` of the RK4 zero-order-hold step.

    Differentiates every stage of every substep through the chain rule, so the
    result is the derivative of exactly
    ``step_rk4(x, u, dt, params, substeps)``.
    """
    h = dt / substeps
    A = np.eye(6)
    B = np.zeros((6, 3))
    for _ in range(substeps):
        As, Bs, x = _rk4_stage_jacobians(x, u, h, params)
        A = As @ A
        B = As @ B + Bs
    return A, B


@dataclass(frozen=True)
class LinearizedModel:
    """Per-segment error dynamics ``dx_{k+1} = A[k] dx_k + B[k] u_k`` over one period."""

    A: np.ndarray  # (N-1, 6, 6)
    B: np.ndarray  # (N-1, 6, 3)
    dt: float
    orbit_id: str = ""
    substeps: int = DEFAULT_SUBSTEPS

    @property
    def n_segments(self) -> int:
        return len(self.A)

    def at(self, k: int):
        """``(A_k, B_k)`` with periodic wrap-around of the phase index."""
        j = k % len(self.A)
        return self.A[j], self.B[j]


def discrete_jacobians(orbit: ReferenceOrbit, substeps: int = DEFAULT_SUBSTEPS) -> LinearizedModel:
    """Linearize the discrete model about every knot with zero control."""
    n = orbit.n_segments
    A = np.empty((n, 6, 6))
    B = np.empty((n, 6, 3))
    zero = np.zeros(3)
    for k in range(n):
        A[k], B[k] = rk4_jacobians(orbit.knots[k], zero, orbit.dt, orbit.params, substeps)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise FloatingPointError("non-finite Jacobian entries")
    tag = f"{orbit.params.name}:T={orbit.period:.12g}:N={orbit.n_knots}"
    return LinearizedModel(A, B, orbit.dt, tag, substeps)
