"""Nonholonomic (d'Alembert/Chetaev) dynamics in reduced form.

The phase space is parametrized by (q, dq_base); the constraint forces are
eliminated, leaving

    dq_dep/dt   = psi(q, v)
    Ctilde dv/dt = r(q, v)

with Ctilde_ab = d2L~/dv_a dv_b - Leg_dep . d2psi/dv_a dv_b, where Leg_dep
is the ambient velocity gradient of L in the dependent slots evaluated at
completed velocities.  The right-hand side r has the same shape as the
vakonomic one with the multipliers replaced by Leg_dep, which is how the
shared core in :mod:`vaknh.vakonomic` is reused.

The Chetaev multipliers themselves are not part of the state; they are
recovered along a trajectory from the dependent components of the ambient
Euler-Lagrange residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as _expr
from ._jets import ambient_table, ambient_velocity_gradient, restricted_table
from .system import NhState, SystemDef, check_state, complete_velocities, completed_env
from .vakonomic import _cmatrix, _reduced_dynamics

__all__ = [
    "NhDerivative",
    "ctilde",
    "nh_rhs",
    "nh_multipliers",
    "legendre_lift",
    "energy",
    "euler_lagrange_residual",
]


@dataclass(frozen=True)
class NhDerivative:
    dq: np.ndarray  # n completed velocities
    dv: np.ndarray  # n-m base accelerations


def legendre_lift(sys: SystemDef, s: NhState) -> np.ndarray:
    """Full momentum covector p_A = dL/d(velocity_A) at completed velocities
    (the embedding of the constraint submanifold into phase space)."""
    check_state(sys, s)
    vfull = complete_velocities(sys, s)
    return ambient_velocity_gradient(sys, s.q, vfull)


def _dependent_momenta(sys, q, v):
    s = NhState(q, v)
    lift = legendre_lift(sys, s)
    return np.array([lift[pos] for pos in sys.dependent_positions])


def ctilde(sys: SystemDef, s: NhState) -> np.ndarray:
    """Reduced regularity matrix (symmetric); for linear constraints it
    coincides with the vakonomic matrix at any multiplier value."""
    check_state(sys, s)
    tab = restricted_table(sys, s.q, s.v)
    return _cmatrix(tab, _dependent_momenta(sys, s.q, s.v))


def nh_rhs(sys: SystemDef, s: NhState) -> NhDerivative:
    """Nonholonomic vector field at a state; raises
    :class:`~vaknh.errors.SingularMatrixError` when regularity fails."""
    check_state(sys, s)
    mult = _dependent_momenta(sys, s.q, s.v)
    dq, dv, _ = _reduced_dynamics(sys, s.q, s.v, mult, s, "nonholonomic matrix")
    return NhDerivative(dq=dq, dv=dv)


def _full_accelerations(sys, s, accel):
    """(dq_full, ddq_full): dependent accelerations follow by
    differentiating psi along the flow."""
    tab = restricted_table(sys, s.q, s.v)
    nb = sys.n - sys.m
    dq = np.empty(sys.n)
    for a, pos in enumerate(sys.base_positions):
        dq[pos] = s.v[a]
    for k, pos in enumerate(sys.dependent_positions):
        dq[pos] = tab.psi[k].value
    ddq = np.empty(sys.n)
    for a, pos in enumerate(sys.base_positions):
        ddq[pos] = accel.dv[a]
    for k, pos in enumerate(sys.dependent_positions):
        total = 0.0
        for big_a in range(sys.n):
            total += dq[big_a] * tab.psi[k].grad[tab.qi(big_a)]
        for a in range(nb):
            total += accel.dv[a] * tab.psi[k].grad[tab.vi(a)]
        ddq[pos] = total
    return dq, ddq


def euler_lagrange_residual(sys: SystemDef, s: NhState, accel: NhDerivative) -> np.ndarray:
    """Ambient Euler-Lagrange residual d/dt(dL/dv_A) - dL/dq_A along the
    completed flow through ``s`` with base accelerations ``accel``.

    Identically zero exactly for free (unconstrained) solutions.
    """
    check_state(sys, s)
    dq, ddq = _full_accelerations(sys, s, accel)
    tab = ambient_table(sys, s.q, dq)
    res = np.empty(sys.n)
    for big_a in range(sys.n):
        va = tab.vi(big_a)
        total = -tab.lag.grad[tab.qi(big_a)]
        for big_b in range(sys.n):
            total += dq[big_b] * tab.lag.hess[tab.qi(big_b), va]
            total += ddq[big_b] * tab.lag.hess[tab.vi(big_b), va]
        res[big_a] = total
    return res


def nh_multipliers(sys: SystemDef, s: NhState, accel: NhDerivative) -> np.ndarray:
    """Chetaev constraint multipliers along the trajectory through ``s``:
    the dependent components of the Euler-Lagrange residual, with the sign
    fixed by the solved constraint form (d(constraint)/d(dep velocity) = -1)."""
    res = euler_lagrange_residual(sys, s, accel)
    return np.array([-res[pos] for pos in sys.dependent_positions])


def energy(sys: SystemDef, s: NhState) -> float:
    """Mechanical energy v . dL/dv - L at completed velocities; conserved by
    the nonholonomic flow for linear homogeneous constraints."""
    check_state(sys, s)
    vfull = complete_velocities(sys, s)
    lift = ambient_velocity_gradient(sys, s.q, vfull)
    lag = _expr.evaluate(sys.lagrangian, completed_env(sys, s.q, s.v))
    return float(np.dot(vfull, lift) - lag)
