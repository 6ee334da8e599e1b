"""Batched first/second-derivative tables for the dynamics equations.

One hyper-dual sweep with identity-seeded array channels returns the value,
full gradient and full Hessian of an expression with respect to a chosen
variable ordering.  Two tables cover everything the equations of motion
need:

* the *restricted* table differentiates the constraint expressions and the
  Lagrangian restricted to the constraint submanifold (dependent velocities
  substituted), with respect to (positions, base velocities);
* the *ambient* table differentiates the full Lagrangian with respect to
  (positions, all velocities) at completed velocities.

Hessians extracted here are exactly symmetric: the cross-derivative channel
of the hyper-dual product rule is built from matching outer products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as _expr
from .autodiff import HyperDual


def _seed_variables(values):
    """Map name -> HyperDual seeded so channel arrays broadcast into the
    (gradient, Hessian) of any function of these variables."""
    k = len(values)
    env = {}
    for i, (name, value) in enumerate(values):
        d1 = np.zeros((k, 1))
        d1[i, 0] = 1.0
        d2 = np.zeros((1, k))
        d2[0, i] = 1.0
        env[name] = HyperDual(float(value), d1, d2, 0.0)
    return env


def _parts(result, k):
    """Extract (value, gradient, hessian) from a hyper-dual sweep result."""
    if not isinstance(result, HyperDual):  # expression without seeded vars
        return float(result), np.zeros(k), np.zeros((k, k))
    value = float(result.value)
    grad = np.broadcast_to(np.asarray(result.d1, dtype=float), (k, 1))[:, 0].copy()
    hess = np.broadcast_to(np.asarray(result.d12, dtype=float), (k, k)).copy()
    return value, grad, hess


@dataclass
class Jet:
    """Value, gradient and Hessian of one scalar function at one point."""

    value: float
    grad: np.ndarray
    hess: np.ndarray


@dataclass
class RestrictedTable:
    """Jets of the constraint functions and the restricted Lagrangian.

    Variable order: the n positions followed by the n-m base velocities.
    """

    lag: Jet
    psi: list[Jet]  # one per dependent coordinate, in declaration order
    n: int
    m: int

    def qi(self, i):
        return i

    def vi(self, a):
        return self.n + a


def restricted_table(sys, q, v) -> RestrictedTable:
    """Differentiate psi and the restricted Lagrangian at (q, v).

    The dependent velocities are substituted as hyper-duals, so the
    Lagrangian jets chain through the constraint completion.
    """
    n, m = sys.n, sys.m
    k = n + (n - m)
    names = list(sys.coords) + [sys.velocity_of(c) for c in sys.base]
    values = list(zip(names, list(q) + list(v)))
    env = _seed_variables(values)
    psi = []
    for c in sys.dependent:
        value = _expr.evaluate(sys.psi[c], env)
        psi.append(Jet(*_parts(value, k)))
        env[sys.velocity_of(c)] = value
    lag = Jet(*_parts(_expr.evaluate(sys.lagrangian, env), k))
    return RestrictedTable(lag=lag, psi=psi, n=n, m=m)


@dataclass
class AmbientTable:
    """Jets of the full Lagrangian in (positions, all velocities)."""

    lag: Jet
    n: int

    def qi(self, i):
        return i

    def vi(self, i):
        return self.n + i


def ambient_table(sys, q, v_full) -> AmbientTable:
    """Differentiate the ambient Lagrangian at completed velocities, with
    every velocity treated as an independent variable."""
    n = sys.n
    names = list(sys.coords) + [sys.velocity_of(c) for c in sys.coords]
    values = list(zip(names, list(q) + list(v_full)))
    env = _seed_variables(values)
    lag = Jet(*_parts(_expr.evaluate(sys.lagrangian, env), 2 * n))
    return AmbientTable(lag=lag, n=n)


def ambient_velocity_gradient(sys, q, v_full) -> np.ndarray:
    """d(ambient L)/d(velocities) at completed velocities (the Legendre map)."""
    n = sys.n
    vel_names = [sys.velocity_of(c) for c in sys.coords]
    values = list(zip(vel_names, v_full))
    env = _seed_variables(values)
    for i, c in enumerate(sys.coords):
        env[c] = float(q[i])
    result = _expr.evaluate(sys.lagrangian, env)
    _, grad, _ = _parts(result, n)
    return grad
