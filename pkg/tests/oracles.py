"""Independent reference implementations used as test oracles.

* ``reference_evaluate``: a direct recursive evaluator for the expression
  language, kept deliberately separate from the package evaluator but with
  identical operation order, so results must agree to 0 ULP.

* ``vak_dae_trajectory`` / ``nh_dae_trajectory``: brute-force solvers that
  integrate the *ambient* formulations of the two dynamics.  Each step
  solves an (n+m) x (n+m) linear system for the full accelerations and the
  multiplier unknowns, with the constraints imposed only through their time
  derivative -- a completely different route to the flow than the reduced
  equations in the package.  Integration is delegated to scipy's RK45, so
  the stepper is independent too.
"""

import math

import numpy as np
from scipy.integrate import solve_ivp

from vaknh import expr as E
from vaknh._jets import ambient_table, ambient_velocity_gradient, restricted_table
from vaknh.system import complete_velocities


# ---------------------------------------------------------------------------
# Expression reference evaluator
# ---------------------------------------------------------------------------


def reference_evaluate(e, env):
    if isinstance(e, E.Const):
        return e.value
    if isinstance(e, E.Var):
        return env[e.name]
    if isinstance(e, E.Unary):
        x = reference_evaluate(e.arg, env)
        if e.op == "neg":
            return -x
        if e.op == "sqrt":
            if x < 0:
                raise ValueError("sqrt domain")
            return math.sqrt(x)
        if e.op == "log":
            if x <= 0:
                raise ValueError("log domain")
            return math.log(x)
        return getattr(math, e.op)(x)
    if isinstance(e, E.Binary):
        a = reference_evaluate(e.left, env)
        b = reference_evaluate(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0:
            raise ZeroDivisionError("division by zero")
        return a / b
    if isinstance(e, E.Power):
        x = reference_evaluate(e.base, env)
        if e.integer:
            n = int(e.exponent)
            if n == 0:
                return 1.0
            result = x
            for _ in range(abs(n) - 1):
                result = result * x
            if n < 0:
                if result == 0:
                    raise ZeroDivisionError("zero base, negative exponent")
                return 1.0 / result
            return result
        if x <= 0:
            raise ValueError("pow domain")
        return math.pow(x, e.exponent)
    raise TypeError(e)


# ---------------------------------------------------------------------------
# Ambient DAE solvers
# ---------------------------------------------------------------------------


def _constraint_rows(sys, tab_r, qdot, mat, rhs, row0):
    """Time-derivative of the constraints: qddot_dep = d(psi)/dt."""
    nb = sys.n - sys.m
    for k, dpos in enumerate(sys.dependent_positions):
        row = row0 + k
        mat[row, dpos] = 1.0
        for a, apos in enumerate(sys.base_positions):
            mat[row, apos] = -tab_r.psi[k].grad[tab_r.vi(a)]
        rhs[row] = sum(qdot[big_a] * tab_r.psi[k].grad[tab_r.qi(big_a)]
                       for big_a in range(sys.n))
    return nb


def _dphi_dvel(sys, tab_r, big_a):
    """d(constraint_k)/d(velocity_A) for constraints psi_k - dq_dep_k."""
    out = np.zeros(sys.m)
    dep = list(sys.dependent_positions)
    if big_a in dep:
        out[dep.index(big_a)] = -1.0
    else:
        a = list(sys.base_positions).index(big_a)
        for k in range(sys.m):
            out[k] = tab_r.psi[k].grad[tab_r.vi(a)]
    return out


def nh_dae_rhs(sys, q, qdot):
    """Accelerations and multipliers of the ambient nonholonomic equations."""
    n, m = sys.n, sys.m
    tab_a = ambient_table(sys, q, qdot)
    v_base = np.array([qdot[pos] for pos in sys.base_positions])
    tab_r = restricted_table(sys, q, v_base)
    mat = np.zeros((n + m, n + m))
    rhs = np.zeros(n + m)
    for big_a in range(n):
        va = tab_a.vi(big_a)
        for big_b in range(n):
            mat[big_a, big_b] = tab_a.lag.hess[tab_a.vi(big_b), va]
        dphi = _dphi_dvel(sys, tab_r, big_a)
        for k in range(m):
            mat[big_a, n + k] = -dphi[k]
        rhs[big_a] = tab_a.lag.grad[tab_a.qi(big_a)] - sum(
            qdot[big_b] * tab_a.lag.hess[tab_a.qi(big_b), va] for big_b in range(n))
    _constraint_rows(sys, tab_r, qdot, mat, rhs, n)
    sol = np.linalg.solve(mat, rhs)
    return sol[:n], sol[n:]


def vak_dae_rhs(sys, q, qdot, lam):
    """Accelerations and multiplier rates of the ambient vakonomic
    equations (extended multiplier form)."""
    n, m = sys.n, sys.m
    tab_a = ambient_table(sys, q, qdot)
    v_base = np.array([qdot[pos] for pos in sys.base_positions])
    tab_r = restricted_table(sys, q, v_base)
    base_of = {pos: a for a, pos in enumerate(sys.base_positions)}
    mat = np.zeros((n + m, n + m))
    rhs = np.zeros(n + m)
    for big_a in range(n):
        va = tab_a.vi(big_a)
        for big_b in range(n):
            mat[big_a, big_b] = tab_a.lag.hess[tab_a.vi(big_b), va]
        if big_a in base_of:
            a = base_of[big_a]
            # -lam . d2(psi)/dv dv acts only on base velocity columns
            for b, bpos in enumerate(sys.base_positions):
                mat[big_a, bpos] -= sum(
                    lam[k] * tab_r.psi[k].hess[tab_r.vi(a), tab_r.vi(b)]
                    for k in range(m))
        dphi = _dphi_dvel(sys, tab_r, big_a)
        for k in range(m):
            mat[big_a, n + k] = -dphi[k]
        total = tab_a.lag.grad[tab_a.qi(big_a)] - sum(
            qdot[big_b] * tab_a.lag.hess[tab_a.qi(big_b), va] for big_b in range(n))
        for k in range(m):
            if big_a in base_of:
                a = base_of[big_a]
                total += lam[k] * sum(
                    qdot[big_b] * tab_r.psi[k].hess[tab_r.qi(big_b), tab_r.vi(a)]
                    for big_b in range(n))
            total -= lam[k] * tab_r.psi[k].grad[tab_r.qi(big_a)]
        rhs[big_a] = total
    _constraint_rows(sys, tab_r, qdot, mat, rhs, n)
    sol = np.linalg.solve(mat, rhs)
    return sol[:n], sol[n:]


def nh_dae_trajectory(sys, s0, t_eval, rtol=1e-10, atol=1e-12):
    """q(t) at the requested times from the ambient nonholonomic DAE."""
    qdot0 = complete_velocities(sys, s0)
    y0 = np.concatenate([s0.q, qdot0])
    n = sys.n

    def f(_t, y):
        qddot, _ = nh_dae_rhs(sys, y[:n], y[n:])
        return np.concatenate([y[n:], qddot])

    sol = solve_ivp(f, (0.0, float(t_eval[-1])), y0, method="RK45",
                    t_eval=t_eval, rtol=rtol, atol=atol)
    assert sol.success, sol.message
    return sol.y[:n].T


def vak_dae_trajectory(sys, s0, t_eval, rtol=1e-10, atol=1e-12):
    """q(t) from the ambient vakonomic DAE.  The initial extended
    multipliers are lam = p_dep - Leg_dep, the conversion that makes the
    two formulations describe the same flow."""
    qdot0 = complete_velocities(sys, s0)
    lift = ambient_velocity_gradient(sys, s0.q, qdot0)
    lam0 = s0.p_dep - np.array([lift[pos] for pos in sys.dependent_positions])
    y0 = np.concatenate([s0.q, qdot0, lam0])
    n, m = sys.n, sys.m

    def f(_t, y):
        qddot, lamdot = vak_dae_rhs(sys, y[:n], y[n:2 * n], y[2 * n:])
        return np.concatenate([y[n:2 * n], qddot, lamdot])

    sol = solve_ivp(f, (0.0, float(t_eval[-1])), y0, method="RK45",
                    t_eval=t_eval, rtol=rtol, atol=atol)
    assert sol.success, sol.message
    return sol.y[:n].T
