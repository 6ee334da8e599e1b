"""Time integration of either dynamics with drift monitors.

Two steppers are provided: classic fixed-step RK4 and the adaptive
Dormand-Prince 5(4) embedded pair (the 5th-order solution is propagated,
the 4th-order companion supplies the local error estimate, FSAL reuses the
last stage).  Error control accepts a step when the RMS of the component
errors scaled by atol + rtol*|state| is at most one.

Recorded monitors:

* vakonomic runs: the Hamiltonian ``H``, the eliminated base momenta
  ``p_<base>`` and the multiplier rates ``dp_<dep>``;
* nonholonomic runs: the mechanical energy ``E_L``;
* either: the value series of any supplied candidate expressions.

Trajectories serialize to CSV with full double precision (17 significant
digits) and parse back bit-exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import expr as _expr
from .errors import EvalError, IntegrationError, SingularMatrixError, VaknhError
from .nonholonomic import energy, nh_rhs
from .system import NhState, SystemDef, VakState, check_state
from .vakonomic import hamiltonian, vak_rhs, w1_momenta

__all__ = ["Trajectory", "DriftReport", "integrate", "drift_report",
           "trajectory_to_csv", "trajectory_from_csv",
           "write_trajectory_csv", "read_trajectory_csv"]

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-11
DEFAULT_DT = 1e-3

# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])
_DP_ERR = _DP_B5 - _DP_B4


@dataclass
class Trajectory:
    """Integration output: strictly increasing times, one state per time and
    aligned monitor series."""

    dynamics: str                 # "vak" | "nh"
    times: np.ndarray
    states: list
    monitors: dict[str, np.ndarray]


@dataclass
class DriftReport:
    series: dict[str, np.ndarray]
    maxima: dict[str, float]


def _pack(sys, dynamics, s):
    if dynamics == "vak":
        return np.concatenate([s.q, s.v, s.p_dep])
    return np.concatenate([s.q, s.v])


def _unpack(sys, dynamics, y):
    n, nb = sys.n, sys.n - sys.m
    if dynamics == "vak":
        return VakState(y[:n], y[n:n + nb], y[n + nb:])
    return NhState(y[:n], y[n:n + nb])


def _flat_rhs(sys, dynamics):
    if dynamics == "vak":
        def f(y):
            d = vak_rhs(sys, _unpack(sys, "vak", y))
            return np.concatenate([d.dq, d.dv, d.dp_dep])
    else:
        def f(y):
            d = nh_rhs(sys, _unpack(sys, "nh", y))
            return np.concatenate([d.dq, d.dv])
    return f


def _monitor_names(sys, dynamics, candidates):
    if dynamics == "vak":
        names = ["H"] + [f"p_{c}" for c in sys.base] + [f"dp_{c}" for c in sys.dependent]
    else:
        names = ["E_L"]
    names += [f"G_{name}" for name in sorted(candidates)]
    return names


def _monitor_row(sys, dynamics, state, candidates):
    row = []
    if dynamics == "vak":
        row.append(hamiltonian(sys, state))
        row.extend(w1_momenta(sys, state))
        row.extend(vak_rhs(sys, state).dp_dep)
        env = {c: float(state.q[i]) for i, c in enumerate(sys.coords)}
        for a, c in enumerate(sys.base):
            env[sys.velocity_of(c)] = float(state.v[a])
        for k, c in enumerate(sys.dependent):
            env["p_" + c] = float(state.p_dep[k])
    else:
        row.append(energy(sys, state))
        env = {c: float(state.q[i]) for i, c in enumerate(sys.coords)}
        for a, c in enumerate(sys.base):
            env[sys.velocity_of(c)] = float(state.v[a])
    for name in sorted(candidates):
        row.append(float(_expr.evaluate(candidates[name], env)))
    return row


def _initial_step(f, y0, f0, t_end, rtol, atol):
    """Hairer-style cheap guess for the first adaptive step."""
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_end)
    y1 = y0 + h0 * f0
    f1 = f(y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_end)


def integrate(sys: SystemDef, dynamics: str, s0, *, t_end: float,
              method: str = "rk45", dt: float = DEFAULT_DT,
              rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
              max_steps: int = 1_000_000, candidates=None) -> Trajectory:
    """Integrate a state forward to ``t_end``, recording every accepted step.

    ``dynamics`` selects the vector field ("vak" needs a VakState, "nh" an
    NhState).  Failures -- singular reduced matrix, expression domain error,
    too many rejected steps -- raise :class:`IntegrationError` carrying the
    time at which integration stopped.
    """
    if dynamics not in ("vak", "nh"):
        raise ValueError(f"dynamics must be 'vak' or 'nh', got {dynamics!r}")
    if method not in ("rk4", "rk45"):
        raise ValueError(f"method must be 'rk4' or 'rk45', got {method!r}")
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if dynamics == "vak" and not isinstance(s0, VakState):
        raise TypeError("vak dynamics needs a VakState initial condition")
    if dynamics == "nh" and not isinstance(s0, NhState):
        raise TypeError("nh dynamics needs an NhState initial condition")
    check_state(sys, s0)
    candidates = candidates or {}

    f = _flat_rhs(sys, dynamics)
    y = _pack(sys, dynamics, s0)

    times = [0.0]
    states = [s0]
    monitor_rows = []

    def record(t, y):
        state = _unpack(sys, dynamics, y)
        times.append(t)
        states.append(state)
        monitor_rows.append(_monitor_row(sys, dynamics, state, candidates))

    try:
        monitor_rows.append(_monitor_row(sys, dynamics, s0, candidates))
        if method == "rk4":
            _run_rk4(f, y, t_end, dt, max_steps, record)
        else:
            _run_rk45(f, y, t_end, rtol, atol, max_steps, record)
    except (SingularMatrixError, EvalError) as exc:
        raise IntegrationError(
            f"integration of {sys.name!r} halted at t={times[-1]!r}, "
            f"q={list(states[-1].q)!r}: {exc}", t=times[-1]) from exc

    names = _monitor_names(sys, dynamics, candidates)
    columns = np.array(monitor_rows)
    monitors = {name: columns[:, i].copy() for i, name in enumerate(names)}
    return Trajectory(dynamics=dynamics, times=np.array(times),
                      states=states, monitors=monitors)


def _run_rk4(f, y, t_end, dt, max_steps, record):
    if dt <= 0:
        raise ValueError("dt must be positive")
    t = 0.0
    for _ in range(max_steps):
        if t >= t_end:
            return
        h = min(dt, t_end - t)
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t_end if t + h >= t_end else t + h
        record(t, y)
    raise IntegrationError(f"max_steps exceeded at t={t!r}", t=t)


def _run_rk45(f, y, t_end, rtol, atol, max_steps, record):
    t = 0.0
    k1 = f(y)
    h = _initial_step(f, y, k1, t_end, rtol, atol)
    stages = np.empty((7, len(y)))
    for _ in range(max_steps):
        if t >= t_end:
            return
        h = min(h, t_end - t)
        rejections = 0
        while True:
            stages[0] = k1
            for i in range(1, 7):
                yi = y + h * (stages[:i].T @ _DP_A[i])
                stages[i] = f(yi)
            y_new = y + h * (stages.T @ _DP_B5)
            err = h * (stages.T @ _DP_ERR)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            norm = np.sqrt(np.mean((err / scale) ** 2))
            if norm <= 1.0:
                break
            rejections += 1
            if rejections > 30:
                raise IntegrationError(
                    f"step size control failed at t={t!r} (30 rejections)", t=t)
            h *= max(0.2, 0.9 * norm ** -0.2)
        t = t_end if t + h >= t_end else t + h
        y = y_new
        # FSAL: the last stage is f at the accepted state.  Copy it out of
        # the reused stage buffer, which the next attempt overwrites.
        k1 = stages[6].copy()
        record(t, y)
        factor = 5.0 if norm == 0.0 else min(5.0, max(0.2, 0.9 * norm ** -0.2))
        h *= factor
    raise IntegrationError(f"max_steps exceeded at t={t!r}", t=t)


def drift_report(sys: SystemDef, traj: Trajectory) -> DriftReport:
    """Absolute drift series |m(t) - m(0)| of the conserved monitor
    (Hamiltonian or energy) plus every candidate series, with maxima."""
    base = "H" if traj.dynamics == "vak" else "E_L"
    series = {}
    maxima = {}
    for name, values in traj.monitors.items():
        if name == base or name.startswith("G_") or name.startswith("p_"):
            drift = np.abs(values - values[0])
            series[name + "_drift"] = drift
            maxima[name + "_drift"] = float(np.max(drift))
        else:
            series[name] = values
            maxima[name] = float(np.max(np.abs(values)))
    return DriftReport(series=series, maxima=maxima)


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trajectory_to_csv(sys: SystemDef, traj: Trajectory) -> str:
    header = ["t"] + list(sys.coords) + [sys.velocity_of(c) for c in sys.base]
    if traj.dynamics == "vak":
        header += [f"p_{c}" for c in sys.dependent]
    monitor_names = list(traj.monitors)
    header += monitor_names
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for i, t in enumerate(traj.times):
        s = traj.states[i]
        row = [t, *s.q, *s.v]
        if traj.dynamics == "vak":
            row.extend(s.p_dep)
        row.extend(traj.monitors[name][i] for name in monitor_names)
        writer.writerow(_fmt(x) for x in row)
    return buf.getvalue()


def trajectory_from_csv(sys: SystemDef, text: str) -> Trajectory:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    n, nb = sys.n, sys.n - sys.m
    expected_vak = ["t"] + list(sys.coords) + [sys.velocity_of(c) for c in sys.base] \
        + [f"p_{c}" for c in sys.dependent]
    expected_nh = expected_vak[:1 + n + nb]
    if header[:len(expected_vak)] == expected_vak:
        dynamics, ncols = "vak", len(expected_vak)
    elif header[:len(expected_nh)] == expected_nh:
        dynamics, ncols = "nh", len(expected_nh)
    else:
        raise VaknhError(f"CSV header does not match system {sys.name!r}")
    monitor_names = header[ncols:]
    times, states, rows = [], [], []
    for row in reader:
        values = list(map(float, row))
        times.append(values[0])
        if dynamics == "vak":
            states.append(VakState(values[1:1 + n], values[1 + n:1 + n + nb],
                                   values[1 + n + nb:ncols]))
        else:
            states.append(NhState(values[1:1 + n], values[1 + n:ncols]))
        rows.append(values[ncols:])
    columns = np.array(rows) if rows else np.empty((0, len(monitor_names)))
    monitors = {name: columns[:, i].copy() for i, name in enumerate(monitor_names)}
    return Trajectory(dynamics=dynamics, times=np.array(times),
                      states=states, monitors=monitors)


def write_trajectory_csv(sys: SystemDef, traj: Trajectory, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(trajectory_to_csv(sys, traj))


def read_trajectory_csv(sys: SystemDef, path) -> Trajectory:
    with open(path, "r", encoding="utf-8") as fh:
        return trajectory_from_csv(sys, fh.read())
