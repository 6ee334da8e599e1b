"""System definitions: configuration coordinates, Lagrangian and solved-form
velocity constraints.

A system couples an ambient Lagrangian L(q, dq) with constraints given in
the explicit form

    dq_dep = psi_dep(q, dq_base)

for a declared partition of the coordinates into m dependent and n-m base
ones.  Velocity variables are, by convention, the position name prefixed
with ``d`` (position ``x`` pairs with velocity ``dx``).

Requiring the solved form makes the rank condition on the constraint
velocity-Jacobian structural: no psi expression may mention a dependent
velocity, which the loader enforces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr as _expr
from ._jets import restricted_table
from .autodiff import second_partial
from .errors import AdmissibilityError, EvalError, SystemFormatError

__all__ = [
    "SystemDef",
    "NhState",
    "VakState",
    "LinearityReport",
    "load_system",
    "serialize_system",
    "complete_velocities",
    "completed_env",
    "state_env",
    "restricted_lagrangian",
    "verify_linearity",
    "require_linear",
]


@dataclass(frozen=True)
class SystemDef:
    """Immutable definition of a constrained Lagrangian system."""

    name: str
    coords: tuple[str, ...]           # all n position names, declaration order
    dependent: tuple[str, ...]        # m of them, solved by the constraints
    lagrangian: _expr.Expression      # ambient L over (coords, d-coords)
    psi: dict[str, _expr.Expression]  # dependent coord -> constraint expression
    declared_linear: bool
    # Cache for lazy linearity verification; not part of equality.
    _linear_cache: list = field(default_factory=list, compare=False, repr=False)

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def m(self) -> int:
        return len(self.dependent)

    @property
    def base(self) -> tuple[str, ...]:
        return tuple(c for c in self.coords if c not in self.dependent)

    def velocity_of(self, coord: str) -> str:
        return "d" + coord

    def coord_index(self, coord: str) -> int:
        return self.coords.index(coord)

    @property
    def dependent_positions(self) -> tuple[int, ...]:
        return tuple(self.coords.index(c) for c in self.dependent)

    @property
    def base_positions(self) -> tuple[int, ...]:
        return tuple(self.coords.index(c) for c in self.base)


@dataclass(frozen=True)
class NhState:
    """Point of the nonholonomic phase space: positions and base velocities."""

    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))


@dataclass(frozen=True)
class VakState:
    """Point of the vakonomic phase space: positions, base velocities and the
    constraint multipliers (momenta conjugate to the dependent coordinates).

    The eliminated base momenta are never stored; they are recovered from the
    state by ``vakonomic.w1_momenta``.
    """

    q: np.ndarray
    v: np.ndarray
    p_dep: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "p_dep", np.asarray(self.p_dep, dtype=float))


def check_state(sys: SystemDef, s) -> None:
    if len(s.q) != sys.n:
        raise ValueError(f"state has {len(s.q)} positions, system {sys.name!r} has {sys.n}")
    if len(s.v) != sys.n - sys.m:
        raise ValueError(f"state has {len(s.v)} base velocities, expected {sys.n - sys.m}")
    if isinstance(s, VakState) and len(s.p_dep) != sys.m:
        raise ValueError(f"state has {len(s.p_dep)} multipliers, expected {sys.m}")


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------

def _valid_ident(name: str) -> bool:
    return (name[:1].isalpha()
            and all(ch.isalnum() or ch == "_" for ch in name))


def load_system(source: str) -> SystemDef:
    """Parse a system definition from its line-oriented text format.

    Performs all structural checks: coordinate partition consistency,
    admissibility (no dependent velocity inside any psi), variable closure
    of the Lagrangian, and -- for files declared linear -- a sampled
    verification of the declaration.
    """
    name = None
    coords = None
    dependent = None
    linear = None
    lagrangian_text = None
    psi_texts: dict[str, str] = {}

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        if key == "name":
            name = rest
        elif key == "coords":
            coords = tuple(rest.split())
        elif key == "dependent":
            dependent = tuple(rest.split())
        elif key == "linear":
            if rest not in ("true", "false"):
                raise SystemFormatError(f"line {lineno}: linear must be true or false")
            linear = rest == "true"
        elif key == "lagrangian":
            lagrangian_text = rest
        elif key == "psi":
            target, eq, expr_text = rest.partition("=")
            if not eq:
                raise SystemFormatError(f"line {lineno}: psi line needs '<coord> = <expression>'")
            psi_texts[target.strip()] = expr_text.strip()
        else:
            raise SystemFormatError(f"line {lineno}: unknown key {key!r}")

    for what, value in (("name", name), ("coords", coords), ("dependent", dependent),
                        ("linear", linear), ("lagrangian", lagrangian_text)):
        if value is None:
            raise SystemFormatError(f"missing {what!r} line")

    for c in coords:
        if not _valid_ident(c):
            raise SystemFormatError(f"bad coordinate name {c!r}")
    if len(set(coords)) != len(coords):
        raise SystemFormatError("duplicate coordinate names")
    for c in dependent:
        if c not in coords:
            raise SystemFormatError(f"dependent coordinate {c!r} not among coords")
    if len(set(dependent)) != len(dependent):
        raise SystemFormatError("duplicate dependent coordinates")
    m, n = len(dependent), len(coords)
    if not 1 <= m < n:
        raise SystemFormatError(f"need 1 <= m < n, got m={m}, n={n}")
    if set(psi_texts) != set(dependent):
        raise SystemFormatError(
            f"psi lines {sorted(psi_texts)} do not match dependent coords {sorted(dependent)}")

    base = tuple(c for c in coords if c not in dependent)
    allowed_psi = set(coords) | {"d" + c for c in base}
    allowed_lag = set(coords) | {"d" + c for c in coords}

    psi = {}
    for c in dependent:
        e = _expr.parse(psi_texts[c])
        extra = _expr.free_vars(e) - allowed_psi
        dep_vels = sorted(v for v in extra if v in {"d" + d for d in dependent})
        if dep_vels:
            raise AdmissibilityError(
                f"psi {c} uses dependent velocity {', '.join(dep_vels)}; "
                "constraints must be solved for the dependent velocities")
        if extra:
            raise SystemFormatError(f"psi {c} uses unknown variable(s) {sorted(extra)}")
        psi[c] = e

    lagrangian = _expr.parse(lagrangian_text)
    extra = _expr.free_vars(lagrangian) - allowed_lag
    if extra:
        raise SystemFormatError(f"lagrangian uses unknown variable(s) {sorted(extra)}")

    sys = SystemDef(name=name, coords=coords, dependent=dependent,
                    lagrangian=lagrangian, psi=psi, declared_linear=linear)

    if linear:
        report = verify_linearity(sys, samples=20, seed=0)
        if not report.linear:
            raise SystemFormatError(
                f"system {name!r} is declared linear but fails verification "
                f"at state {report.witness}")
        sys._linear_cache.append(True)
    return sys


def serialize_system(sys: SystemDef) -> str:
    lines = [
        f"name {sys.name}",
        "coords " + " ".join(sys.coords),
        "dependent " + " ".join(sys.dependent),
        f"linear {'true' if sys.declared_linear else 'false'}",
        f"lagrangian {_expr.serialize(sys.lagrangian)}",
    ]
    for c in sys.dependent:
        lines.append(f"psi {c} = {_expr.serialize(sys.psi[c])}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Velocity completion and evaluation environments
# ---------------------------------------------------------------------------


def state_env(sys: SystemDef, q, v) -> dict[str, float]:
    """Environment binding positions and base velocities."""
    env = {c: float(q[i]) for i, c in enumerate(sys.coords)}
    for a, c in enumerate(sys.base):
        env[sys.velocity_of(c)] = float(v[a])
    return env


def complete_velocities(sys: SystemDef, s) -> np.ndarray:
    """Full n-velocity vector: base components from the state, dependent
    components from psi."""
    check_state(sys, s)
    env = state_env(sys, s.q, s.v)
    full = np.empty(sys.n)
    for a, pos in zip(range(sys.n - sys.m), sys.base_positions):
        full[pos] = s.v[a]
    for c, pos in zip(sys.dependent, sys.dependent_positions):
        full[pos] = _expr.evaluate(sys.psi[c], env)
    return full


def completed_env(sys: SystemDef, q, v) -> dict[str, float]:
    """Environment with all velocities bound, dependent ones via psi."""
    env = state_env(sys, q, v)
    for c in sys.dependent:
        env[sys.velocity_of(c)] = _expr.evaluate(sys.psi[c], env)
    return env


def restricted_lagrangian(sys: SystemDef, q, v) -> float:
    """Value of the Lagrangian restricted to the constraint submanifold."""
    return float(_expr.evaluate(sys.lagrangian, completed_env(sys, q, v)))


# ---------------------------------------------------------------------------
# Linearity verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearityReport:
    linear: bool
    witness: tuple | None  # (q, v) arrays of a failing sample, if any


_LINEARITY_TOL = 1e-12


def verify_linearity(sys: SystemDef, samples: int, seed: int) -> LinearityReport:
    """Sampled check that every psi is linear homogeneous in the base
    velocities: the velocity Hessian of each psi vanishes and psi(q, 0) = 0.

    States are drawn uniformly from [-1, 1] per coordinate.  A sample that
    raises a domain error is redrawn up to 10 times before the error is
    reported.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    vel_names = [sys.velocity_of(c) for c in sys.base]
    for _ in range(samples):
        for attempt in range(10):
            q = rng.uniform(-1.0, 1.0, sys.n)
            v = rng.uniform(-1.0, 1.0, sys.n - sys.m)
            env = state_env(sys, q, v)
            env0 = state_env(sys, q, np.zeros(sys.n - sys.m))
            try:
                for c in sys.dependent:
                    e = sys.psi[c]
                    if abs(_expr.evaluate(e, env0)) > _LINEARITY_TOL:
                        return LinearityReport(False, (q, v))
                    for i, va in enumerate(vel_names):
                        for vb in vel_names[i:]:
                            if abs(second_partial(e, env, va, vb)) > _LINEARITY_TOL:
                                return LinearityReport(False, (q, v))
                break
            except EvalError:
                if attempt == 9:
                    raise
    return LinearityReport(True, None)


def require_linear(sys: SystemDef, what: str) -> None:
    """Raise unless the system's constraints are verified linear.

    Declared-linear systems were verified at load time; anything else gets
    one lazy sampled verification, cached on the definition.
    """
    from .errors import NonlinearSystemError

    if not sys._linear_cache:
        if sys.declared_linear:
            sys._linear_cache.append(True)
        else:
            sys._linear_cache.append(verify_linearity(sys, samples=20, seed=0).linear)
    if not sys._linear_cache[0]:
        raise NonlinearSystemError(
            f"{what} requires linear velocity constraints, "
            f"but system {sys.name!r} is not linear")
