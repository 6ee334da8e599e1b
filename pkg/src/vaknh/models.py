"""Built-in example systems.

Each catalog entry renders to plain system-file text (the same text shipped
under ``models/`` in the repository), loads through the regular loader and
carries machine-checkable documented facts executed by the acceptance
suite, plus a sampling box that keeps random states inside the domain of
the constraint expressions.

Notes on the catalog:

* ``martinet`` and ``paramecium`` are naturally posed through a Lagrangian
  on the constraint submanifold (a sub-Riemannian metric and a shape-space
  cost).  Their ambient Lagrangians add half the squared constraint defect,
  which restricts to the intended function, leaves every on-submanifold
  quantity unchanged and keeps the ambient velocity Hessian invertible so
  the compatibility test applies.
* ``von_neumann2`` is a two-good capital accumulation problem; its
  constraint is genuinely nonlinear in the velocities and its square root
  bounds the usable sampling box.
* ``holonomic_demo`` has an integrable constraint (an exact differential),
  so every comparison residual vanishes identically on it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import VaknhError
from .system import SystemDef, load_system

__all__ = ["CatalogEntry", "Fact", "CATALOG", "builtin", "builtin_source", "builtin_names"]


@dataclass(frozen=True)
class Fact:
    """A documented, machine-checkable claim about a model, with the test
    that executes it."""

    claim: str
    test: str  # test function name in the acceptance suite


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    describe: str
    template: str
    defaults: dict
    sample_box: dict  # {"q": [(lo,hi)]*n, "v": [...]*(n-m), "p": [...]*m}
    facts: tuple[Fact, ...]


def _render(entry: CatalogEntry, params: dict) -> str:
    values = dict(entry.defaults)
    unknown = set(params) - set(values)
    if unknown:
        raise VaknhError(
            f"unknown parameter(s) {sorted(unknown)} for model {entry.name!r}; "
            f"accepted: {sorted(values)}")
    values.update(params)
    return entry.template.format(**{k: repr(float(v)) for k, v in values.items()})


_PARTICLE = CatalogEntry(
    name="constrained_particle",
    describe="unit-mass particle in 3-space with the constraint dz = y*dx",
    template="""\
# Unit-mass particle in R^3, velocity constraint dz = y*dx.
name constrained_particle
coords x y z
dependent z
linear true
lagrangian 0.5*(dx^2 + dy^2 + dz^2)
psi z = y*dx
""",
    defaults={},
    sample_box={"q": [(-1.0, 1.0)] * 3, "v": [(-1.0, 1.0)] * 2, "p": [(-2.0, 2.0)]},
    facts=(
        Fact("only stationary or straight free motions solve both problems; "
             "a generic random box has agreement fraction 0",
             "test_criterion_5_constrained_particle"),
        Fact("multipliers set to the Legendre momenta give agreement fraction 1",
             "test_criterion_5_constrained_particle"),
        Fact("constraint-satisfying free lines solve both dynamics",
             "test_criterion_8_free_solutions"),
    ),
)

_PENNY = CatalogEntry(
    name="rolling_penny",
    describe="vertical penny rolling without slipping, unit parameters",
    template="""\
# Vertical rolling penny: contact point (x, y), rolling angle theta,
# heading phi.  Mass, moments of inertia and radius all 1.
name rolling_penny
coords x y theta phi
dependent x y
linear true
lagrangian 0.5*(dx^2 + dy^2 + dtheta^2 + dphi^2)
psi x = dtheta*cos(phi)
psi y = dtheta*sin(phi)
""",
    defaults={},
    sample_box={"q": [(-1.0, 1.0)] * 4, "v": [(-1.0, 1.0)] * 2,
                "p": [(-2.0, 2.0)] * 2},
    facts=(
        Fact("agreement functions reduce to (dphi, -dtheta) times "
             "(p_x sin(phi) - p_y cos(phi)) up to one recorded global sign",
             "test_criterion_4_penny"),
        Fact("every nonholonomic trajectory lifts to a vakonomic one with "
             "p_x = 2*dtheta*cos(phi), p_y = 2*dtheta*sin(phi)",
             "test_criterion_4_penny"),
        Fact("the lifted multipliers convert to lambda = "
             "(-dtheta*cos(phi), -dtheta*sin(phi))",
             "test_criterion_4_penny"),
    ),
)

_MARTINET = CatalogEntry(
    name="martinet",
    describe="flat sub-Riemannian structure with constraint dz = (y^2/2)*dx",
    template="""\
# Flat metric on the plane distribution annihilated by dz - (y^2/2) dx.
# The ambient Lagrangian adds half the squared constraint defect, which
# vanishes on the constraint submanifold and keeps the velocity Hessian
# invertible.
name martinet
coords x y z
dependent z
linear true
lagrangian 0.5*(dx^2 + dy^2) + 0.5*(dz - (y^2/2)*dx)^2
psi z = (y^2/2)*dx
""",
    defaults={},
    sample_box={"q": [(-1.0, 1.0)] * 3, "v": [(-1.0, 1.0)] * 2, "p": [(-2.0, 2.0)]},
    facts=(
        Fact("p_z is an exact constant of the vakonomic flow",
             "test_criterion_2_martinet_conservation"),
        Fact("dx - (y^2/2)*p_z is conserved along the vakonomic flow",
             "test_criterion_2_martinet_conservation"),
    ),
)

_PARAMECIUM = CatalogEntry(
    name="paramecium",
    describe="low-Reynolds swimmer: two shape modes driving one net translation",
    template="""\
# Planar micro-swimmer: shape modes (k1, k2) move the centroid x through
# the viscous coupling dx = -(eps^2/4)*(k2*dk1 + 2*k1*dk2).  The cost is
# the squared shape-velocity effort; the ambient form adds half the
# squared constraint defect to stay regular.
name paramecium
coords k1 k2 x
dependent x
linear true
lagrangian dk1^2 + dk2^2 + 0.5*(dx + {c}*(k2*dk1 + 2*k1*dk2))^2
psi x = -{c}*(k2*dk1 + 2*k1*dk2)
""",
    defaults={"c": 0.25},  # c = eps^2/4; eps defaults to 1
    sample_box={"q": [(-1.0, 1.0)] * 3, "v": [(-1.0, 1.0)] * 2, "p": [(-2.0, 2.0)]},
    facts=(
        Fact("with eps=1 and p_x=8 the optimal shape modes are "
             "k1 = sin(t), k2 = cos(t) - 1 from rest-at-origin starts",
             "test_criterion_1_paramecium_closed_form"),
        Fact("the translation multiplier p_x is constant (x is cyclic)",
             "test_criterion_1_paramecium_closed_form"),
    ),
)

_VON_NEUMANN = CatalogEntry(
    name="von_neumann2",
    describe="two-good capital growth: maximize terminal accumulation of good 2",
    template="""\
# Closed two-good capital model: the transformation frontier
# K1^a1 K2^a2 = |dK|, a1 + a2 = 1, solved for dK1.  The objective dK2
# makes this a genuinely nonlinear, velocity-degenerate problem; the
# usable region needs K1^(2 a1) K2^(2 a2) > dK2^2.
name von_neumann2
coords K1 K2
dependent K1
linear false
lagrangian dK2
psi K1 = sqrt(K1^{e1}*K2^{e2} - dK2^2)
""",
    defaults={"e1": 1.0, "e2": 1.0},  # e_i = 2*alpha_i with alpha1 + alpha2 = 1
    sample_box={"q": [(0.8, 2.0)] * 2, "v": [(-0.5, 0.5)], "p": [(0.5, 2.0)]},
    facts=(
        Fact("the constraints are nonlinear in the velocities (verified witness)",
             "test_criterion_9_autodiff"),
    ),
)

_HOLONOMIC = CatalogEntry(
    name="holonomic_demo",
    describe="integrable constraint dz = dx (the differential of z - x)",
    template="""\
# Integrable velocity constraint dz = dx, i.e. d(z - x) = 0: the
# comparison between the two dynamics is trivial on this model.
name holonomic_demo
coords x y z
dependent z
linear true
lagrangian 0.5*(dx^2 + dy^2 + dz^2)
psi z = dx
""",
    defaults={},
    sample_box={"q": [(-1.0, 1.0)] * 3, "v": [(-1.0, 1.0)] * 2, "p": [(-2.0, 2.0)]},
    facts=(
        Fact("curvature, agreement functions and field residuals vanish "
             "identically", "test_criterion_6_holonomic"),
    ),
)

CATALOG: dict[str, CatalogEntry] = {
    entry.name: entry
    for entry in (_PARTICLE, _PENNY, _MARTINET, _PARAMECIUM, _VON_NEUMANN, _HOLONOMIC)
}


def builtin_names() -> list[str]:
    return sorted(CATALOG)


def builtin_source(name: str, **params) -> str:
    """Render the system-file text of a built-in model.

    ``paramecium`` accepts ``eps`` (default 1.0); ``von_neumann2`` accepts
    ``alpha1`` (default 0.5, with alpha2 = 1 - alpha1).
    """
    try:
        entry = CATALOG[name]
    except KeyError:
        raise VaknhError(
            f"unknown builtin {name!r}; available: {', '.join(builtin_names())}") from None
    params = dict(params)
    if name == "paramecium" and "eps" in params:
        eps = float(params.pop("eps"))
        params["c"] = eps * eps / 4.0
    if name == "von_neumann2" and "alpha1" in params:
        alpha1 = float(params.pop("alpha1"))
        if not 0.0 < alpha1 < 1.0:
            raise VaknhError("alpha1 must lie strictly between 0 and 1")
        params["e1"] = 2.0 * alpha1
        params["e2"] = 2.0 * (1.0 - alpha1)
    return _render(entry, params)


def builtin(name: str, **params) -> SystemDef:
    """Load a built-in model (optionally with parameters, see
    :func:`builtin_source`)."""
    return load_system(builtin_source(name, **params))
