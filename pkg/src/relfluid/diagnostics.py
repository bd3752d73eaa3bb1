"""Scalar functionals, constraint residuals, and breakdown source terms.

Everything here is a pure read-only function of a state snapshot. The
three conserved-functional families are

    energy      H  (mode-dependent form, see ``hamiltonian``)
    mass        M = integral of s
    helicity    K = integral of u . curl u          (three dimensions)
    enstrophy   E = (1/2) integral of omega_z^2 / s (planar reduction;
                 equals (1/2k) integral of q^2 at constant density k)

plus the obstruction diagnostics for states with an independent pressure:
the baroclinic vector b = -grad(1/s) x grad(P) and the two budget sources

    dK/dt = K_source = 2 integral of u . b
    dE/dt = E_source = integral of (omega_z / s) (z_hat . b),

whose surface terms vanish on the torus. When pressure is a function of
density alone the two gradients are parallel, b vanishes, and both sources
are identically zero - that cancellation is exactly what the conservation
theorems rest on, and its failure under an independent pressure is what
these diagnostics quantify.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .eos import zeta_family
from .errors import IncompatibleFunctional
from .relativity import gamma_from_u
from .solver2d import State2D
from .solver3d import FluidState3D, cross_product

Array = np.ndarray


@dataclasses.dataclass(frozen=True)
class DiagnosticsRecord:
    """One time sample of every scalar diagnostic; None marks a quantity
    that is not defined for the state's mode (written as an empty CSV
    field, never as a fake zero)."""

    t: float
    H: float | None
    M: float | None
    K: float | None
    E: float | None
    div_residual: float | None
    K_source: float | None
    E_source: float | None
    max_v_over_c: float

    def __post_init__(self):
        for name in ("t", "H", "M", "K", "E", "div_residual", "K_source",
                     "E_source", "max_v_over_c"):
            value = getattr(self, name)
            if value is not None and not math.isfinite(value):
                raise ValueError(f"diagnostic {name} is not finite: {value}")
        if not self.max_v_over_c < 1.0:
            raise ValueError(f"max_v_over_c = {self.max_v_over_c} is not < 1")


def _infer_mode(state) -> str:
    if isinstance(state, State2D):
        return "twod"
    if isinstance(state, FluidState3D):
        return state.mode
    raise TypeError(f"unsupported state type {type(state).__name__}")


def hamiltonian(state, mode: str | None = None) -> float:
    """Total energy in the form matching the state's mode.

    general:    integral of [c s sqrt(c^2 + |u|^2) - P]
    barotropic: integral of [c s sqrt(c^2 + |u|^2) + zeta(s)]
    twod:       c^2 k integral of sqrt(1 - |grad psi|^2 / c^2)

    Evaluation is stabilized by splitting off the rest-mass part:
    c s sqrt(c^2+|u|^2) = c^2 s gamma = c^2 s + s |u|^2 / (1 + gamma),
    so the integrand's O(|u|^2) content is never formed by subtracting
    numbers of size c^2. At c = inf the divergent rest term (c^2 M, itself
    exactly conserved because mass is) is omitted and the returned value
    is the finite classical remainder; in two dimensions that remainder is
    -(k/2) integral of |grad psi|^2.
    """
    inferred = _infer_mode(state)
    if mode is None:
        mode = inferred
    elif mode != inferred:
        raise IncompatibleFunctional(
            f"state is in {inferred!r} mode but the {mode!r} energy was requested"
        )
    grid = state.grid
    c = state.const.c

    if mode == "twod":
        if state.density_field is not None:
            raise IncompatibleFunctional(
                "the planar energy functional is defined for constant density"
            )
        k = state.density
        grad = grid.gradient(state.psi)
        speed_sq = np.sum(grad * grad, axis=0)
        # g = sqrt(1 - |grad psi|^2/c^2); c^2(1 - g) = |grad psi|^2/(1 + g)
        g = np.sqrt(1.0 - speed_sq * state.const.inv_c2)
        bend = -k * grid.integrate(speed_sq / (1.0 + g))
        if c == math.inf:
            return bend
        return c * c * k * grid.volume + bend

    gamma = gamma_from_u(state.u, state.const)
    kinetic = state.s * np.sum(state.u * state.u, axis=0) / (1.0 + gamma)
    if mode == "general":
        rest = grid.integrate(kinetic - state.P)
    else:
        zeta = zeta_family(state.eos)[0]
        rest = grid.integrate(kinetic + zeta(state.s))
    if c == math.inf:
        return rest
    return c * c * mass(state) + rest


def mass(state) -> float:
    """Total lab-frame mass: integral of s."""
    if isinstance(state, State2D):
        if state.density_field is None:
            return state.density * state.grid.volume
        return state.grid.integrate(state.density_field)
    return state.grid.integrate(state.s)


def helicity(state: FluidState3D) -> float:
    """integral of u . curl u over the volume."""
    omega = state.grid.curl(state.u)
    return state.grid.integrate(np.sum(state.u * omega, axis=0))


def _omega_z(state) -> Array:
    """z-component of curl u: -q for a planar state, curl(u)[2] in 3D."""
    if isinstance(state, State2D):
        return -state.q
    return state.grid.curl(state.u)[2]


def enstrophy(state) -> float:
    """(1/2) integral of omega_z^2 / s.

    For a constant-density planar state this is (1/2k) integral of q^2
    (identical because omega_z = -q there); for a 3D state it uses the
    z-component of curl u and the density field, which reduces to the
    planar functional on z-symmetric flows.
    """
    grid = state.grid
    omega_z = _omega_z(state)
    if isinstance(state, State2D):
        if state.density_field is None:
            return 0.5 * grid.integrate(omega_z * omega_z) / state.density
        return 0.5 * grid.integrate(omega_z * omega_z / state.density_field)
    return 0.5 * grid.integrate(omega_z * omega_z / state.s)


def baroclinic_vector(state: FluidState3D) -> Array:
    """b = -grad(1/s) x grad(P): the conservation-breaking torque density.

    Defined for states with an independent pressure field; identically
    zero (to rounding) whenever P is functionally dependent on s.
    """
    if state.mode != "general":
        raise IncompatibleFunctional(
            "the baroclinic vector requires an independent pressure field"
        )
    grid = state.grid
    return -cross_product(grid.gradient(1.0 / state.s), grid.gradient(state.P))


def breakdown_sources(state: FluidState3D) -> tuple[float, float]:
    """(K_source, E_source): exact time derivatives of helicity/enstrophy.

    K_source = 2 integral of u . b
    E_source = integral of (omega_z / s) (z_hat . b)

    with b the baroclinic vector; the divergence terms of the two budget
    identities integrate to zero on the torus.
    """
    grid = state.grid
    b = baroclinic_vector(state)
    k_source = 2.0 * grid.integrate(np.sum(state.u * b, axis=0))
    e_source = grid.integrate(_omega_z(state) / state.s * b[2])
    return k_source, e_source


def constraint_residual(state: FluidState3D) -> float:
    """Dimensionless incompressibility defect of v = u/gamma.

    max|div v| normalized by max|v| / h_min; zero for a fluid at rest.
    Purely diagnostic - reports, never raises.
    """
    grid = state.grid
    gamma = gamma_from_u(state.u, state.const)
    v = state.u / gamma
    vmax = math.sqrt(float(np.max(np.sum(v * v, axis=0))))
    if vmax == 0.0:
        return 0.0
    return grid.norm_max(grid.divergence(v)) * grid.h_min / vmax


def max_v_over_c(state) -> float:
    """Peak coordinate speed as a fraction of c (0.0 at c = inf)."""
    if isinstance(state, State2D):
        if state.const.c == math.inf:
            return 0.0
        return state.max_speed() / state.const.c
    gamma = gamma_from_u(state.u, state.const)
    vmax = math.sqrt(float(np.max(np.sum((state.u / gamma) ** 2, axis=0))))
    if state.const.c == math.inf:
        return 0.0
    return vmax / state.const.c


def collect(state) -> DiagnosticsRecord:
    """All diagnostics defined for the state's mode, as one record."""
    mode = _infer_mode(state)
    if mode == "twod":
        return DiagnosticsRecord(
            t=state.t,
            H=None if state.density_field is not None else hamiltonian(state),
            M=mass(state),
            K=None,
            E=enstrophy(state),
            div_residual=None,
            K_source=None,
            E_source=None,
            max_v_over_c=max_v_over_c(state),
        )
    k_source, e_source = (
        breakdown_sources(state) if mode == "general" else (None, None)
    )
    return DiagnosticsRecord(
        t=state.t,
        H=hamiltonian(state),
        M=mass(state),
        K=helicity(state),
        E=enstrophy(state),
        div_residual=constraint_residual(state),
        K_source=k_source,
        E_source=e_source,
        max_v_over_c=max_v_over_c(state),
    )
