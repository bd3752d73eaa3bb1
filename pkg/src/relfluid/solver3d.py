"""Three-dimensional solvers in two closures.

``general`` evolves (u, s, P) with an independent pressure field:

    du/dt = (u x omega)/gamma - grad(c^2 gamma) - grad(P)/s
    ds/dt = -div(s v)
    dP/dt = -(u . grad P)/gamma

``barotropic`` closes P through an equation of state and evolves (u, s);
the pressure and inertia gradients then merge into a single potential,

    du/dt = (u x omega)/gamma - grad(c^2 gamma + zeta'(s)),

with zeta''(s) = P'(s)/s. Here u is the spatial four-velocity, v = u/gamma,
omega = curl u, and s the lab-frame density. The momentum equation is
assembled in rotational form; it is pointwise equivalent to the advective
form via u . grad u = grad(|u|^2/2) - u x omega and |u|^2 = c^2(gamma^2-1),
and it is the exact discrete image of the bracket's action on the energy
functional, which is what the operator-consistency checks measure.

Nonlinear products are dealiased (2/3 rule) before they are differentiated
or integrated further; the continuity equation is kept in flux form so the
spectral divergence integrates to zero and mass is conserved to rounding.

The inertial potential is assembled through the cancellation-free identity

    c^2 (gamma - 1) = |u|^2 / (1 + gamma),

which differs from c^2 gamma by the constant c^2, invisible to the
gradient. Evaluating c^2 gamma directly would subtract two numbers of
size c^2 and lose the O(|u|^2) signal once c is large; the stable form
keeps full precision for any c and remains finite at c = inf, where it
reduces to the classical kinetic potential |u|^2 / 2.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .eos import EosSpec, zeta_family
from .errors import NonPositiveDensity, ProjectionDiverged
from .grid import Grid3D
from .relativity import PhysicalConstants, gamma_from_u, u_to_v, v_to_u

Array = np.ndarray

PROJECTION_TOL = 1e-10
PROJECTION_MAX_ITER = 50


@dataclasses.dataclass(frozen=True)
class FluidState3D:
    grid: Grid3D
    u: Array
    s: Array
    const: PhysicalConstants
    P: Array | None = None
    eos: EosSpec | None = None
    t: float = 0.0

    def __post_init__(self):
        if (self.P is None) == (self.eos is None):
            raise ValueError("exactly one of P (general) or eos (barotropic) is required")
        if self.u.shape != (3, *self.grid.shape):
            raise ValueError(f"u must have shape (3, *grid.shape), got {self.u.shape}")
        if np.min(self.s) <= 0.0:
            raise NonPositiveDensity(f"min density {np.min(self.s):.6g} is not positive")
        cap = self.const.c_frac_max * self.const.c
        vmax = float(np.max(np.sum(self.u * self.u, axis=0) / gamma_from_u(self.u, self.const) ** 2))
        if math.sqrt(vmax) > cap:
            from .errors import SuperluminalVelocity

            raise SuperluminalVelocity(
                f"max |v| = {math.sqrt(vmax):.6g} exceeds {self.const.c_frac_max:g} * c"
            )

    @property
    def mode(self) -> str:
        return "general" if self.P is not None else "barotropic"


def cross_product(a: Array, b: Array) -> Array:
    return np.stack(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def dealias_vector(grid: Grid3D, w: Array) -> Array:
    return np.stack([grid.dealias(w[i]) for i in range(w.shape[0])])


def inertial_potential(u: Array, gamma: Array) -> Array:
    """c^2 (gamma - 1) in the cancellation-free form |u|^2 / (1 + gamma)."""
    return np.sum(u * u, axis=0) / (1.0 + gamma)


def rhs_barotropic(state: FluidState3D) -> tuple[Array, Array]:
    """(du/dt, ds/dt) under the barotropic closure."""
    grid = state.grid
    gamma = gamma_from_u(state.u, state.const)
    v = state.u / gamma
    omega = grid.curl(state.u)
    rot = dealias_vector(grid, cross_product(state.u, omega) / gamma)
    zeta_p = zeta_family(state.eos)[1]
    drive = inertial_potential(state.u, gamma) + zeta_p(state.s)
    u_dot = rot - grid.gradient(drive)
    s_dot = -grid.divergence(dealias_vector(grid, state.s * v))
    return u_dot, s_dot


def rhs_general(state: FluidState3D) -> tuple[Array, Array, Array]:
    """(du/dt, ds/dt, dP/dt) with an independent pressure field."""
    grid = state.grid
    if np.min(state.s) <= 0.0:
        raise NonPositiveDensity("density lost positivity")
    gamma = gamma_from_u(state.u, state.const)
    v = state.u / gamma
    omega = grid.curl(state.u)
    rot = dealias_vector(grid, cross_product(state.u, omega) / gamma)
    grad_p = grid.gradient(state.P)
    u_dot = (
        rot
        - grid.gradient(inertial_potential(state.u, gamma))
        - dealias_vector(grid, grad_p / state.s)
    )
    s_dot = -grid.divergence(dealias_vector(grid, state.s * v))
    p_dot = -grid.dealias(np.sum(state.u * grad_p, axis=0) / gamma)
    return u_dot, s_dot, p_dot


def project_div_free(
    grid: Grid3D,
    u: Array,
    const: PhysicalConstants,
    tol: float = PROJECTION_TOL,
    max_iter: int = PROJECTION_MAX_ITER,
) -> Array:
    """Return u minus a gradient, chosen so v = u/gamma is divergence-free.

    The whole correction is a pure gradient of the momentum, u + grad(chi):
    curl u — and with it the helicity integral — is untouched to rounding,
    which is the property the conservation experiments rely on.  Projecting
    v itself would also enforce the constraint, but rebuilding u from the
    projected v perturbs curl u wherever gamma varies, and the resulting
    helicity kick neither vanishes with dt nor with grid spacing.

    Because gamma ties the irrotational part of u to v nonlinearly, chi
    solves a nonlinear elliptic problem.  Each pass subtracts
    grad(laplace^-1 div v) — the flat-Laplacian preconditioned update —
    and the residual contracts by O((v/c)^2) per pass, so the loop exits
    quickly at the speeds these runs use.  Convergence target:
    max|div v| <= tol * max|v| / h_min, the dimensionless defect used by
    the constraint diagnostic.
    """
    u_cur = u
    residual = math.inf
    for _ in range(max_iter):
        v = u_to_v(u_cur, const)
        div = grid.divergence(v)
        vmax = math.sqrt(float(np.max(np.sum(v * v, axis=0))))
        residual = grid.norm_max(div)
        if residual <= tol * vmax / grid.h_min:
            return u_cur
        u_cur = u_cur - grid.gradient(grid.poisson_solve(div))
    raise ProjectionDiverged(
        f"projection loop did not converge in {max_iter} iterations "
        f"(residual {residual:.3e})"
    )


def cfl_dt_3d(state: FluidState3D, cfl: float) -> float:
    """Advective CFL step; inf for a fluid at rest."""
    gamma = gamma_from_u(state.u, state.const)
    vmax = math.sqrt(float(np.max(np.sum((state.u / gamma) ** 2, axis=0))))
    if vmax == 0.0:
        return math.inf
    return cfl * state.grid.h_min / vmax


def step_rk4(
    state: FluidState3D,
    dt: float,
    project_after: bool = False,
    proj_tol: float = PROJECTION_TOL,
    proj_max_iter: int = PROJECTION_MAX_ITER,
) -> FluidState3D:
    """Classical fourth-order Runge-Kutta step.

    ``project_after`` re-imposes div(u/gamma) = 0 once after the full step
    (barotropic closure only).  The unconstrained barotropic equations do
    not keep a divergence-free v divergence-free — the defect grows on the
    advective time scale — so projected runs are the incompressible model
    and unprojected runs measure that departure.
    """
    if state.mode == "general":
        if project_after:
            raise ValueError("projection is a barotropic-mode option")
        y0 = (state.u, state.s, state.P)

        def f(y):
            st = dataclasses.replace(state, u=y[0], s=y[1], P=y[2])
            return rhs_general(st)

    else:
        y0 = (state.u, state.s)

        def f(y):
            st = dataclasses.replace(state, u=y[0], s=y[1])
            return rhs_barotropic(st)

    def axpy(frac, k):
        return tuple(a + (frac * dt) * b for a, b in zip(y0, k))

    k1 = f(y0)
    k2 = f(axpy(0.5, k1))
    k3 = f(axpy(0.5, k2))
    k4 = f(axpy(1.0, k3))
    y1 = tuple(
        a + (dt / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        for a, b1, b2, b3, b4 in zip(y0, k1, k2, k3, k4)
    )

    u_new = y1[0]
    if project_after:
        u_new = project_div_free(state.grid, u_new, state.const, proj_tol, proj_max_iter)
    if state.mode == "general":
        return dataclasses.replace(
            state, u=u_new, s=y1[1], P=y1[2], t=state.t + dt
        )
    return dataclasses.replace(state, u=u_new, s=y1[1], t=state.t + dt)


def energy_equation_residuals(
    state: FluidState3D,
    u_dot: Array,
    s_dot: Array,
    p_dot: Array,
) -> tuple[Array, Array]:
    """Residual fields of the time component of the four-momentum balance.

    Given a state and a candidate time derivative, return

        r_fourdiv: the four-divergence form, assembled from the chain-rule
                   expansion d_mu(rho0 u^mu u^0) - d_0 P with the time
                   derivatives substituted pointwise,
        r_3plus1:  the reduced form
                   (c^3/u^0) [ds/dt + div(s v)] - dP/dt - (u . grad P)/gamma.

    Both vanish on solutions. Off shell they are related by pure algebra:
    for ARBITRARY (ds/dt, dP/dt), if du/dt satisfies the conservative-form
    spatial momentum balance

        rho0 [gamma du_i/dt + u . grad u_i] = -grad_i P - u_i D,
        D = ds/dt + div(s v),

    (the substitution that folds the continuity residual into the momentum
    flux), then r_3plus1 = c * r_fourdiv pointwise in exact arithmetic,
    since both reduce over the shared discrete derivative fields. With the
    advective-form du/dt produced by rhs_general the -u_i D / s term is
    absent, so the relation holds only on shell (D = 0).
    """
    if state.mode != "general":
        raise ValueError("residuals are defined for the general closure")
    grid = state.grid
    c = state.const.c
    gamma = gamma_from_u(state.u, state.const)
    v = state.u / gamma
    u0 = c * gamma
    rho0 = state.s / gamma

    cont = s_dot + grid.divergence(state.s * v)
    grad_p = grid.gradient(state.P)
    u_grad_p = np.sum(state.u * grad_p, axis=0)

    r_3plus1 = (c**3 / u0) * cont - p_dot - u_grad_p / gamma

    # chain rule: u^mu d_mu u^0 = sum_i (u_i/u^0)(gamma du_i/dt + u . grad u_i)
    conv = np.zeros(grid.shape)
    for i in range(3):
        u_grad_ui = np.sum(state.u * grid.gradient(state.u[i]), axis=0)
        conv = conv + (state.u[i] / u0) * (gamma * u_dot[i] + u_grad_ui)
    r_fourdiv = u0 * cont + rho0 * conv - p_dot / c

    return r_fourdiv, r_3plus1
