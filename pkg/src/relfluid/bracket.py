"""Discrete Poisson-operator algebra and its verification hooks.

Three operator kinds act on functional gradients:

    general3d     state (u, s, P):
                      du/dt = -(1/s) omega x d_u - grad d_s + (1/s) d_P grad P
                      ds/dt = -div d_u
                      dP/dt = -(1/s) grad P . d_u
    barotropic3d  state (u, s): the first two rows without the P column
    twod          state q: dq/dt = (1/k) [inv_L d_q, q], with inv_L the
                  frozen-coefficient inverse of div(gamma grad .)

together with the closed-form gradients of the conserved functionals, the
duality pairing that turns (gradient, tangent) into a scalar rate, and the
per-row Casimir-condition residuals.

Verification strategy implemented here and exercised by the test suite:
antisymmetry of the pairing, the Casimir kernel (mass always; helicity for
the barotropic operator; enstrophy for the planar one), and operator/EOM
consistency - applying the operator to the energy gradient must reproduce
the solver right-hand side to near rounding. To make that last check an
identity rather than an approximation, every dealias placement here
mirrors the corresponding placement in solver3d, and d_s of the energy is
assembled with the same cancellation-free split c^2 + |u|^2/(1+gamma)
used by the solver's inertial potential.

The Jacobi identity is deliberately not tested numerically: the continuum
operators satisfy it analytically, the discretization is not guaranteed
to inherit it, and a failing discrete residual would say nothing about
either. Antisymmetry, the Casimir kernel, and EOM consistency are the
discretization-robust consequences, so those are what this module checks.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .eos import zeta_family
from .errors import IncompatibleFunctional
from .relativity import gamma_from_u
from .solver2d import State2D, solve_coefficient_poisson
from .solver3d import FluidState3D, cross_product, dealias_vector

Array = np.ndarray

FUNCTIONALS = ("H_general", "H_barotropic", "H_2D", "M", "K", "E")
BRACKET_KINDS = ("general3d", "barotropic3d", "twod")


@dataclasses.dataclass(frozen=True)
class FunctionalGradient:
    """Functional-derivative triplet (d_u, d_s, d_P) of a 3D functional.

    d_P is None for functionals of barotropic states, where pressure is
    not an independent coordinate.
    """

    d_u: Array
    d_s: Array
    d_P: Array | None = None


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise IncompatibleFunctional(message)


def functional_gradient(functional: str, state):
    """Closed-form gradient of one of the named conserved functionals.

    Three-dimensional functionals return a FunctionalGradient; planar
    functionals (of the stream function) return a single scalar field.

    Forms: energy d_u = (s/gamma) u, d_s = c^2 gamma (+ zeta'(s) under a
    barotropic closure), d_P = -1; mass d_u = 0, d_s = 1, d_P = 0;
    helicity d_u = 2 curl u, d_s = 0, d_P = 0. Planar energy
    d/d_psi = k div(gamma grad psi); planar enstrophy
    d/d_psi = (1/k) L_gamma(L_gamma psi) with the coefficient gamma frozen
    at the state's value - the form the operator algebra uses, not a
    finite-difference limit of E under psi variations (the gamma field's
    own psi-dependence is excluded by construction).
    """
    if functional not in FUNCTIONALS:
        raise IncompatibleFunctional(
            f"unknown functional {functional!r}; expected one of {FUNCTIONALS}"
        )

    if isinstance(state, State2D):
        _require(
            functional in ("H_2D", "E", "M"),
            f"{functional} is not a planar functional",
        )
        _require(
            state.density_field is None,
            "planar functional gradients require constant density",
        )
        grid = state.grid
        if functional == "M":
            return np.zeros(grid.shape)
        gamma = state.gamma()
        k = state.density
        if functional == "H_2D":
            return k * grid.gamma_laplacian(state.psi, gamma)
        # E: frozen-coefficient double application
        return grid.gamma_laplacian(state.q, gamma) / k

    if not isinstance(state, FluidState3D):
        raise TypeError(f"unsupported state type {type(state).__name__}")

    grid = state.grid
    zeros = np.zeros(grid.shape)
    vec_zeros = np.zeros((3, *grid.shape))
    general = state.mode == "general"

    if functional == "M":
        return FunctionalGradient(
            d_u=vec_zeros, d_s=np.ones(grid.shape), d_P=zeros if general else None
        )
    if functional == "K":
        return FunctionalGradient(
            d_u=2.0 * grid.curl(state.u), d_s=zeros, d_P=zeros if general else None
        )
    if functional == "H_general":
        _require(general, "H_general requires an independent pressure field")
        gamma = gamma_from_u(state.u, state.const)
        c2_gamma = state.const.c**2 + np.sum(state.u * state.u, axis=0) / (1.0 + gamma)
        return FunctionalGradient(
            d_u=(state.s / gamma) * state.u,
            d_s=c2_gamma,
            d_P=-np.ones(grid.shape),
        )
    if functional == "H_barotropic":
        _require(not general, "H_barotropic requires a barotropic closure")
        gamma = gamma_from_u(state.u, state.const)
        zeta_p = zeta_family(state.eos)[1]
        c2_gamma = state.const.c**2 + np.sum(state.u * state.u, axis=0) / (1.0 + gamma)
        return FunctionalGradient(
            d_u=(state.s / gamma) * state.u,
            d_s=c2_gamma + zeta_p(state.s),
        )
    raise IncompatibleFunctional(f"{functional} is not a 3D functional")


def _check_kind(kind: str) -> None:
    if kind not in BRACKET_KINDS:
        raise ValueError(f"kind must be one of {BRACKET_KINDS}, got {kind!r}")


def apply_poisson(kind: str, state, g, scheme: str = "arakawa"):
    """Tangent produced by the Poisson operator acting on a gradient.

    Returns (u_dot, s_dot) for barotropic3d, (u_dot, s_dot, p_dot) for
    general3d, and the scalar q_dot for twod. Dealias placements mirror
    the solver right-hand sides exactly, so applying the operator to the
    matching energy gradient reproduces rhs_barotropic / rhs_general /
    rhs_q to rounding. ``scheme`` selects the planar bracket stencil.
    """
    _check_kind(kind)
    if kind == "twod":
        if not isinstance(state, State2D) or state.density_field is not None:
            raise IncompatibleFunctional(
                "the planar operator acts on constant-density planar states"
            )
        grid = state.grid
        phi = solve_coefficient_poisson(grid, g, state.gamma())
        return grid.jacobian_bracket(phi, state.q, scheme) / state.density

    if not isinstance(state, FluidState3D):
        raise TypeError(f"{kind} operates on 3D states")
    grid = state.grid
    omega = grid.curl(state.u)
    u_dot = -dealias_vector(grid, cross_product(omega, g.d_u) / state.s) - grid.gradient(
        g.d_s
    )
    s_dot = -grid.divergence(dealias_vector(grid, g.d_u))
    if kind == "barotropic3d":
        return u_dot, s_dot

    if state.mode != "general":
        raise IncompatibleFunctional(
            "general3d requires a state with an independent pressure field"
        )
    d_P = g.d_P if g.d_P is not None else np.zeros(grid.shape)
    grad_p = grid.gradient(state.P)
    u_dot = u_dot + dealias_vector(grid, d_P * grad_p / state.s)
    p_dot = -grid.dealias(np.sum(grad_p * g.d_u, axis=0) / state.s)
    return u_dot, s_dot, p_dot


def pairing(g, tangent, state) -> float:
    """Duality pairing <gradient, tangent>: the rate dF/dt it induces.

    3D: integral of (d_u . u_dot + d_s s_dot [+ d_P p_dot]).
    Planar: integral of d_q inv_L(q_dot) - the chain rule through
    psi_dot = inv_L q_dot at frozen coefficient, using the same exactly
    self-adjoint inverse as the operator itself (which is what makes the
    pairing antisymmetry exact rather than approximate).
    """
    grid = state.grid
    if isinstance(state, State2D):
        psi_dot = solve_coefficient_poisson(grid, tangent, state.gamma())
        return grid.integrate(g * psi_dot)
    total = grid.integrate(np.sum(g.d_u * tangent[0], axis=0))
    total += grid.integrate(g.d_s * tangent[1])
    if len(tangent) > 2 and g.d_P is not None:
        total += grid.integrate(g.d_P * tangent[2])
    return total


def casimir_residual(kind: str, state, g, scheme: str = "arakawa"):
    """Per-row residuals of the Casimir condition for a candidate gradient.

    general3d rows:   (|omega x d_u + s grad d_s - d_P grad P|_inf,
                       |div d_u|_inf,
                       |d_u . grad P|_inf)
    barotropic3d rows: (|omega x d_u + grad d_s|_inf, |div d_u|_inf)
    twod row:          (|[q, inv_L d_q]|_inf,)

    These are the algebraic kernel conditions, assembled without dealias
    filtering; a functional is a Casimir of the operator exactly when
    every row vanishes.
    """
    _check_kind(kind)
    if kind == "twod":
        if not isinstance(state, State2D) or state.density_field is not None:
            raise IncompatibleFunctional(
                "the planar operator acts on constant-density planar states"
            )
        grid = state.grid
        phi = solve_coefficient_poisson(grid, g, state.gamma())
        return (grid.norm_max(grid.jacobian_bracket(state.q, phi, scheme)),)

    if not isinstance(state, FluidState3D):
        raise TypeError(f"{kind} operates on 3D states")
    grid = state.grid
    omega = grid.curl(state.u)
    row_div = grid.norm_max(grid.divergence(g.d_u))
    if kind == "barotropic3d":
        row_vec = grid.norm_max(cross_product(omega, g.d_u) + grid.gradient(g.d_s))
        return row_vec, row_div
    if state.mode != "general":
        raise IncompatibleFunctional(
            "general3d requires a state with an independent pressure field"
        )
    d_P = g.d_P if g.d_P is not None else np.zeros(grid.shape)
    grad_p = grid.gradient(state.P)
    row_vec = grid.norm_max(
        cross_product(omega, g.d_u) + state.s * grid.gradient(g.d_s) - d_P * grad_p
    )
    row_p = grid.norm_max(np.sum(g.d_u * grad_p, axis=0))
    return row_vec, row_div, row_p
