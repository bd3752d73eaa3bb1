"""Planar stream-function solver.

State is the curl density ``q`` (the coefficient Laplacian of the stream
function: q = div(gamma grad psi), with gamma the Lorentz factor of the
flow speed |grad psi|). The velocity is grad(psi) x z_hat, so the flow is
incompressible by construction and q is advected as a scalar:

    dq/dt = [psi, q],

with the bracket [f, g] = f_x g_y - f_y g_x. An optional density field is
advected alongside by the same bracket. Setting ``c = inf`` runs the
classical limit exactly (gamma is identically one and the inversion is a
single Poisson solve).

The nonlinear inversion q -> psi is a fixed-point iteration preconditioned
by the flat-Laplacian solve. Its contraction rate is roughly
max(gamma - 1), so it needs flow speeds below about 0.87c; the iteration
reports divergence rather than returning an unconverged field.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import _kernels
from .errors import InverterDiverged, NonPositiveDensity, SuperluminalVelocity
from .grid import Grid2D
from .relativity import PhysicalConstants

Array = np.ndarray

INVERTER_TOL = 1e-10
INVERTER_MAX_ITER = 200


@dataclasses.dataclass(frozen=True)
class State2D:
    """Planar flow state.

    ``psi`` is kept consistent with ``q`` (re-inverted after every change
    of q) and both are zero-mean. ``density`` is the uniform lab-frame
    density in constant-density mode; ``density_field`` replaces it when
    the density is advected.
    """

    grid: Grid2D
    q: Array
    psi: Array
    const: PhysicalConstants
    density: float = 1.0
    density_field: Array | None = None
    t: float = 0.0

    def __post_init__(self):
        scale = self.grid.norm_max(self.q)
        if scale > 0.0 and abs(float(np.mean(self.q))) > 1e-12 * scale:
            raise ValueError("q must have zero mean")
        if self.density_field is None:
            if not self.density > 0.0:
                raise NonPositiveDensity(f"density = {self.density}")
        elif np.min(self.density_field) <= 0.0:
            raise NonPositiveDensity("density_field has non-positive values")

    @property
    def velocity(self) -> Array:
        """Coordinate velocity grad(psi) x z_hat."""
        return self.grid.perp_gradient(self.psi)

    def gamma(self) -> Array:
        px, py = self.grid.gradient(self.psi)
        return _kernels.lorentz_gamma_2d(px, py, self.const.inv_c2)

    def max_speed(self) -> float:
        px, py = self.grid.gradient(self.psi)
        return float(np.sqrt(np.max(px * px + py * py)))


def _speed_cap_check(grid: Grid2D, grad_psi_sq: Array, const: PhysicalConstants) -> None:
    cap = const.c_frac_max * const.c
    if cap != math.inf and float(np.max(grad_psi_sq)) > cap * cap:
        raise SuperluminalVelocity(
            f"max |v| = {math.sqrt(float(np.max(grad_psi_sq))):.6g} exceeds "
            f"{const.c_frac_max:g} * c"
        )


def invert_gamma_laplacian(
    grid: Grid2D,
    q: Array,
    const: PhysicalConstants,
    tol: float = INVERTER_TOL,
    max_iter: int = INVERTER_MAX_ITER,
    with_info: bool = False,
):
    """Solve div(gamma(grad psi) grad psi) = q for a zero-mean psi.

    Fixed-point iteration preconditioned by the flat Poisson solve,
    starting from the flat solution:

        psi_0     = poisson_solve(q)
        psi_(n+1) = poisson_solve(q - div((gamma_n - 1) grad psi_n))

    assembled in residual form (identical map, one divergence fewer).
    Stops when max|div(gamma grad psi) - q| <= tol * max|q|. Raises
    InverterDiverged past ``max_iter`` and SuperluminalVelocity if an
    iterate's flow speed crosses the velocity cap.

    The solve targets the resolvable part of q: pure-Nyquist checkerboard
    content has identically zero spectral derivative, drives no flow, and
    is outside the operator's range, so it is excluded from both the
    solution and the residual.
    """
    q = grid.resolvable_source(q)
    q_scale = grid.norm_max(q)
    psi = grid.poisson_solve(q)
    n_solves = 1
    inv_c2 = const.inv_c2
    for _ in range(max_iter):
        gx, gy = grid.gradient(psi)
        speed_sq = gx * gx + gy * gy
        _speed_cap_check(grid, speed_sq, const)
        gamma = _kernels.lorentz_gamma_2d(gx, gy, inv_c2)
        residual = grid.divergence(np.stack([gamma * gx, gamma * gy])) - q
        res_norm = grid.norm_max(residual)
        if res_norm <= tol * q_scale:
            if with_info:
                return psi, {"iterations": n_solves, "residual": res_norm}
            return psi
        # q - div((gamma-1) grad psi) == laplacian(psi) - residual
        psi = grid.poisson_solve(grid.laplacian(psi) - residual)
        n_solves += 1
    raise InverterDiverged(
        f"no convergence after {max_iter} iterations; last residual "
        f"{res_norm:.3e} vs target {tol * q_scale:.3e}"
    )


def solve_coefficient_poisson(
    grid: Grid2D, rhs: Array, coeff: Array, n_iter: int = 48
) -> Array:
    """Linear solve of div(coeff grad phi) = rhs for a frozen coefficient.

    Same preconditioned iteration as the nonlinear inverter but with the
    coefficient held fixed and a fixed iteration count. Running a fixed
    number of sweeps keeps the solve an exactly self-adjoint linear
    operator (each sweep is a palindromic composition of self-adjoint
    pieces), which the bracket algebra checks rely on. The flat solve
    projects onto resolvable modes, so the result solves the equation
    against the resolvable part of rhs; the projection is applied up
    front (the solve's bin arithmetic is identical either way) so that
    algebraically zero-mean sources sitting at the rounding floor - e.g.
    bracket outputs of near-kernel gradients - do not trip the flat
    solve's misuse guard on their roundoff mean.
    """
    rhs = grid.resolvable_source(rhs)
    phi = grid.poisson_solve(rhs)
    cm1 = coeff - 1.0
    for _ in range(n_iter):
        gx, gy = grid.gradient(phi)
        correction = grid.divergence(np.stack([cm1 * gx, cm1 * gy]))
        phi = grid.poisson_solve(rhs - correction)
    return phi


def rhs_q(state: State2D, scheme: str = "arakawa") -> Array:
    """dq/dt = [psi, q]."""
    return state.grid.jacobian_bracket(state.psi, state.q, scheme)


def rhs_density(state: State2D, scheme: str = "arakawa") -> Array:
    """ds/dt = [psi, s] for the advected-density mode."""
    if state.density_field is None:
        raise ValueError("state has no advected density field")
    return state.grid.jacobian_bracket(state.psi, state.density_field, scheme)


def cfl_dt(state: State2D, cfl: float) -> float:
    """Advective CFL step; inf when the flow is at rest."""
    vmax = state.max_speed()
    if vmax == 0.0:
        return math.inf
    return cfl * state.grid.h_min / vmax


def step_rk4_2d(
    state: State2D,
    dt: float,
    scheme: str = "arakawa",
    tol: float = INVERTER_TOL,
    max_iter: int = INVERTER_MAX_ITER,
) -> State2D:
    """Classical fourth-order Runge-Kutta step.

    The stream function is re-inverted from q at every stage, so each
    stage velocity is consistent with its stage vorticity.
    """
    grid = state.grid
    q0 = state.q
    s0 = state.density_field

    def stage(q: Array, psi: Array, s: Array | None):
        qdot = grid.jacobian_bracket(psi, q, scheme)
        sdot = None if s is None else grid.jacobian_bracket(psi, s, scheme)
        return qdot, sdot

    def advance(dq: Array, ds: Array | None, frac: float):
        q = q0 + (frac * dt) * dq
        psi = invert_gamma_laplacian(grid, q, state.const, tol, max_iter)
        s = None if s0 is None else s0 + (frac * dt) * ds
        return q, psi, s

    k1q, k1s = stage(q0, state.psi, s0)
    q2, psi2, s2 = advance(k1q, k1s, 0.5)
    k2q, k2s = stage(q2, psi2, s2)
    q3, psi3, s3 = advance(k2q, k2s, 0.5)
    k3q, k3s = stage(q3, psi3, s3)
    q4, psi4, s4 = advance(k3q, k3s, 1.0)
    k4q, k4s = stage(q4, psi4, s4)

    q_new = q0 + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
    psi_new = invert_gamma_laplacian(grid, q_new, state.const, tol, max_iter)
    s_new = None
    if s0 is not None:
        s_new = s0 + (dt / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
        if np.min(s_new) <= 0.0:
            raise NonPositiveDensity("advected density lost positivity")
    return dataclasses.replace(
        state, q=q_new, psi=psi_new, density_field=s_new, t=state.t + dt
    )


def state_from_psi(
    grid: Grid2D,
    psi: Array,
    const: PhysicalConstants,
    density: float = 1.0,
    density_field: Array | None = None,
) -> State2D:
    """Build a consistent state from a stream function."""
    psi = psi - float(np.mean(psi))
    gx, gy = grid.gradient(psi)
    _speed_cap_check(grid, gx * gx + gy * gy, const)
    gamma = _kernels.lorentz_gamma_2d(gx, gy, const.inv_c2)
    q = grid.divergence(np.stack([gamma * gx, gamma * gy]))
    return State2D(
        grid=grid, q=q, psi=psi, const=const,
        density=density, density_field=density_field,
    )


def state_from_q(
    grid: Grid2D,
    q: Array,
    const: PhysicalConstants,
    density: float = 1.0,
    density_field: Array | None = None,
    tol: float = INVERTER_TOL,
    max_iter: int = INVERTER_MAX_ITER,
) -> State2D:
    """Build a consistent state from the curl density."""
    psi = invert_gamma_laplacian(grid, q, const, tol, max_iter)
    return State2D(
        grid=grid, q=q, psi=psi, const=const,
        density=density, density_field=density_field,
    )
