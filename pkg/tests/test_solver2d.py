"""Planar vortex solver: inversion, right-hand sides, and time stepping."""

import numpy as np
import pytest

from relfluid.errors import InverterDiverged, NonPositiveDensity, SuperluminalVelocity
from relfluid.grid import Grid2D
from relfluid.initial_conditions import band_limited_noise
from relfluid.relativity import PhysicalConstants
from relfluid.solver2d import (
    cfl_dt,
    invert_gamma_laplacian,
    rhs_density,
    rhs_q,
    solve_coefficient_poisson,
    state_from_psi,
    state_from_q,
    step_rk4_2d,
)


def _noise_psi(grid, seed, grad_max):
    """Band-limited stream function scaled to a prescribed max |grad psi|."""
    psi = band_limited_noise(grid, np.random.default_rng(seed))
    g = grid.gradient(psi)
    psi *= grad_max / np.max(np.sqrt(g[0] ** 2 + g[1] ** 2))
    return psi


def _grad_mag_max(grid, psi):
    g = grid.gradient(psi)
    return float(np.max(np.sqrt(g[0] ** 2 + g[1] ** 2)))


# --------------------------------------------------------------------------
# nonlinear inversion
# --------------------------------------------------------------------------


def test_invert_zero_source_gives_zero():
    grid = Grid2D(32, 32)
    psi = invert_gamma_laplacian(grid, np.zeros(grid.shape), PhysicalConstants(c=1.0))
    assert np.max(np.abs(psi)) == 0.0


def test_invert_reduces_to_poisson_at_large_c():
    grid = Grid2D(32, 32)
    x, y = grid.coords
    want = np.sin(x) * np.sin(y)
    got = invert_gamma_laplacian(grid, -2.0 * want, PhysicalConstants(c=1e9))
    assert np.max(np.abs(got - want)) < 1e-9


def test_invert_satisfies_nonlinear_equation_at_speed():
    # Build q from a known psi whose flow reaches 0.2 c, then check the
    # inverter's answer closes the nonlinear equation applied independently.
    grid = Grid2D(64, 64)
    psi0 = _noise_psi(grid, seed=10, grad_max=1.0)
    const = PhysicalConstants(c=5.0 * _grad_mag_max(grid, psi0))
    state = state_from_psi(grid, psi0, const)
    tol = 1e-10
    psi = invert_gamma_laplacian(grid, state.q, const, tol=tol)
    gamma = state_from_psi(grid, psi, const).gamma()
    residual = grid.norm_max(grid.gamma_laplacian(psi, gamma) - state.q)
    assert residual <= tol * grid.norm_max(state.q)


def test_invert_with_info_reports_iterations_and_residual():
    grid = Grid2D(48, 48)
    psi0 = _noise_psi(grid, seed=11, grad_max=1.0)
    const = PhysicalConstants(c=2.5)  # flow at 0.4 c: genuinely nonlinear
    q = state_from_psi(grid, psi0, const).q
    psi, info = invert_gamma_laplacian(grid, q, const, with_info=True)
    assert info["iterations"] >= 2
    assert info["residual"] <= 1e-10 * grid.norm_max(q)
    assert np.all(np.isfinite(psi))


def test_invert_raises_when_iteration_budget_is_too_small():
    grid = Grid2D(48, 48)
    psi0 = _noise_psi(grid, seed=12, grad_max=1.0)
    const = PhysicalConstants(c=2.5)
    q = state_from_psi(grid, psi0, const).q
    with pytest.raises(InverterDiverged):
        invert_gamma_laplacian(grid, q, const, max_iter=1)


def test_frozen_coefficient_solve_is_self_adjoint():
    # <a, L^-1 b> == <L^-1 a, b> to machine precision; the bracket pairing
    # relies on this being exact, not approximate.
    grid = Grid2D(32, 32)
    rng = np.random.default_rng(13)
    a = grid.resolvable_source(rng.standard_normal(grid.shape))
    b = grid.resolvable_source(rng.standard_normal(grid.shape))
    coeff = 1.2 + 0.15 * np.cos(grid.coords[0])
    left_field = a * solve_coefficient_poisson(grid, b, coeff)
    left = grid.integrate(left_field)
    right = grid.integrate(solve_coefficient_poisson(grid, a, coeff) * b)
    # the pairings nearly cancel, so scale by the cancellation-free integral
    scale = grid.integrate(np.abs(left_field))
    assert abs(left - right) < 1e-14 * scale


# --------------------------------------------------------------------------
# state construction
# --------------------------------------------------------------------------


def test_state_from_psi_round_trip():
    grid = Grid2D(32, 32)
    psi0 = _noise_psi(grid, seed=14, grad_max=0.5) + 3.0  # deliberate offset
    const = PhysicalConstants(c=10.0)
    state = state_from_psi(grid, psi0, const)
    # the stored stream function is the zero-mean representative
    assert abs(np.mean(state.psi)) < 1e-13
    assert np.max(np.abs(state.psi - (psi0 - np.mean(psi0)))) < 1e-12
    # and q closes the defining elliptic equation
    back = grid.gamma_laplacian(state.psi, state.gamma())
    assert np.max(np.abs(back - state.q)) < 1e-12 * grid.norm_max(state.q)


def test_state_from_q_round_trip():
    grid = Grid2D(32, 32)
    const = PhysicalConstants(c=10.0)
    q = state_from_psi(grid, _noise_psi(grid, 15, 0.5), const).q
    state = state_from_q(grid, q, const)
    assert np.array_equal(state.q, q)
    residual = grid.norm_max(grid.gamma_laplacian(state.psi, state.gamma()) - q)
    assert residual <= 1e-10 * grid.norm_max(q)


def test_velocity_is_rotated_stream_function_gradient():
    # In this planar model the stream function generates the coordinate
    # velocity directly; the Lorentz factor lives in the q <-> psi map.
    grid = Grid2D(32, 32)
    const = PhysicalConstants(c=4.0)
    state = state_from_psi(grid, _noise_psi(grid, 16, 1.0), const)
    assert np.array_equal(state.velocity, grid.perp_gradient(state.psi))
    g = grid.gradient(state.psi)
    assert state.max_speed() == np.max(np.sqrt(g[0] ** 2 + g[1] ** 2))
    assert state.max_speed() < const.c


def test_superluminal_stream_function_rejected():
    grid = Grid2D(32, 32)
    psi = _noise_psi(grid, 17, grad_max=2.0)
    with pytest.raises(SuperluminalVelocity):
        state_from_psi(grid, psi, PhysicalConstants(c=1.0))


def test_nonpositive_density_rejected():
    grid = Grid2D(16, 16)
    const = PhysicalConstants(c=100.0)
    psi = _noise_psi(grid, 18, 0.1)
    with pytest.raises(NonPositiveDensity):
        state_from_psi(grid, psi, const, density=-1.0)
    with pytest.raises(NonPositiveDensity):
        state_from_psi(
            grid, psi, const, density_field=np.zeros(grid.shape)
        )


# --------------------------------------------------------------------------
# right-hand sides
# --------------------------------------------------------------------------


def test_unidirectional_flow_is_an_exact_fixed_point():
    grid = Grid2D(32, 32)
    const = PhysicalConstants(c=5.0)
    psi = np.cos(grid.coords[0])  # depends on x only
    state = state_from_psi(grid, psi, const)
    assert np.max(np.abs(rhs_q(state, "arakawa"))) == 0.0
    spectral = rhs_q(state, "spectral")
    scale = grid.norm_max(state.q) * grid.norm_max(state.psi) / grid.h_min**2
    assert np.max(np.abs(spectral)) < 1e-14 * scale


def test_classical_eigenvortex_is_stationary():
    # At infinite c the cellular vortex has q = -2 psi, so [psi, q] vanishes
    # by bilinearity up to roundoff amplified through the stencil.
    grid = Grid2D(32, 32)
    x, y = grid.coords
    state = state_from_psi(grid, np.sin(x) * np.sin(y), PhysicalConstants(c=np.inf))
    scale = grid.norm_max(state.q) * grid.norm_max(state.psi) / grid.h_min**2
    assert np.max(np.abs(rhs_q(state, "arakawa"))) < 1e-12 * scale


def test_advected_density_rhs_requires_density_field():
    grid = Grid2D(16, 16)
    state = state_from_psi(grid, _noise_psi(grid, 19, 0.1), PhysicalConstants(c=10.0))
    with pytest.raises(ValueError, match="density"):
        rhs_density(state)


def test_constant_density_field_is_stationary_to_roundoff():
    # The kernel collects stencil terms so constants cancel to roundoff,
    # not bitwise; the scale is the stencil's own magnitude.
    grid = Grid2D(32, 32)
    const = PhysicalConstants(c=10.0)
    psi = _noise_psi(grid, 20, 1.0)
    state = state_from_psi(grid, psi, const, density_field=np.full(grid.shape, 2.0))
    scale = 2.0 * grid.norm_max(psi) / grid.h_min**2
    assert np.max(np.abs(rhs_density(state, "arakawa"))) < 1e-14 * scale


def test_density_equal_to_stream_function_is_stationary():
    grid = Grid2D(32, 32)
    const = PhysicalConstants(c=10.0)
    psi = _noise_psi(grid, 21, 1.0)
    state = state_from_psi(grid, psi, const, density_field=psi + 2.0)
    # [psi, psi] == 0 bitwise; the +2 offset cancels only to roundoff
    scale = 2.0 * grid.norm_max(psi) / grid.h_min**2
    assert np.max(np.abs(rhs_density(state, "arakawa"))) < 1e-14 * scale


def test_density_advection_satisfies_discrete_chain_rule():
    # For s = F(q) pointwise, [psi, F(q)] - F'(q) [psi, q] is pure
    # truncation and must shrink at second order.
    errors, hs = [], []
    for n in (32, 64, 128):
        grid = Grid2D(n, n)
        x, y = grid.coords
        psi = np.sin(x) * np.cos(y) + 0.3 * np.cos(2.0 * x + y)
        const = PhysicalConstants(c=np.inf)
        q = grid.laplacian(psi)
        state = state_from_psi(grid, psi, const, density_field=np.exp(0.2 * q))
        lhs = rhs_density(state, "arakawa")
        rhs = 0.2 * np.exp(0.2 * q) * rhs_q(state, "arakawa")
        errors.append(np.max(np.abs(lhs - rhs)))
        hs.append(grid.dx)
    assert np.all(np.diff(errors) < 0)
    from oracles import fit_order

    assert fit_order(hs, errors) > 1.8


# --------------------------------------------------------------------------
# time stepping
# --------------------------------------------------------------------------


def test_cfl_dt():
    grid = Grid2D(32, 32)
    rest = state_from_psi(grid, np.zeros(grid.shape), PhysicalConstants(c=1.0))
    assert cfl_dt(rest, 0.4) == np.inf
    state = state_from_psi(grid, _noise_psi(grid, 22, 1.0), PhysicalConstants(c=4.0))
    want = 0.4 * grid.h_min / state.max_speed()
    assert abs(cfl_dt(state, 0.4) - want) < 1e-15 * want


def test_shear_flow_is_bitwise_steady_over_many_steps():
    grid = Grid2D(32, 32)
    const = PhysicalConstants(c=5.0)
    state = state_from_psi(grid, np.cos(grid.coords[0]), const)
    q0 = state.q.copy()
    for _ in range(100):
        state = step_rk4_2d(state, 0.02)
    assert np.array_equal(state.q, q0)
    assert state.t == pytest.approx(2.0, abs=1e-14)


def test_rk4_temporal_convergence_is_fourth_order():
    grid = Grid2D(48, 48)
    psi0 = _noise_psi(grid, seed=23, grad_max=1.0)
    const = PhysicalConstants(c=5.0)

    def march(dt, t_end=0.4):
        state = state_from_psi(grid, psi0, const)
        steps = round(t_end / dt)
        for _ in range(steps):
            state = step_rk4_2d(state, dt)
        return state

    ref = march(0.0125)
    coarse = march(0.1)
    fine = march(0.05)
    e_coarse = grid.norm_l2(coarse.q - ref.q)
    e_fine = grid.norm_l2(fine.q - ref.q)
    ratio = e_coarse / e_fine
    assert 10.0 < ratio < 24.0  # asymptotic value 16 for a fourth-order method

    # invariants of the discretization survive the march; the inversion
    # targets the resolvable part of q (checkerboard content generated by
    # the stencil products drives no flow and is outside the operator range)
    assert abs(np.mean(fine.q)) < 1e-13 * grid.norm_max(fine.q)
    residual = grid.norm_max(
        grid.gamma_laplacian(fine.psi, fine.gamma()) - grid.resolvable_source(fine.q)
    )
    assert residual <= 1e-9 * grid.norm_max(fine.q)


def test_step_preserves_density_positivity_guard():
    grid = Grid2D(32, 32)
    const = PhysicalConstants(c=10.0)
    state = state_from_psi(
        grid,
        _noise_psi(grid, 24, 1.0),
        const,
        density_field=np.full(grid.shape, 1.5),
    )
    stepped = step_rk4_2d(state, 0.01)
    assert np.all(stepped.density_field > 0)
    assert stepped.t == pytest.approx(0.01)
