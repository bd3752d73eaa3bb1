"""Initial-condition presets.

Every preset is deterministic given the seed and describes a continuum
field, not a grid artifact: random fields are synthesized as explicit
sums over a fixed set of integer Fourier modes drawn once from the
seed, so the same configuration evaluated at different resolutions
samples the same smooth function.  That is what makes refinement
studies honest — coarse and fine runs start from one flow.

Presets
-------
``taylor_green`` (planar): psi = a sin x sin y, the stationary cell of
    the classical vorticity equation (gamma-corrections make it move).
``shear`` (planar): psi = a cos y; q depends on y alone, so the
    advection bracket vanishes identically and the state is steady at
    every light speed — a sharp integrator test.
``random`` (planar or volumetric): band-limited noise with mode
    variance proportional to k^2 exp(-(k/k0)^2), k0 = spectrum_peak.
    Planar fields are stream functions; volumetric velocities are built
    directly from i k x c coefficients, hence exactly solenoidal in v.
    Amplitude rescales the field so the grid maximum of |v| equals the
    configured amplitude.
``abc`` (volumetric): u = a(sin z + cos y, sin x + cos z, sin y + cos x),
    the equal-coefficient Beltrami swirl with curl u = u, giving the
    closed-form helicity 3 a^2 (2 pi)^3 on the 2 pi-periodic box.

In pressure-carrying (general) mode the density and pressure receive
independent band-limited perturbations around 1 with fixed contrast
0.3; their cross-gradient is what sources the baroclinic breakdown
studies.  Volumetric barotropic random states are exactly
divergence-free in v by construction, so the optional Leray projection
starts from (and preserves) the constraint rather than jumping at the
first step.
"""

from __future__ import annotations

import math

import numpy as np

from .config import ScenarioConfig
from .errors import ValidationError
from .grid import Grid2D, Grid3D
from .relativity import PhysicalConstants, gamma_from_v
from .solver2d import State2D, state_from_psi
from .solver3d import FluidState3D, project_div_free

Array = np.ndarray

DENSITY_BASE = 1.0
DENSITY_CONTRAST = 0.3
PRESSURE_BASE = 1.0
PRESSURE_CONTRAST = 0.3

# The random band is cut where the envelope k^2 exp(-(k/k0)^2) has
# decayed to numerical irrelevance; three e-foldings of the Gaussian
# leave a relative tail below 1e-7.
_BAND_FACTOR = 3.0


def _band_cut(k0: float) -> int:
    return max(3, math.ceil(_BAND_FACTOR * k0))


def _check_band(grid, cut: int) -> None:
    limit = min(n // 3 for n in grid.shape)
    if cut > limit:
        raise ValidationError(
            [
                f"random band extends to integer mode {cut} but the grid "
                f"resolves only {limit} dealiased modes per axis; refine the "
                "grid or lower spectrum_peak"
            ]
        )


def _half_space_modes(cut: int, dims: int) -> list[tuple[int, ...]]:
    """Integer wavevectors with |n_i| <= cut, one per conjugate pair.

    Enumeration order is fixed (lexicographic) so the random draws that
    follow it are reproducible and independent of grid shape.
    """
    ranges = [range(-cut, cut + 1)] * dims
    modes = []
    for mode in np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, dims):
        tup = tuple(int(m) for m in mode)
        for component in tup:
            if component > 0:
                modes.append(tup)
                break
            if component < 0:
                break
    return modes


def _envelope(n_sq: float, k0: float) -> float:
    # standard deviation; variance is n^2 exp(-(|n|/k0)^2)
    return math.sqrt(n_sq) * math.exp(-0.5 * n_sq / (k0 * k0))


def _random_scalar(grid, seed_key: list[int], k0: float) -> Array:
    """Band-limited scalar, normalized to max |f| = 1."""
    cut = _band_cut(k0)
    _check_band(grid, cut)
    rng = np.random.default_rng(seed_key)
    coords = grid.coords
    kappa = [2.0 * math.pi / length for length in grid.lengths]
    f = np.zeros(grid.shape)
    for mode in _half_space_modes(cut, len(grid.shape)):
        n_sq = float(sum(m * m for m in mode))
        sigma = _envelope(n_sq, k0)
        g = rng.normal()
        phase = rng.uniform(0.0, 2.0 * math.pi)
        if sigma == 0.0:
            continue
        arg = sum(m * kap * x for m, kap, x in zip(mode, kappa, coords)) + phase
        f += (sigma * g) * np.cos(arg)
    return f / np.abs(f).max()


def _random_solenoidal_v(grid: Grid3D, seed_key: list[int], k0: float) -> Array:
    """Band-limited velocity with div v = 0 exactly.

    Each mode contributes Re[(i k x c) e^{i k.x}] for a complex Gaussian
    vector c, so every contribution is orthogonal to its wavevector and
    the spectral divergence vanishes identically.  Normalized to
    max |v| = 1.
    """
    cut = _band_cut(k0)
    _check_band(grid, cut)
    rng = np.random.default_rng(seed_key)
    coords = grid.coords
    kappa = [2.0 * math.pi / length for length in grid.lengths]
    v = np.zeros((3,) + grid.shape)
    for mode in _half_space_modes(cut, 3):
        n_sq = float(sum(m * m for m in mode))
        sigma = _envelope(n_sq, k0)
        re = rng.normal(size=3)
        im = rng.normal(size=3)
        if sigma == 0.0:
            continue
        k_phys = np.array([m * kap for m, kap in zip(mode, kappa)])
        w = 1j * np.cross(k_phys, re + 1j * im) * (sigma / math.sqrt(2.0))
        arg = sum(m * kap * x for m, kap, x in zip(mode, kappa, coords))
        cos_arg = np.cos(arg)
        sin_arg = np.sin(arg)
        for i in range(3):
            v[i] += w[i].real * cos_arg - w[i].imag * sin_arg
    speed = np.sqrt(np.sum(v * v, axis=0)).max()
    return v / speed


def taylor_green_psi(grid: Grid2D, amplitude: float) -> Array:
    x, y = grid.coords
    return amplitude * np.sin(2.0 * math.pi * x / grid.lengths[0]) * np.sin(
        2.0 * math.pi * y / grid.lengths[1]
    )


def shear_psi(grid: Grid2D, amplitude: float) -> Array:
    _, y = grid.coords
    return amplitude * np.cos(2.0 * math.pi * y / grid.lengths[1])


def abc_velocity(grid: Grid3D, amplitude: float) -> Array:
    x, y, z = [
        2.0 * math.pi * coord / length
        for coord, length in zip(grid.coords, grid.lengths)
    ]
    return amplitude * np.stack(
        [
            np.sin(z) + np.cos(y),
            np.sin(x) + np.cos(z),
            np.sin(y) + np.cos(x),
        ]
    )


def _planar_state(
    config: ScenarioConfig, grid: Grid2D, const: PhysicalConstants
) -> State2D:
    preset = config.initial_condition
    if preset == "taylor_green":
        psi = taylor_green_psi(grid, config.amplitude)
    elif preset == "shear":
        psi = shear_psi(grid, config.amplitude)
    else:
        psi = _random_scalar(grid, [config.seed, 0], config.spectrum_peak)
        gx, gy = grid.gradient(psi)
        psi *= config.amplitude / np.sqrt(gx * gx + gy * gy).max()
    return state_from_psi(grid, psi, const, density=config.k)


def _volumetric_state(
    config: ScenarioConfig,
    grid: Grid3D,
    const: PhysicalConstants,
    general: bool,
    z_symmetric: bool,
) -> FluidState3D:
    preset = config.initial_condition
    if z_symmetric:
        # Planar flow embedded in the volume: v = perp-gradient of a
        # z-independent stream function, so vorticity is purely
        # vertical and the planar enstrophy budget applies verbatim.
        plane = Grid2D(grid.shape[0], grid.shape[1], grid.lengths[0], grid.lengths[1])
        psi = _random_scalar(plane, [config.seed, 0], config.spectrum_peak)
        v_plane = plane.perp_gradient(psi)
        v_plane /= np.sqrt(np.sum(v_plane * v_plane, axis=0)).max()
        v = np.zeros((3,) + grid.shape)
        v[0] = config.amplitude * v_plane[0][:, :, None]
        v[1] = config.amplitude * v_plane[1][:, :, None]
        u = gamma_from_v(v, const) * v
    elif preset == "abc":
        u = abc_velocity(grid, config.amplitude)
    else:
        v = config.amplitude * _random_solenoidal_v(
            grid, [config.seed, 0], config.spectrum_peak
        )
        u = gamma_from_v(v, const) * v

    def scalar(stream: int, plane_only: bool) -> Array:
        if plane_only:
            plane = Grid2D(
                grid.shape[0], grid.shape[1], grid.lengths[0], grid.lengths[1]
            )
            f2 = _random_scalar(plane, [config.seed, stream], config.spectrum_peak)
            return np.broadcast_to(f2[:, :, None], grid.shape).copy()
        return _random_scalar(grid, [config.seed, stream], config.spectrum_peak)

    if preset == "abc" and not general:
        s = np.full(grid.shape, DENSITY_BASE)
    else:
        s = DENSITY_BASE + DENSITY_CONTRAST * scalar(1, z_symmetric)

    if general:
        pressure = PRESSURE_BASE + PRESSURE_CONTRAST * scalar(2, z_symmetric)
        return FluidState3D(grid, u, s, const, P=pressure)

    # Barotropic states start on the divergence-free leaf the structure
    # analysis restricts to; for fields already solenoidal in v (the
    # random preset by construction, the swirl preset at large c) this
    # is a no-op fixed point.
    u = project_div_free(grid, u, const, tol=config.tol)
    return FluidState3D(grid, u, s, const, eos=config.eos)


def make_initial_condition(
    config: ScenarioConfig,
    const: PhysicalConstants | None = None,
    z_symmetric: bool = False,
):
    """Build the configured preset state.

    ``const`` overrides the config's light speed (the classical-limit
    study sweeps several values over one seed).  ``z_symmetric``
    restricts volumetric random fields to z-independent planar flow,
    the geometry in which vorticity is purely vertical and the planar
    enstrophy budget of the breakdown study applies.
    """
    if const is None:
        const = config.constants
    if config.is_planar:
        grid = Grid2D(config.nx, config.ny, config.lx, config.ly)
        return _planar_state(config, grid, const)
    grid = Grid3D(config.nx, config.ny, config.nz, config.lx, config.ly, config.lz or 2.0 * math.pi)
    general = config.mode in ("run3d_general", "baroclinic")
    return _volumetric_state(config, grid, const, general, z_symmetric)


def band_limited_noise(grid, rng, cut: int | None = None) -> Array:
    """Grid-sampled white noise restricted to low modes, unit max norm.

    Unlike the presets above, this is an FFT-space construction tied to
    the grid at hand — fast enough to seed hundreds of generic fields
    for the structure checks, but not resolution-portable.  The default
    band keeps exactly the modes the 2/3 dealias rule keeps, so the
    field passes through the dealias filter unchanged.  Zero mean.
    """
    spectrum = np.fft.fftn(rng.standard_normal(grid.shape))
    for axis, n in enumerate(grid.shape):
        limit = n // 3 if cut is None else min(cut, n // 2)
        index = np.fft.fftfreq(n, 1.0 / n)
        shape = [1] * len(grid.shape)
        shape[axis] = n
        spectrum *= (np.abs(index) <= limit).reshape(shape)
    field = np.fft.ifftn(spectrum).real
    field -= field.mean()
    return field / np.abs(field).max()
