"""Scenario orchestration: march runs, sweeps, and structure checks.

One process runs one scenario.  Every run directory is self-describing:
a normalized config echo (``config.txt``), a ``manifest.json`` naming
the code version and operator choices, ``diagnostics.csv`` with one row
per step, and snapshot files for the initial state, every
``snapshot_every``-th step, and the final state.  A run that dies on a
model error leaves its partial outputs plus ``error_manifest.json``.

Composite modes build on the plain marches:

* ``limit_study`` — evolves one seeded planar flow under the classical
  (infinite light speed) equations and at c = 1e3 and c = 1e4, forcing
  the finite-c runs onto the step sequence recorded from the classical
  one, and reports the L2 distances between the endpoints together
  with their ratio (the 1/c^2 convergence measurement).  Sharing the
  time grid makes the integrator error common to all three runs, so it
  cancels in the differences instead of polluting the small c = 1e4
  signal.
* ``baroclinic`` — a fully 3D pressure-carrying run plus a z-symmetric
  planar one, followed by a budget report comparing the measured drift
  rates of helicity and planar enstrophy against the recorded
  baroclinic source terms.
* ``bracket_check`` — no time stepping: builds seeded states and prints
  a pass/fail table of antisymmetry, Casimir-kernel, and
  equation-of-motion consistency residuals for all three operator
  kinds.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from . import _kernels
from .bracket import (
    FunctionalGradient,
    apply_poisson,
    casimir_residual,
    functional_gradient,
    pairing,
)
from .config import ScenarioConfig, emit_config
from .diagnostics import collect
from .eos import EosSpec
from .errors import ConfigError, ModelError
from .grid import Grid2D, Grid3D
from .initial_conditions import band_limited_noise, make_initial_condition
from .output import (
    DiagnosticsWriter,
    ensure_dir,
    read_diagnostics,
    write_error_manifest,
    write_manifest,
    write_snapshot,
)
from .relativity import PhysicalConstants
from .solver2d import (
    State2D,
    cfl_dt,
    rhs_q,
    solve_coefficient_poisson,
    state_from_psi,
    step_rk4_2d,
)
from .solver3d import FluidState3D, cfl_dt_3d, rhs_barotropic, rhs_general, step_rk4

LIMIT_STUDY_SPEEDS = (1e3, 1e4)

# Relative slack applied to t_end when deciding whether another step is
# needed; protects the final shortened step against the one-ulp drift
# of t + (t_end - t) without ever scheduling a step past the horizon.
_T_END_SLACK = 1e-12


def _snapshot_fields(state) -> dict:
    if isinstance(state, State2D):
        fields = {"psi": state.psi, "q": state.q}
        if state.density_field is not None:
            fields["s"] = state.density_field
        return fields
    fields = {
        "u_x": state.u[0],
        "u_y": state.u[1],
        "u_z": state.u[2],
        "s": state.s,
    }
    if state.P is not None:
        fields["P"] = state.P
    return fields


def _write_snapshots(out_dir: str, state, step: int) -> None:
    for name, data in _snapshot_fields(state).items():
        path = os.path.join(out_dir, f"{name}_{step:06d}.bin")
        write_snapshot(path, name, state.grid, data, state.t)


def _march(
    state,
    config: ScenarioConfig,
    out_dir: str,
    stepper,
    dt_of,
    dt_sequence: list | None = None,
):
    """Advance to t_end, recording diagnostics every step.

    ``dt_sequence`` replays a recorded step sequence instead of the CFL
    controller (the limit study uses this to put several runs on one
    time grid).  Returns (final_state, steps_taken, dts_used).  A model
    error is reported into the run directory before propagating.
    """
    ensure_dir(out_dir)
    with open(os.path.join(out_dir, "config.txt"), "w", encoding="utf-8") as fh:
        fh.write(emit_config(config))
    write_manifest(os.path.join(out_dir, "manifest.json"), config, state.grid)

    dts: list = []
    step = 0
    writer = DiagnosticsWriter(os.path.join(out_dir, "diagnostics.csv"))
    try:
        writer.append(collect(state))
        _write_snapshots(out_dir, state, step)
        t_end = config.t_end
        while state.t < t_end * (1.0 - _T_END_SLACK):
            if dt_sequence is not None:
                dt = dt_sequence[step]
            else:
                dt = config.dt if config.dt is not None else dt_of(state)
                dt = min(dt, t_end - state.t)
            state = stepper(state, dt)
            dts.append(dt)
            step += 1
            writer.append(collect(state))
            if config.snapshot_every > 0 and step % config.snapshot_every == 0:
                _write_snapshots(out_dir, state, step)
        if step > 0 and (
            config.snapshot_every == 0 or step % config.snapshot_every != 0
        ):
            _write_snapshots(out_dir, state, step)
    except ModelError as exc:
        write_error_manifest(
            os.path.join(out_dir, "error_manifest.json"), exc, state.t, step
        )
        exc.reported_dir = out_dir
        raise
    finally:
        writer.close()
    return state, step, dts


def _planar_stepper(config: ScenarioConfig):
    def stepper(state, dt):
        return step_rk4_2d(
            state, dt, scheme=config.scheme, tol=config.tol, max_iter=config.max_iter
        )

    return stepper


def _planar_dt(config: ScenarioConfig):
    return lambda state: cfl_dt(state, config.cfl)


def _volumetric_stepper(config: ScenarioConfig):
    def stepper(state, dt):
        return step_rk4(
            state,
            dt,
            project_after=config.projection,
            proj_tol=config.tol,
            proj_max_iter=config.max_iter,
        )

    return stepper


def _volumetric_dt(config: ScenarioConfig):
    return lambda state: cfl_dt_3d(state, config.cfl)


def run_planar(config: ScenarioConfig, out_dir: str):
    state = make_initial_condition(config)
    return _march(state, config, out_dir, _planar_stepper(config), _planar_dt(config))


def run_volumetric(config: ScenarioConfig, out_dir: str, z_symmetric: bool = False):
    state = make_initial_condition(config, z_symmetric=z_symmetric)
    return _march(
        state, config, out_dir, _volumetric_stepper(config), _volumetric_dt(config)
    )


def run_limit_study(config: ScenarioConfig, out_dir: str) -> dict:
    """Classical-limit measurement: psi error against the c = inf run."""
    ensure_dir(out_dir)
    stepper = _planar_stepper(config)
    dt_of = _planar_dt(config)

    reference = make_initial_condition(config, const=PhysicalConstants(c=math.inf))
    ref_final, _, dts = _march(
        reference, config, os.path.join(out_dir, "classical"), stepper, dt_of
    )

    errors = {}
    for c in LIMIT_STUDY_SPEEDS:
        state = make_initial_condition(config, const=PhysicalConstants(c=c))
        final, _, _ = _march(
            state,
            config,
            os.path.join(out_dir, f"c_{c:g}"),
            stepper,
            dt_of,
            dt_sequence=dts,
        )
        diff = final.psi - ref_final.psi
        errors[c] = float(np.sqrt(final.grid.integrate(diff * diff)))

    c_lo, c_hi = LIMIT_STUDY_SPEEDS
    ratio = errors[c_lo] / errors[c_hi] if errors[c_hi] > 0.0 else math.inf
    expected = (c_hi / c_lo) ** 2
    report = {
        "light_speeds": list(LIMIT_STUDY_SPEEDS),
        "l2_error_vs_classical": {f"{c:g}": errors[c] for c in LIMIT_STUDY_SPEEDS},
        "observed_ratio": ratio,
        "expected_ratio_if_inverse_square": expected,
    }
    with open(os.path.join(out_dir, "limit_report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        "limit study: |psi_c - psi_classical|_2 = "
        + ", ".join(f"c={c:g}: {errors[c]:.6e}" for c in LIMIT_STUDY_SPEEDS)
        + f"; ratio {ratio:.2f} (1/c^2 predicts {expected:.0f})"
    )
    return report


def _budget_rows(columns: dict, invariant: str, source: str) -> list:
    """Interior-sample comparison of d(invariant)/dt against the source."""
    t = columns["t"]
    inv = columns[invariant]
    src = columns[source]
    rows = []
    for i in range(1, len(t) - 1):
        rate = (inv[i + 1] - inv[i - 1]) / (t[i + 1] - t[i - 1])
        denom = abs(src[i])
        mismatch = abs(rate - src[i]) / denom if denom > 0.0 else math.inf
        rows.append(
            {
                "t": float(t[i]),
                "rate": float(rate),
                "source": float(src[i]),
                "rel_mismatch": float(mismatch),
            }
        )
    return rows


def run_baroclinic(config: ScenarioConfig, out_dir: str) -> dict:
    """Breakdown study: helicity budget in 3D, enstrophy budget in-plane.

    The planar leg runs the same pressure-carrying solver on a
    z-symmetric state, where vorticity is purely vertical and the
    planar enstrophy budget applies.
    """
    ensure_dir(out_dir)
    run_volumetric(config, os.path.join(out_dir, "volumetric"))
    run_volumetric(config, os.path.join(out_dir, "planar"), z_symmetric=True)

    vol = read_diagnostics(os.path.join(out_dir, "volumetric", "diagnostics.csv"))
    plane = read_diagnostics(os.path.join(out_dir, "planar", "diagnostics.csv"))
    report = {
        "helicity_budget": _budget_rows(vol, "K", "K_source"),
        "enstrophy_budget": _budget_rows(plane, "E", "E_source"),
    }
    with open(
        os.path.join(out_dir, "budget_report.json"), "w", encoding="utf-8"
    ) as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")

    for name, rows in (
        ("helicity", report["helicity_budget"]),
        ("enstrophy", report["enstrophy_budget"]),
    ):
        if rows:
            worst = max(r["rel_mismatch"] for r in rows)
            print(
                f"baroclinic {name} budget: {len(rows)} interior samples, "
                f"worst rate-vs-source mismatch {worst:.3e}"
            )
    return report


def _bracket_states(config: ScenarioConfig):
    """Seeded generic states for the structure checks."""
    rng = np.random.default_rng(config.seed)
    grid3 = Grid3D(
        config.nx,
        config.ny,
        config.nz,
        config.lx,
        config.ly,
        config.lz if config.lz is not None else 2.0 * math.pi,
    )
    const = config.constants
    u = np.stack([0.25 * const.c * band_limited_noise(grid3, rng) for _ in range(3)])
    s = 2.0 + 0.5 * band_limited_noise(grid3, rng)
    pressure = 1.0 + 0.4 * band_limited_noise(grid3, rng)
    st_general = FluidState3D(grid3, u, s, const, P=pressure)
    eos = config.eos if config.eos is not None else EosSpec("linear", 0.5)
    st_barotropic = FluidState3D(grid3, u, s, const, eos=eos)

    grid2 = Grid2D(config.nx, config.ny, config.lx, config.ly)
    psi = band_limited_noise(grid2, rng)
    gx, gy = grid2.gradient(psi)
    psi = psi * (0.4 * const.c / float(np.sqrt(gx * gx + gy * gy).max()))
    st_planar = state_from_psi(grid2, psi, const, density=config.k)
    return st_general, st_barotropic, st_planar, rng


def _random_gradient(grid, rng, general: bool) -> FunctionalGradient:
    return FunctionalGradient(
        d_u=np.stack([band_limited_noise(grid, rng) for _ in range(3)]),
        d_s=band_limited_noise(grid, rng),
        d_P=band_limited_noise(grid, rng) if general else None,
    )


def _pairing_magnitude(grid, g: FunctionalGradient, tangent) -> float:
    """Cancellation-free size of the pairing integral (3D kinds)."""
    total = grid.integrate(np.sum(np.abs(g.d_u * tangent[0]), axis=0))
    total += grid.integrate(np.abs(g.d_s * tangent[1]))
    if g.d_P is not None and len(tangent) > 2:
        total += grid.integrate(np.abs(g.d_P * tangent[2]))
    return float(total)


def _antisymmetry_worst(kind: str, state, rng, pairs: int, scheme: str) -> float:
    """Worst |<gF,J gG> + <gG,J gF>| / (|<gF,J gG>| + magnitude scale).

    The denominator scale is the integral of |integrand|, which stays
    O(1) even when the signed pairing nearly cancels — dividing by the
    bare pairing value would manufacture failures out of benign
    cancellation.
    """
    worst = 0.0
    grid = state.grid
    for _ in range(pairs):
        if kind == "twod":
            gf = band_limited_noise(grid, rng)
            gg = band_limited_noise(grid, rng)
            jg = apply_poisson(kind, state, gg, scheme=scheme)
            jf = apply_poisson(kind, state, gf, scheme=scheme)
            gamma = state.gamma()
            psi_dot_g = solve_coefficient_poisson(grid, jg, gamma)
            psi_dot_f = solve_coefficient_poisson(grid, jf, gamma)
            a = grid.integrate(gf * psi_dot_g)
            b = grid.integrate(gg * psi_dot_f)
            scale = grid.integrate(np.abs(gf * psi_dot_g)) + grid.integrate(
                np.abs(gg * psi_dot_f)
            )
        else:
            gf = _random_gradient(grid, rng, kind == "general3d")
            gg = _random_gradient(grid, rng, kind == "general3d")
            jg = apply_poisson(kind, state, gg, scheme=scheme)
            jf = apply_poisson(kind, state, gf, scheme=scheme)
            a = pairing(gf, jg, state)
            b = pairing(gg, jf, state)
            scale = _pairing_magnitude(grid, gf, jg) + _pairing_magnitude(
                grid, gg, jf
            )
        worst = max(worst, abs(a + b) / (abs(a) + float(scale)))
    return worst


def _tangent_max(tangent) -> float:
    if isinstance(tangent, tuple):
        return max(float(np.abs(part).max()) for part in tangent)
    return float(np.abs(tangent).max())


def run_bracket_check(config: ScenarioConfig, out_dir: str, pairs: int = 100) -> dict:
    """Structure verification table; returns the report dict.

    Rows: antisymmetry per operator kind (magnitude-scaled ratio),
    Casimir-kernel tangents (mass exactly zero; helicity for the
    barotropic operator; planar enstrophy within inverter tolerance),
    the non-kernel helicity row under the pressure-carrying operator
    (which must be LARGE — that is the structural reason helicity
    conservation breaks), and operator-vs-solver consistency of the
    equations of motion.
    """
    ensure_dir(out_dir)
    st_general, st_barotropic, st_planar, rng = _bracket_states(config)
    scheme = config.scheme
    rows: list = []

    def add(check: str, value: float, threshold: float, larger_is_pass: bool = False):
        ok = value > threshold if larger_is_pass else value <= threshold
        rows.append(
            {
                "check": check,
                "value": float(value),
                "threshold": float(threshold),
                "sense": ">" if larger_is_pass else "<=",
                "pass": bool(ok),
            }
        )

    kinds = (
        ("general3d", st_general),
        ("barotropic3d", st_barotropic),
        ("twod", st_planar),
    )

    for kind, state in kinds:
        add(
            f"antisymmetry_{kind}",
            _antisymmetry_worst(kind, state, rng, pairs, scheme),
            1e-12,
        )

    for kind, state in kinds:
        gm = functional_gradient("M", state)
        add(
            f"mass_tangent_{kind}",
            _tangent_max(apply_poisson(kind, state, gm, scheme=scheme)),
            0.0,
        )

    gk = functional_gradient("K", st_barotropic)
    du_scale = float(np.abs(gk.d_u).max())
    add(
        "helicity_tangent_barotropic3d",
        _tangent_max(apply_poisson("barotropic3d", st_barotropic, gk, scheme=scheme))
        / du_scale,
        1e-12,
    )
    gk_gen = functional_gradient("K", st_general)
    third_row = casimir_residual("general3d", st_general, gk_gen)[2]
    grad_p = st_general.grid.gradient(st_general.P)
    third_scale = float(np.abs(gk_gen.d_u).max()) * float(np.abs(grad_p).max())
    add(
        "helicity_nonkernel_general3d",
        third_row,
        1e-3 * third_scale,
        larger_is_pass=True,
    )

    ge = functional_gradient("E", st_planar)
    e_tangent = apply_poisson("twod", st_planar, ge, scheme=scheme)
    q_scale = float(np.abs(st_planar.q).max())
    add(
        "enstrophy_tangent_twod",
        _tangent_max(e_tangent) / q_scale,
        10.0 * config.tol,
    )

    gh = functional_gradient("H_general", st_general)
    tangent = apply_poisson("general3d", st_general, gh, scheme=scheme)
    rhs = rhs_general(st_general)
    add(
        "eom_general3d",
        max(
            float(np.abs(a - b).max()) / float(np.abs(b).max())
            for a, b in zip(tangent, rhs)
        ),
        1e-10,
    )

    ghb = functional_gradient("H_barotropic", st_barotropic)
    tangent_b = apply_poisson("barotropic3d", st_barotropic, ghb, scheme=scheme)
    rhs_b = rhs_barotropic(st_barotropic)
    add(
        "eom_barotropic3d",
        max(
            float(np.abs(a - b).max()) / float(np.abs(b).max())
            for a, b in zip(tangent_b, rhs_b)
        ),
        1e-10,
    )

    gh2 = functional_gradient("H_2D", st_planar)
    qdot = apply_poisson("twod", st_planar, gh2, scheme=scheme)
    qdot_rhs = rhs_q(st_planar, scheme=scheme)
    add(
        "eom_twod",
        float(np.abs(qdot - qdot_rhs).max()) / float(np.abs(qdot_rhs).max()),
        1e-10,
    )

    report = {"scheme": scheme, "pairs": pairs, "rows": rows}
    with open(
        os.path.join(out_dir, "bracket_report.json"), "w", encoding="utf-8"
    ) as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")

    width = max(len(r["check"]) for r in rows)
    print(f"{'check'.ljust(width)}  {'value':>12}  {'threshold':>13}  result")
    for r in rows:
        print(
            f"{r['check'].ljust(width)}  {r['value']:>12.3e}  "
            f"{r['sense']:>2}{r['threshold']:>11.3e}  "
            + ("pass" if r["pass"] else "FAIL")
        )
    return report


def execute(
    config: ScenarioConfig,
    output_dir: str | None = None,
    threads: int | None = None,
) -> int:
    """Run the configured scenario; returns the process exit code.

    0 on success, 2 on a configuration/validation problem surfacing at
    state construction, 3 on a runtime model error (superluminal speed,
    density floor, solver divergence) or a failed structure check.
    """
    if threads is not None:
        _kernels.set_threads(threads)
    out_dir = output_dir if output_dir is not None else config.output_dir
    try:
        if config.mode == "run2d":
            run_planar(config, out_dir)
        elif config.mode in ("run3d_barotropic", "run3d_general"):
            run_volumetric(config, out_dir)
        elif config.mode == "limit_study":
            run_limit_study(config, out_dir)
        elif config.mode == "baroclinic":
            run_baroclinic(config, out_dir)
        elif config.mode == "bracket_check":
            report = run_bracket_check(config, out_dir)
            if not all(r["pass"] for r in report["rows"]):
                print("bracket check: FAILED")
                return 3
        else:  # pragma: no cover - validate_config rejects unknown modes
            raise ValueError(f"unhandled mode {config.mode!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}")
        return 2
    except ModelError as exc:
        if getattr(exc, "reported_dir", None) is None:
            ensure_dir(out_dir)
            write_error_manifest(
                os.path.join(out_dir, "error_manifest.json"), exc, math.nan, 0
            )
        print(f"model error: {type(exc).__name__}: {exc}")
        return 3
    return 0
