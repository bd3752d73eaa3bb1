"""Equations of state closing the barotropic solver.

Pressure is a function of the density-like field ``s`` (rest-mass-energy
density as seen in the lab frame). Alongside P(s) each law carries a
potential ``zeta`` whose second derivative satisfies

    zeta''(s) = P'(s) / s,

which is exactly what the barotropic Hamiltonian and the momentum drive
need: the pressure and relativistic inertia terms combine into the single
gradient grad(c^2 gamma + zeta'(s)).
"""

from __future__ import annotations

import dataclasses
from typing import Callable

import numpy as np

from .errors import NonPositiveDensity

Array = np.ndarray


@dataclasses.dataclass(frozen=True)
class EosSpec:
    """Barotropic pressure law.

    kind 'linear':    P = a s          (the relativistically ideal case)
    kind 'power_law': P = a s^n, n != 1
    """

    kind: str
    a: float
    n: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "power_law"):
            raise ValueError(f"unknown eos kind {self.kind!r}")
        if not self.a > 0.0:
            raise ValueError("eos coefficient a must be positive")
        if self.kind == "power_law" and self.n == 1.0:
            raise ValueError("power_law exponent must differ from 1 (use kind='linear')")


def _check_positive(s: Array) -> None:
    if np.min(s) <= 0.0:
        raise NonPositiveDensity(f"min density {np.min(s):.6g} is not positive")


def pressure(spec: EosSpec, s: Array) -> Array:
    _check_positive(s)
    if spec.kind == "linear":
        return spec.a * s
    return spec.a * s**spec.n


def pressure_derivative(spec: EosSpec, s: Array) -> Array:
    """dP/ds, used by consistency checks (zeta'' * s == P')."""
    _check_positive(s)
    if spec.kind == "linear":
        return np.full_like(s, spec.a)
    return spec.a * spec.n * s ** (spec.n - 1.0)


def zeta_family(spec: EosSpec) -> tuple[Callable, Callable, Callable]:
    """Return (zeta, zeta', zeta'') with zeta''(s) = P'(s)/s.

    zeta is fixed only up to an affine piece; the constants chosen here are

        linear:    zeta = a (s ln s - s)
        power_law: zeta = a s^n / (n - 1)

    Any affine shift would change the Hamiltonian by a Casimir, so nothing
    observable depends on the choice.
    """
    a = spec.a
    if spec.kind == "linear":

        def zeta(s: Array) -> Array:
            _check_positive(s)
            return a * (s * np.log(s) - s)

        def zeta_p(s: Array) -> Array:
            _check_positive(s)
            return a * np.log(s)

        def zeta_pp(s: Array) -> Array:
            _check_positive(s)
            return a / s

    else:
        n = spec.n

        def zeta(s: Array) -> Array:
            _check_positive(s)
            return a * s**n / (n - 1.0)

        def zeta_p(s: Array) -> Array:
            _check_positive(s)
            return a * n * s ** (n - 1.0) / (n - 1.0)

        def zeta_pp(s: Array) -> Array:
            _check_positive(s)
            return a * n * s ** (n - 2.0)

    return zeta, zeta_p, zeta_pp
