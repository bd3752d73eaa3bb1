"""Lorentz-factor algebra shared by the solvers.

Conventions: ``u`` is the spatial part of the four-velocity (so |u| is
unbounded), ``v = u / gamma`` is the coordinate velocity (|v| < c). Vector
fields are stacked along axis 0. ``c = inf`` is accepted and reproduces the
classical limit exactly (gamma is identically one).
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import SuperluminalVelocity


@dataclasses.dataclass(frozen=True)
class PhysicalConstants:
    """Speed of light plus the admissible velocity fraction.

    States whose |v|/c exceeds ``c_frac_max`` are rejected rather than
    clipped; the sharp error beats silently wrong physics.
    """

    c: float
    c_frac_max: float = 0.99

    def __post_init__(self):
        if not self.c > 0.0:
            raise ValueError("c must be positive")
        if not 0.0 < self.c_frac_max <= 1.0:
            raise ValueError("c_frac_max must lie in (0, 1]")

    @property
    def inv_c2(self) -> float:
        # 1/inf**2 underflows to exactly 0.0, which makes every gamma
        # formula below return exactly 1.0 in the classical limit.
        return 1.0 / (self.c * self.c)


def _sq_norm(w: np.ndarray) -> np.ndarray:
    return np.sum(w * w, axis=0)


def gamma_from_u(u: np.ndarray, const: PhysicalConstants) -> np.ndarray:
    """gamma = sqrt(1 + |u|^2/c^2) for a stacked four-velocity field."""
    return np.sqrt(1.0 + _sq_norm(u) * const.inv_c2)


def gamma_from_v(v: np.ndarray, const: PhysicalConstants) -> np.ndarray:
    """gamma = 1/sqrt(1 - |v|^2/c^2); rejects |v| above the velocity cap."""
    beta_sq = _sq_norm(v) * const.inv_c2
    cap = const.c_frac_max * const.c_frac_max
    worst = float(np.max(beta_sq)) if beta_sq.size else 0.0
    if worst > cap:
        raise SuperluminalVelocity(
            f"max |v|/c = {np.sqrt(worst):.6g} exceeds cap {const.c_frac_max:g}"
        )
    return 1.0 / np.sqrt(1.0 - beta_sq)


def u_to_v(u: np.ndarray, const: PhysicalConstants) -> np.ndarray:
    return u / gamma_from_u(u, const)


def v_to_u(v: np.ndarray, const: PhysicalConstants) -> np.ndarray:
    return v * gamma_from_v(v, const)
