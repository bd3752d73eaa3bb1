"""Barotropic closures and their potential families."""

import numpy as np
import pytest

from oracles import fd_derivative_samples
from relfluid.eos import EosSpec, pressure, pressure_derivative, zeta_family
from relfluid.errors import NonPositiveDensity


def test_spec_validation():
    with pytest.raises(ValueError, match="kind"):
        EosSpec(kind="isothermal", a=1.0)
    with pytest.raises(ValueError, match="a"):
        EosSpec(kind="linear", a=0.0)
    with pytest.raises(ValueError, match="n"):
        EosSpec(kind="power_law", a=1.0, n=1.0)


def test_pressure_formulas():
    s = np.array([0.5, 1.0, 2.0, 10.0])
    lin = EosSpec(kind="linear", a=0.7)
    assert np.max(np.abs(pressure(lin, s) - 0.7 * s)) == 0.0
    assert np.max(np.abs(pressure_derivative(lin, s) - 0.7)) == 0.0
    pow2 = EosSpec(kind="power_law", a=0.3, n=2.0)
    assert np.max(np.abs(pressure(pow2, s) - 0.3 * s * s)) < 1e-15
    assert np.max(np.abs(pressure_derivative(pow2, s) - 0.6 * s)) < 1e-15


@pytest.mark.parametrize(
    "spec",
    [
        EosSpec(kind="linear", a=0.8),
        EosSpec(kind="power_law", a=0.4, n=2.0),
        EosSpec(kind="power_law", a=1.3, n=1.4),
        EosSpec(kind="power_law", a=0.9, n=0.5),
    ],
)
def test_potential_family_consistency(spec):
    zeta, zeta_p, zeta_pp = zeta_family(spec)
    s = np.logspace(-3, 3, 25)

    # defining property: s * zeta''(s) == dP/ds
    assert np.max(
        np.abs(s * zeta_pp(s) - pressure_derivative(spec, s))
        / np.abs(pressure_derivative(spec, s))
    ) < 1e-12

    # internal consistency: each member differentiates to the next
    for func, deriv in ((zeta, zeta_p), (zeta_p, zeta_pp)):
        mid = np.logspace(-2, 2, 9)
        fd = fd_derivative_samples(func, mid, rel_eps=1e-6)
        scale = np.abs(deriv(mid)) + 1e-30
        assert np.max(np.abs(fd - deriv(mid)) / scale) < 1e-7


def test_power_law_integration_constant_free_of_n_equal_one_blowup():
    # n close to (but not equal to) 1 must still satisfy the defining relation
    spec = EosSpec(kind="power_law", a=1.0, n=1.01)
    _, _, zeta_pp = zeta_family(spec)
    s = np.array([0.5, 2.0])
    assert np.max(np.abs(s * zeta_pp(s) - pressure_derivative(spec, s))) < 1e-12


def test_nonpositive_density_rejected():
    spec = EosSpec(kind="linear", a=1.0)
    zeta, zeta_p, zeta_pp = zeta_family(spec)
    bad = np.array([1.0, 0.0, 2.0])
    for func in (zeta, zeta_p, zeta_pp):
        with pytest.raises(NonPositiveDensity):
            func(bad)
    with pytest.raises(NonPositiveDensity):
        pressure(spec, np.array([-1.0]))
    with pytest.raises(NonPositiveDensity):
        pressure_derivative(spec, np.array([0.0]))
