"""Backend equivalence: compiled and numpy kernels must agree bitwise."""

import os
import subprocess
import sys

import numpy as np
import pytest

from relfluid import _kernels
from relfluid._kernels import numpy_backend

from oracles import roll_arakawa


def fields(n=64, seed=1):
    rng = np.random.default_rng(seed)
    f = np.asfortranarray(rng.standard_normal((n, n + 4))).copy(order="C")
    g = rng.standard_normal((n, n + 4))
    return f, g


def test_backend_is_reported():
    assert _kernels.BACKEND in ("compiled", "numpy")


def test_arakawa_matches_numpy_backend_bitwise():
    f, g = fields()
    dx, dy = 0.17, 0.23
    ours = _kernels.arakawa_jacobian(f, g, dx, dy)
    reference = numpy_backend.arakawa_jacobian(f, g, dx, dy)
    assert np.array_equal(ours, reference)


def test_lorentz_gamma_matches_numpy_backend_bitwise():
    px, py = fields()
    px, py = 0.3 * px / np.abs(px).max(), 0.3 * py / np.abs(py).max()
    ours = _kernels.lorentz_gamma_2d(px, py, 0.25)
    reference = numpy_backend.lorentz_gamma_2d(px, py, 0.25)
    assert np.array_equal(ours, reference)
    assert np.array_equal(
        _kernels.lorentz_gamma_2d(px, py, 0.0), np.ones_like(px)
    )


def test_arakawa_agrees_with_independent_stencil():
    f, g = fields(n=48, seed=3)
    dx, dy = 0.11, 0.07
    ours = _kernels.arakawa_jacobian(f, g, dx, dy)
    reference = roll_arakawa(f, g, dx, dy)
    scale = np.abs(reference).max()
    assert np.max(np.abs(ours - reference)) <= 1e-13 * scale


def test_results_do_not_depend_on_thread_count():
    f, g = fields(n=96, seed=5)
    px, py = 0.2 * f / np.abs(f).max(), 0.2 * g / np.abs(g).max()
    try:
        _kernels.set_threads(1)
        j1 = _kernels.arakawa_jacobian(f, g, 0.1, 0.1)
        g1 = _kernels.lorentz_gamma_2d(px, py, 0.5)
        _kernels.set_threads(8)
        j8 = _kernels.arakawa_jacobian(f, g, 0.1, 0.1)
        g8 = _kernels.lorentz_gamma_2d(px, py, 0.5)
    finally:
        _kernels.set_threads(1)
    assert np.array_equal(j1, j8)
    assert np.array_equal(g1, g8)


def test_set_threads_floors_at_one():
    try:
        _kernels.set_threads(0)
        assert _kernels.threads() == 1
        _kernels.set_threads(-3)
        assert _kernels.threads() == 1
    finally:
        _kernels.set_threads(1)


@pytest.mark.skipif(_kernels.BACKEND != "compiled", reason="no compiled extension")
def test_pure_python_env_var_forces_the_fallback():
    code = (
        "from relfluid import _kernels\n"
        "import numpy as np\n"
        "assert _kernels.BACKEND == 'numpy'\n"
        "rng = np.random.default_rng(1)\n"
        "f, g = rng.standard_normal((2, 32, 36))\n"
        "j = _kernels.arakawa_jacobian(f, g, 0.17, 0.23)\n"
        "np.save('fallback_j.npy', j)\n"
    )
    env = dict(os.environ, RELFLUID_PURE_PYTHON="1")
    out_dir = os.path.dirname(os.path.abspath(__file__))
    result = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env=env,
        cwd=out_dir,
        timeout=120,
    )
    assert result.returncode == 0, result.stderr
    path = os.path.join(out_dir, "fallback_j.npy")
    try:
        fallback = np.load(path)
    finally:
        os.remove(path)
    rng = np.random.default_rng(1)
    f, g = rng.standard_normal((2, 32, 36))
    assert np.array_equal(fallback, _kernels.arakawa_jacobian(f, g, 0.17, 0.23))
