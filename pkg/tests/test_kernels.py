import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from geoqml import kernels
from geoqml._accel import NUMBA_ENABLED

needs_numba = pytest.mark.skipif(not NUMBA_ENABLED, reason="numba disabled or missing")


def _states(rng, m, n):
    return np.ascontiguousarray(rng.normal(size=(m, 1 << n)) + 1j * rng.normal(size=(m, 1 << n)))


@needs_numba
@given(st.integers(1, 6), st.data())
def test_apply_1q_backends_agree(n, data):
    wire = data.draw(st.integers(0, n - 1))
    rng = np.random.default_rng(data.draw(st.integers(0, 2 ** 31)))
    U = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    a = _states(rng, 3, n)
    b = a.copy()
    kernels.apply_1q(a, U, wire, n, "numpy")
    kernels.apply_1q(b, U, wire, n, "numba")
    np.testing.assert_allclose(a, b, atol=1e-13)


@needs_numba
@given(st.integers(2, 6), st.data())
def test_apply_cnot_backends_agree(n, data):
    c, t = data.draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
    rng = np.random.default_rng(data.draw(st.integers(0, 2 ** 31)))
    a = _states(rng, 2, n)
    b = a.copy()
    kernels.apply_cnot(a, c, t, n, "numpy")
    kernels.apply_cnot(b, c, t, n, "numba")
    np.testing.assert_array_equal(a, b)


@needs_numba
@given(st.integers(0, 8), st.integers(0, 2 ** 31))
def test_walsh_backends_agree(n, seed):
    v = np.random.default_rng(seed).normal(size=(2, 1 << n))
    a, b = v.copy(), v.copy()
    kernels.walsh_hadamard(a, "numpy")
    kernels.walsh_hadamard(b, "numba")
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_walsh_matches_hadamard_matrix(rng):
    from scipy.linalg import hadamard
    v = rng.normal(size=(1, 16))
    out = v.copy()
    kernels.walsh_hadamard(out)
    np.testing.assert_allclose(out[0], hadamard(16) @ v[0], atol=1e-12)


def test_cnot_against_dense(rng):
    v = _states(rng, 1, 2)
    out = v.copy()
    kernels.apply_cnot(out, 0, 1, 2)
    dense = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    np.testing.assert_allclose(out[0], dense @ v[0])


def test_env_flag_selects_numpy():
    code = "from geoqml import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, GEOQML_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "numpy"


def test_benchmark_script_runs():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    out = subprocess.run([sys.executable, os.path.join(root, "benchmarks", "bench_kernels.py"),
                          "--qubits", "4", "--batch", "8", "--repeat", "1"],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "walsh_hadamard" in out.stdout
