import numpy as np
import pytest
from hypothesis import given, strategies as st

from etalon_forge import _accel, kernels
from etalon_forge.model import subset_coefficients


def test_backend_flag_matches_dispatch():
    expected = kernels.sparse_eval_nb if _accel.USE_NUMBA else kernels.sparse_eval_np
    assert kernels.sparse_eval is expected
    assert _accel.backend_name() in {"numba", "numpy"}


@given(st.lists(st.integers(0, 500), min_size=1, max_size=30), st.integers(0, 2**31))
def test_sparse_eval_backends_agree(exps, seed):
    rng = np.random.default_rng(seed)
    e = np.array(exps, dtype=np.int64)
    c = rng.normal(size=e.size)
    phase = rng.uniform(0, 2 * np.pi, 64)
    np.testing.assert_allclose(kernels.sparse_eval_nb(e, c, phase),
                               kernels.sparse_eval_np(e, c, phase), rtol=1e-9, atol=1e-12)


@given(st.integers(1, 4), st.integers(0, 2**31))
def test_batch_intensity_backends_agree(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(1, 60, size=(8, n))
    coeffs = subset_coefficients(np.sqrt(rng.uniform(0.05, 0.9, n + 1)))
    phase = rng.uniform(0, 2 * np.pi, 50)
    np.testing.assert_allclose(kernels.batch_intensity_nb(X, coeffs, 0.3, phase),
                               kernels.batch_intensity_np(X, coeffs, 0.3, phase), rtol=1e-9)


@given(st.integers(0, 4), st.integers(0, 2**31))
def test_cascade_backends_agree(n, seed):
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.uniform(0.05, 0.95, n + 1))
    x = rng.integers(1, 50, n).astype(float)
    phase = rng.uniform(0, 2 * np.pi, 40)
    np.testing.assert_allclose(kernels.cascade_nb(r, x, phase), kernels.cascade_np(r, x, phase),
                               rtol=1e-10, atol=1e-12)


@given(st.lists(st.floats(0, 1), min_size=3, max_size=80), st.floats(0.05, 0.95))
def test_lobe_and_rejection_backends_agree(values, depth):
    y = np.array(values)
    k = int(np.argmax(y))
    assert kernels.lobe_bounds_nb(y, k, depth) == kernels.lobe_bounds_np(y, k, depth)
    a = kernels.rejection_batch_nb(y[None, :], depth)
    b = kernels.rejection_batch_np(y[None, :], depth)
    np.testing.assert_allclose(a, b, rtol=1e-12)  # libm log10 may differ by an ulp


def test_lobe_bounds_skips_shallow_ripple():
    y = np.array([0.0, 0.2, 1.0, 0.8, 0.95, 0.1, 0.3, 0.0])
    assert kernels.lobe_bounds(y, 2, 0.5) == (0, 5)
    assert kernels.lobe_bounds(y, 2, 0.9) == (0, 3)


def test_rejection_without_sidebands_is_minus_inf():
    y = np.array([[0.0, 0.5, 1.0, 0.5, 0.0]])
    assert kernels.rejection_batch(y, 0.5)[0] == -np.inf


def test_numpy_fallback_in_subprocess():
    import subprocess
    import sys

    code = ("from etalon_forge import _accel, kernels; "
            "assert not _accel.USE_NUMBA; assert kernels.cascade is kernels.cascade_np; "
            "print(_accel.backend_name())")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={**__import__("os").environ, "ETALON_FORGE_DISABLE_NUMBA": "1"})
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "numpy"
