"""The compiled kernels and the numpy fallback must agree exactly."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fdrbmf import _kernels_py

_kernels_c = pytest.importorskip("fdrbmf._kernels")


def binary(shape):
    return arrays(np.uint8, shape, elements=st.integers(0, 1))


@st.composite
def operands(draw):
    # widths straddle the 64-bit word boundary
    n = draw(st.sampled_from([1, 2, 63, 64, 65, 130]))
    m = draw(st.integers(1, 9))
    r = draw(st.integers(0, 5))
    D = draw(binary((m, n)))
    X = draw(binary((n, r)))
    Y = draw(binary((m, r)))
    return D, X, Y


@given(operands())
@settings(max_examples=80)
def test_boolean_product_agrees(ops):
    _, X, Y = ops
    assert np.array_equal(_kernels_c.boolean_product(X, Y), _kernels_py.boolean_product(X, Y))


@given(operands())
@settings(max_examples=80)
def test_residual_agrees(ops):
    D, X, Y = ops
    assert _kernels_c.residual(D, X, Y) == _kernels_py.residual(D, X, Y)


@given(operands())
@settings(max_examples=80)
def test_eta_agrees(ops):
    D, _, _ = ops
    assert _kernels_c.eta(D) == _kernels_py.eta(D)
    Dt = np.ascontiguousarray(D.T)
    assert _kernels_c.eta(Dt) == _kernels_py.eta(Dt)


def test_eta_below_two_columns():
    M = np.ones((4, 1), dtype=np.uint8)
    assert _kernels_c.eta(M) == _kernels_py.eta(M) == -1


def test_large_random_agreement():
    rng = np.random.default_rng(0)
    D = (rng.random((300, 257)) < 0.1).astype(np.uint8)
    X = (rng.random((257, 12)) < 0.1).astype(np.uint8)
    Y = (rng.random((300, 12)) < 0.1).astype(np.uint8)
    assert np.array_equal(_kernels_c.boolean_product(X, Y), _kernels_py.boolean_product(X, Y))
    assert _kernels_c.residual(D, X, Y) == _kernels_py.residual(D, X, Y)
    assert _kernels_c.eta(D) == _kernels_py.eta(D)


def test_env_var_forces_fallback():
    code = "from fdrbmf import BACKEND; print(BACKEND)"
    env = {**os.environ, "FDRBMF_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
    env["FDRBMF_PURE_PYTHON"] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "cython"
