import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcmps import _kernels_py, kernels

try:
    from tcmps import _kernels
except ImportError:  # extension not built
    _kernels = None

IMPLS = [pytest.param(_kernels_py, id="python"),
         pytest.param(_kernels, id="cython",
                      marks=pytest.mark.skipif(_kernels is None, reason="extension not built"))]

HM = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def gate_matrix(code, angle):
    if code == kernels.RZ:
        return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    if code == kernels.H:
        return HM
    if code == kernels.CRZ:
        return np.diag([1, 1, 1, np.exp(1j * angle)])
    return np.eye(4)[[0, 2, 1, 3]].astype(complex)


def embed(u, site, n):
    k = 1 if u.shape[0] == 2 else 2
    return np.kron(np.kron(np.eye(2**site), u), np.eye(2 ** (n - site - k)))


def random_gates(n, count, rng):
    codes = rng.integers(0, 4, count).astype(np.int8)
    sites = np.array([rng.integers(0, n - 1) if c >= 2 else rng.integers(0, n) for c in codes],
                     dtype=np.int32)
    angles = rng.uniform(-math.pi, math.pi, count)
    return codes, sites, angles


def dense_reference(codes, sites, angles, n):
    u = np.eye(2**n, dtype=complex)
    for c, s, a in zip(codes, sites, angles):
        u = embed(gate_matrix(c, a), int(s), n) @ u
    return u


def dense_from_blocks(out, n):
    kinds, bsite, mats, phase = out
    u = np.eye(2**n, dtype=complex)
    for k, s, m in zip(kinds, bsite, mats):
        u = embed(m if k == 2 else m[:2, :2], int(s), n) @ u
    for s, ph in enumerate(phase):
        u = embed(gate_matrix(kernels.RZ, ph), s, n) @ u
    return u


@pytest.mark.parametrize("impl", IMPLS)
@pytest.mark.parametrize("seed", range(6))
def test_fusion_is_exact(impl, seed):
    rng = np.random.default_rng(seed)
    n = 4
    codes, sites, angles = random_gates(n, 40, rng)
    out = impl.fuse_gates(codes, sites, angles, n)
    ref = dense_reference(codes, sites, angles, n)
    assert np.max(np.abs(dense_from_blocks(out, n) - ref)) < 1e-12


@pytest.mark.skipif(_kernels is None, reason="extension not built")
@given(seed=st.integers(0, 10**6), count=st.integers(0, 60))
@settings(max_examples=40, deadline=None)
def test_backends_agree_on_fusion(seed, count):
    rng = np.random.default_rng(seed)
    n = 5
    codes, sites, angles = random_gates(n, count, rng)
    a = _kernels_py.fuse_gates(codes, sites, angles, n)
    b = _kernels.fuse_gates(codes, sites, angles, n)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert np.allclose(a[2], b[2], atol=1e-13)
    assert np.allclose(a[3], b[3], atol=1e-13)


@pytest.mark.parametrize("impl", IMPLS)
def test_ar1_filter_recursion(impl):
    rng = np.random.default_rng(0)
    x = rng.normal(size=1000)
    r, y0 = 0.97, 0.3
    ref = [y0]
    for v in x:
        ref.append(r * ref[-1] + v)
    y = impl.ar1_filter(x, r, y0)
    assert y.shape == (1001,)
    assert np.allclose(y, ref, rtol=1e-12, atol=1e-12)
    assert np.array_equal(impl.ar1_filter(np.zeros(0), r, y0), [y0])


def test_dispatch_exposes_a_backend():
    assert kernels.BACKEND in ("cython", "python")
    if _kernels is not None and os.environ.get("TCMPS_PURE_PYTHON") is None:
        assert kernels.BACKEND == "cython"


def test_pure_python_switch():
    env = dict(os.environ, TCMPS_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import tcmps; print(tcmps.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
