import os
import subprocess
import sys

import numpy as np
import pytest

from mmrl import _backend, _fallback
from mmrl.kernel_haar import cell_nodes
from mmrl.params import build_alpha
from mmrl.sampler import _mix64, sheet_laws, stream_key

core = pytest.importorskip("mmrl._core")


@pytest.fixture(scope="module")
def setup():
    alpha = build_alpha({"family": "sine", "p1": 1.5, "p2": 0.3})
    a, scale = sheet_laws(alpha, 9)
    keys = np.array([stream_key(3, r) for r in range(5)], dtype=np.uint64)
    return alpha, a, scale, keys


def test_mix_matches_reference():
    # published SplitMix64 outputs for state 0 advanced once and twice
    assert _mix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF
    assert _mix64(2 * 0x9E3779B97F4A7C15 & (2**64 - 1)) == 0x6E789E6AA1B965F4
    assert _fallback.mix64(np.uint64(0x9E3779B97F4A7C15)) == np.uint64(0xE220A8397B1DCDAF)


def test_uniforms_bit_identical(setup):
    key = int(setup[3][2])
    for start, n in ((0, 1000), (17, 333)):
        for x, y in zip(core.uniform_pairs(key, start, n), _fallback.uniform_pairs(key, start, n)):
            assert np.array_equal(x, y)


def test_sheets_and_projection_agree(setup):
    _, a, scale, keys = setup
    out_c, out_p = np.empty((5, a.size)), np.empty((5, a.size))
    core.sas_sheets(keys, a, scale, out_c)
    _fallback.sas_sheets(keys, a, scale, out_p)
    np.testing.assert_allclose(out_c, out_p, rtol=1e-12, atol=1e-14)
    w = np.ascontiguousarray(np.random.default_rng(0).random((3, a.size)))
    p_c, p_p = np.empty((5, 3)), np.empty((5, 3))
    core.sas_project(keys, a, scale, w, p_c)
    _fallback.sas_project(keys, a, scale, w, p_p)
    np.testing.assert_allclose(p_c, p_p, rtol=1e-12)
    np.testing.assert_allclose(p_c, out_p @ w.T, rtol=1e-12)


def test_kernel_cells_agree(setup):
    alpha = setup[0]
    nodes = cell_nodes(alpha, 9)
    for u, v in ((1.0, 0.9), (0.37, 0.86)):
        m = int(u * 512)
        a, b = np.zeros(512), np.zeros(512)
        core.kernel_cells(u, v, nodes.nodes, nodes.inv_alpha, nodes.weights, 1 / 512, m - 1, a)
        _fallback.kernel_cells(u, v, nodes.nodes, nodes.inv_alpha, nodes.weights, 1 / 512, m - 1, b)
        np.testing.assert_allclose(a, b, rtol=1e-13)


def test_backend_selected_at_import():
    assert _backend.BACKEND == ("python" if os.environ.get("MMRL_PURE_PYTHON", "") not in ("", "0") else "cython")
    env = dict(os.environ, MMRL_PURE_PYTHON="1")
    res = subprocess.run([sys.executable, "-c", "from mmrl._backend import BACKEND; print(BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert res.stdout.strip() == "python"
