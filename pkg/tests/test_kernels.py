import os
import subprocess
import sys

import numpy as np
import pytest

from hyperop import _accel, kernels
from hyperop.algebra import get_algebra

PAIRS = [("mul_batch_nb", "mul_batch_np", 2), ("kinner_nb", "kinner_np", 2),
         ("left_mats_nb", "left_mats_np", 1), ("right_mats_nb", "right_mats_np", 1)]


@pytest.mark.skipif(not _accel.HAS_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("kind", ["H", "O"])
@pytest.mark.parametrize("nb,np_,arity", PAIRS)
def test_numba_matches_numpy(kind, nb, np_, arity, rng):
    t = get_algebra(kind)
    args = [rng.standard_normal((7, t.dim)) for _ in range(arity)]
    np.testing.assert_allclose(getattr(kernels, nb)(*args, t.idx, t.sgn),
                               getattr(kernels, np_)(*args, t.idx, t.sgn), atol=1e-13)


@pytest.mark.parametrize("kind", ["H", "O"])
def test_structure_tensor_matches_products(kind):
    t = get_algebra(kind)
    C = kernels.structure_tensor(t.idx, t.sgn)
    e = np.eye(t.dim)
    for p in range(t.dim):
        for q in range(t.dim):
            np.testing.assert_array_equal(C[p, q], kernels.mul_batch(e[p:p + 1], e[q:q + 1], t.idx, t.sgn)[0])


def test_left_and_right_mats_act(rng):
    t = get_algebra("O")
    a, b = rng.standard_normal((2, 3, t.dim))
    ab = kernels.mul_batch(a, b, t.idx, t.sgn)
    np.testing.assert_allclose(np.einsum("nij,nj->ni", kernels.left_mats(a, t.idx, t.sgn), b), ab, atol=1e-13)
    np.testing.assert_allclose(np.einsum("nij,nj->ni", kernels.right_mats(b, t.idx, t.sgn), a), ab, atol=1e-13)


def test_env_switch_selects_numpy_path():
    env = dict(os.environ, HYPEROP_DISABLE_NUMBA="1")
    code = ("from hyperop import _accel, verify; assert not _accel.USE_NUMBA; "
            "r = verify.run_suite('algebra', 3, 50); assert r.ok, r.to_json()")
    subprocess.run([sys.executable, "-c", code], env=env, check=True)
