import subprocess
import sys
import zlib

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from armsolver import kernels
from armsolver.ets import builtin_model, parse_ets
from armsolver.fixtures import all_fixture_ets, fixture_constants
from armsolver.kinematics import compile_ets

IMPLS = kernels.implementations()


def _chains():
    for name, text in all_fixture_ets().items():
        ets = parse_ets(text)
        yield name, compile_ets(ets, fixture_constants(ets))


@pytest.mark.skipif("cython" not in IMPLS, reason="compiled kernels not built")
@pytest.mark.parametrize("name,chain", list(_chains()))
def test_compiled_matches_python(name, chain):
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    py, cy = IMPLS["python"], IMPLS["cython"]
    for _ in range(10):
        q = rng.uniform(-np.pi, np.pi, chain.n)
        args = (chain.codes, chain.jidx, chain.sign, chain.vals, q)
        np.testing.assert_allclose(cy.fk(*args), py.fk(*args), atol=1e-14)
        T1, J1 = cy.fk_jacobian(*args, chain.n)
        T2, J2 = py.fk_jacobian(*args, chain.n)
        np.testing.assert_allclose(T1, T2, atol=1e-14)
        np.testing.assert_allclose(J1, J2, atol=1e-14)


@given(st.lists(st.floats(-np.pi, np.pi), min_size=7, max_size=7))
def test_every_kernel_gives_a_rigid_transform(q):
    c = builtin_model("panda").compiled()
    for mod in IMPLS.values():
        T = mod.fk(c.codes, c.jidx, c.sign, c.vals, np.asarray(q))
        R = T[:3, :3]
        np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_array_equal(T[3], [0, 0, 0, 1])


def test_empty_chain_is_identity():
    for mod in IMPLS.values():
        T = mod.fk(np.zeros(0, np.int32), np.zeros(0, np.int32), np.zeros(0), np.zeros(0), np.zeros(0))
        np.testing.assert_array_equal(T, np.eye(4))


def test_pure_python_switch():
    code = "from armsolver import kernels; print(kernels.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True,
                         env={"ARMSOLVER_PURE_PYTHON": "1", "PATH": ""})
    assert out.stdout.strip() == "python"
