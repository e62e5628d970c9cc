import numpy as np
import pytest

from arsk import BACKEND
from arsk._backend import get_kernels

py = get_kernels("python")
try:
    cy = get_kernels("cython")
except ImportError:
    cy = None

needs_cy = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def test_backend_name():
    assert BACKEND in ("python", "cython")


@needs_cy
def test_lloyd_matches(rng):
    for _ in range(10):
        Y = rng.normal(size=(50, 3))
        C = Y[rng.choice(50, 4, replace=False)]
        a = py.lloyd(Y, C, 100, 1e-8)
        b = cy.lloyd(Y, C.copy(), 100, 1e-8)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_allclose(a[1], b[1], rtol=1e-12)
        assert a[2] == pytest.approx(b[2], rel=1e-12)
        np.testing.assert_allclose(a[3], b[3], rtol=1e-12)


@needs_cy
def test_kmeanspp_and_best_match(rng):
    Y = rng.normal(size=(40, 5))
    u = rng.random((6, 3))
    np.testing.assert_array_equal(py.kmeanspp(Y, 3, u[0]), cy.kmeanspp(Y, 3, u[0]))
    a = py.kmeans_best(Y, 3, u, 100, 1e-8)
    b = cy.kmeans_best(Y, 3, u, 100, 1e-8)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[2] == pytest.approx(b[2], rel=1e-12)
    assert a[4] == b[4]


@needs_cy
@pytest.mark.parametrize("scad", [False, True])
def test_e_update_matches(rng, scad):
    Y = rng.normal(size=(30, 4))
    Y[:3] += 8
    codes = rng.integers(0, 3, 30).astype(np.int64)
    codes[:3] = [0, 1, 2]
    E0 = np.zeros_like(Y)
    a = py.e_update(Y, codes, 3, E0, 2.0, 3.7, scad, 1e-10, 200)
    b = cy.e_update(Y, codes, 3, E0.copy(), 2.0, 3.7, scad, 1e-10, 200)
    np.testing.assert_allclose(a[0], b[0], atol=1e-10)
    np.testing.assert_array_equal(np.linalg.norm(a[0], axis=1) > 0, np.linalg.norm(b[0], axis=1) > 0)
    np.testing.assert_allclose(a[2], b[2], rtol=1e-10)
    assert a[3] == b[3]


@needs_cy
def test_bcss_and_repair_match(rng):
    Y = rng.normal(size=(25, 6))
    codes = rng.integers(0, 4, 25).astype(np.int64)
    codes[:4] = np.arange(4)
    np.testing.assert_allclose(py.column_bcss(Y, codes, 4), cy.column_bcss(Y, codes, 4), atol=1e-10)
    codes = np.where(codes == 3, 0, codes).astype(np.int64)
    C = rng.normal(size=(4, 6))
    ca, cb = codes.copy(), codes.copy()
    Ca, Cb = C.copy(), C.copy()
    assert py.repair_empty(Y, ca, Ca) == cy.repair_empty(Y, cb, Cb) == 1
    np.testing.assert_array_equal(ca, cb)
    np.testing.assert_array_equal(Ca, Cb)


def test_python_bcss_hand_case():
    Y = np.array([[0.0], [0.0], [10.0], [10.0]])
    codes = np.array([0, 0, 1, 1])
    assert py.column_bcss(Y, codes, 2)[0] == 100.0
