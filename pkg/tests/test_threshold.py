import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from arsk.exceptions import InvalidParameterError
from arsk.model import PenaltySpec
from arsk.threshold import (
    group_threshold_rows,
    penalty_value,
    row_factors,
    scad_group,
    scad_scalar,
    soft_group,
    soft_scalar,
)

A = 3.7
finite = st.floats(-50, 50, allow_nan=False)
lams = st.floats(0, 10, allow_nan=False)


def scad_pen(v, lam, a=A):
    # independent transcription of the piecewise penalty
    v = abs(v)
    if v <= lam:
        return lam * v
    if v <= a * lam:
        return (2 * a * lam * v - v * v - lam * lam) / (2 * (a - 1))
    return lam * lam * (a + 1) / 2


def grid_prox(x, pen, step=1e-4):
    lo, hi = min(0.0, x) - 0.5, max(0.0, x) + 0.5
    w = np.arange(lo, hi + step, step)
    obj = 0.5 * (x - w) ** 2 + pen(w)
    return float(w[np.argmin(obj)])


class TestScalar:
    def test_soft_examples(self):
        assert soft_scalar(3.0, 1.0) == 2.0
        assert soft_scalar(0.5, 1.0) == 0.0
        assert soft_scalar(-3.0, 1.0) == -2.0

    def test_soft_identity_at_zero(self, rng):
        x = rng.normal(size=100) * 5
        np.testing.assert_array_equal(soft_scalar(x, 0.0), x)

    def test_scad_examples(self):
        assert scad_scalar(1.5, 1.0, A) == pytest.approx(0.5)
        # middle branch by hand: (2.7 * 2.5 - 3.7) / 1.7
        assert scad_scalar(2.5, 1.0, A) == pytest.approx(3.05 / 1.7, abs=1e-12)
        assert scad_scalar(5.0, 1.0, A) == 5.0

    def test_scad_middle_matches_grid_prox(self):
        w = grid_prox(2.5, lambda w: np.vectorize(scad_pen)(w, 1.0))
        assert abs(w - scad_scalar(2.5, 1.0)) < 2e-4

    def test_invalid(self):
        with pytest.raises(InvalidParameterError):
            soft_scalar(1.0, -1.0)
        with pytest.raises(InvalidParameterError):
            scad_scalar(1.0, 1.0, 2.0)

    def test_vectorized_matches_scalar(self, rng):
        x = rng.normal(size=50) * 4
        v = scad_scalar(x, 1.3)
        assert v.shape == x.shape
        assert all(v[i] == scad_scalar(float(x[i]), 1.3) for i in range(50))

    @given(finite, lams)
    def test_identity_at_lambda_zero(self, x, lam):
        assert soft_scalar(x, 0.0) == x
        assert scad_scalar(x, 0.0) == x

    @given(finite, finite, lams)
    def test_monotone(self, x, y, lam):
        lo, hi = min(x, y), max(x, y)
        assert soft_scalar(lo, lam) <= soft_scalar(hi, lam)
        assert scad_scalar(lo, lam) <= scad_scalar(hi, lam) + 1e-12

    @given(st.floats(0.01, 5), st.sampled_from([2.0, A * 1.0]), st.sampled_from([-1, 1]))
    def test_scad_continuity_at_knots(self, lam, knot, sign):
        x = sign * knot * lam
        left = scad_scalar(x - 1e-8, lam)
        right = scad_scalar(x + 1e-8, lam)
        assert abs(left - right) < 1e-6


class TestGroup:
    def test_soft_examples(self):
        np.testing.assert_array_equal(soft_group([3.0, 4.0], 5.0), [0.0, 0.0])
        np.testing.assert_allclose(soft_group([3.0, 4.0], 2.5), [1.5, 2.0])
        np.testing.assert_array_equal(soft_group(np.zeros(4), 1.0), np.zeros(4))
        np.testing.assert_array_equal(soft_group(np.zeros(4), 0.0), np.zeros(4))

    def test_scad_examples(self):
        np.testing.assert_allclose(scad_group([3.0, 4.0], 4.0), [0.6, 0.8])
        # 2 lam < ||z|| = 10 <= a lam: factor (a-1)/(a-2) * (1 - (a lam/(a-1)) / 10)
        factor = (2.7 / 1.7) * (1 - (4 * 3.7 / 2.7) / 10)
        assert factor == pytest.approx(0.71764, abs=1e-5)
        np.testing.assert_allclose(scad_group([6.0, 8.0], 4.0), factor * np.array([6.0, 8.0]))
        z = np.array([30.0, 40.0])
        np.testing.assert_array_equal(scad_group(z, 4.0), z)

    @given(st.lists(finite, min_size=1, max_size=8), lams)
    def test_soft_norm_law(self, z, lam):
        z = np.array(z)
        out = soft_group(z, lam)
        expect = max(0.0, np.linalg.norm(z) - lam)
        assert np.linalg.norm(out) == pytest.approx(expect, rel=1e-12, abs=1e-12)

    @given(st.lists(finite, min_size=1, max_size=8), lams)
    def test_collinear(self, z, lam):
        z = np.array(z)
        for out in (soft_group(z, lam), scad_group(z, lam)):
            nz = np.linalg.norm(z)
            if nz == 0:
                assert not np.any(out)
                continue
            c = float(out @ z) / nz ** 2
            np.testing.assert_allclose(out, c * z, atol=1e-9 * max(1.0, nz))
            assert -1e-12 <= c <= (A - 1) / (A - 2) + 1e-12

    def test_scad_group_continuity(self, rng):
        for _ in range(50):
            lam = rng.uniform(0.1, 3)
            d = rng.normal(size=5)
            d /= np.linalg.norm(d)
            for knot in (2 * lam, A * lam):
                lo = scad_group(d * (knot - 1e-8), lam)
                hi = scad_group(d * (knot + 1e-8), lam)
                assert np.linalg.norm(lo - hi) < 1e-6

    def test_identity_at_zero(self, rng):
        z = rng.normal(size=6)
        np.testing.assert_array_equal(soft_group(z, 0.0), z)
        np.testing.assert_array_equal(scad_group(z, 0.0), z)

    def test_group_is_prox_of_group_penalty(self, rng):
        # directional reduction: prox of P(||E||) along z's ray is the scalar prox of ||z||
        for spec in (PenaltySpec("lasso", 1.2), PenaltySpec("scad", 1.2)):
            for _ in range(20):
                z = rng.normal(size=3) * rng.uniform(0.1, 3)
                out = group_threshold_rows(z[None, :], spec)[0]
                pen = (lambda t: spec.lam * np.abs(t)) if spec.kind == "lasso" else np.vectorize(
                    lambda t: scad_pen(t, spec.lam)
                )
                r = grid_prox(float(np.linalg.norm(z)), pen)
                assert abs(np.linalg.norm(out) - abs(r)) < 2e-4

    def test_rows_match_single(self, rng):
        R = rng.normal(size=(30, 4)) * 2
        for spec in (PenaltySpec("lasso", 1.5), PenaltySpec("scad", 1.5)):
            rows = group_threshold_rows(R, spec)
            op = soft_group if spec.kind == "lasso" else scad_group
            for i in range(30):
                np.testing.assert_allclose(rows[i], op(R[i], 1.5), atol=1e-12)

    def test_row_factor_zero_norm(self):
        f = row_factors(np.array([0.0, 0.0]), PenaltySpec("scad", 1.0))
        np.testing.assert_array_equal(f, [0.0, 0.0])


class TestPenalty:
    def test_examples(self):
        assert penalty_value(PenaltySpec("lasso", 2.0), 3.0) == 6.0
        assert penalty_value(PenaltySpec("scad", 1.0), 5.0) == pytest.approx(2.35)
        assert penalty_value(PenaltySpec("scad", 1.0), 1.0) == pytest.approx(1.0)

    def test_negative_rejected(self):
        with pytest.raises(InvalidParameterError):
            penalty_value(PenaltySpec("lasso", 1.0), -0.1)

    @given(st.floats(0, 20), st.floats(0.01, 5))
    def test_scad_matches_transcription(self, v, lam):
        got = penalty_value(PenaltySpec("scad", lam), v)
        assert got == pytest.approx(scad_pen(v, lam), rel=1e-12, abs=1e-12)

    def test_scad_continuous_and_nondecreasing(self):
        spec = PenaltySpec("scad", 1.0)
        v = np.linspace(0, 6, 6001)
        p = penalty_value(spec, v)
        assert np.all(np.diff(p) >= -1e-12)
        assert np.max(np.abs(np.diff(p))) < 2e-3

    def test_invalid_spec(self):
        with pytest.raises(InvalidParameterError):
            PenaltySpec("mcp", 1.0)
        with pytest.raises(InvalidParameterError):
            PenaltySpec("scad", 1.0, a=2.0)
        with pytest.raises(InvalidParameterError):
            PenaltySpec("lasso", -1.0)
        assert PenaltySpec("soft", 1.0).kind == "lasso"
        assert math.isclose(PenaltySpec("scad", 2).a, 3.7)
