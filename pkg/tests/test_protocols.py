"""Tests for the shaping function and the two control laws."""

from __future__ import annotations

import math

import numpy as np
import pytest

from consensus_lab import (
    DualPowerParams,
    ProtocolParams,
    closed_loop_field,
    control_A,
    control_B,
    matrix_form_field_A,
    matrix_form_field_B,
    path_graph,
    star_graph,
)

from conftest import random_graphs
from consensus_lab.protocols import phi


@pytest.fixture
def simple_rho() -> DualPowerParams:
    return DualPowerParams(alpha=1.0, beta=2.0, p=1.5, q=3.0, k=0.5)


def make_params(rho, n, variant, zeta=0.0, kappa=None, strict=True):
    kappa = (1.0,) * n if kappa is None else kappa
    return ProtocolParams(rho=rho, zeta=zeta, kappa=kappa, variant=variant, strict=strict)


class TestPhi:
    def test_zero_maps_to_zero_even_with_offset(self, simple_rho):
        assert phi(0.0, simple_rho, zeta=0.0) == 0.0
        assert phi(0.0, simple_rho, zeta=5.0) == 0.0

    def test_hand_value(self, simple_rho):
        assert phi(1.0, simple_rho) == pytest.approx(math.sqrt(3.0), rel=1e-15)
        assert phi(1.0, simple_rho, zeta=0.25) == pytest.approx(
            math.sqrt(3.0) + 0.25, rel=1e-15
        )

    def test_odd_symmetry(self, simple_rho, rng):
        z = rng.normal(size=100) * 50
        np.testing.assert_array_equal(
            phi(z, simple_rho, zeta=0.3), -phi(-z, simple_rho, zeta=0.3)
        )

    def test_strictly_increasing(self, simple_rho, rng):
        z = np.sort(rng.normal(size=50) * 10)
        out = phi(z, simple_rho, zeta=0.1)
        assert np.all(np.diff(out) > 0.0)

    def test_vectorized_matches_scalar(self, simple_rho, rng):
        z = rng.normal(size=20) * 5
        vec = phi(z, simple_rho, zeta=0.2)
        for value, expect in zip(z, vec):
            assert phi(float(value), simple_rho, zeta=0.2) == expect


class TestProtocolParams:
    def test_rejects_bad_variant(self, simple_rho):
        with pytest.raises(ValueError):
            make_params(simple_rho, 3, "C")

    def test_rejects_negative_offset(self, simple_rho):
        with pytest.raises(ValueError):
            make_params(simple_rho, 3, "A", zeta=-0.1)

    def test_rejects_nonpositive_gain(self, simple_rho):
        with pytest.raises(ValueError):
            make_params(simple_rho, 3, "A", kappa=(1.0, 0.0, 1.0))
        with pytest.raises(ValueError):
            make_params(simple_rho, 3, "A", kappa=())

    def test_strict_enforces_deadline_regime(self):
        slow = DualPowerParams(alpha=1.0, beta=1.0, p=0.1, q=0.9, k=1.0)
        with pytest.raises(ValueError):
            make_params(slow, 3, "A", strict=True)
        relaxed = make_params(slow, 3, "A", strict=False)
        assert relaxed.rho == slow

    def test_kappa_helpers(self, simple_rho):
        params = make_params(simple_rho, 3, "B", kappa=(2.0, 1.0, 3.0))
        assert params.n == 3
        assert params.kappa_min == 1.0
        np.testing.assert_array_equal(params.kappa_array(), [2.0, 1.0, 3.0])

    def test_round_trip_dict(self, simple_rho):
        params = make_params(simple_rho, 3, "B", zeta=0.4, kappa=(2.0, 1.0, 3.0))
        assert ProtocolParams.from_dict(params.to_dict()) == params


class TestControlA:
    def test_zero_at_consensus(self, simple_rho):
        g = star_graph(5)
        params = make_params(simple_rho, 5, "A", zeta=0.7)
        u = control_A(g, np.full(5, 2.2), params)
        assert np.all(u == 0.0)

    def test_two_node_hand_case(self, simple_rho):
        g = path_graph(2)
        params = make_params(simple_rho, 2, "A")
        u = control_A(g, np.array([1.0, 0.0]), params)
        np.testing.assert_allclose(u, [-math.sqrt(3.0), math.sqrt(3.0)], rtol=1e-15)

    def test_translation_invariance(self, simple_rho, rng):
        for g in random_graphs(5, 8, seed=31):
            params = make_params(simple_rho, 8, "A", zeta=0.2)
            x = rng.normal(size=8) * 20
            u0 = control_A(g, x, params)
            u1 = control_A(g, x + 1000.0, params)
            np.testing.assert_allclose(u1, u0, atol=1e-6)

    def test_matches_matrix_form(self, simple_rho, rng):
        for g in random_graphs(6, 9, seed=32):
            kappa = tuple(rng.uniform(0.5, 3.0, size=9))
            params = make_params(simple_rho, 9, "A", zeta=0.15, kappa=kappa)
            x = rng.normal(size=9) * 10
            np.testing.assert_allclose(
                control_A(g, x, params),
                matrix_form_field_A(g, x, params),
                atol=1e-12,
            )

    def test_unequal_gains_break_sum_conservation(self, simple_rho, rng):
        # The node-error law with unequal gains need not conserve the
        # state sum; exhibit one instance where the sum moves.
        broken = False
        for g in random_graphs(10, 6, seed=33):
            params = make_params(simple_rho, 6, "A", kappa=(5.0, 1.0, 1.0, 1.0, 1.0, 1.0))
            x = rng.normal(size=6) * 10
            if abs(float(np.sum(control_A(g, x, params)))) > 1e-6:
                broken = True
                break
        assert broken


class TestControlB:
    def test_zero_at_consensus(self, simple_rho):
        g = star_graph(5)
        params = make_params(simple_rho, 5, "B", zeta=0.7)
        u = control_B(g, np.full(5, -1.4), params)
        assert np.all(u == 0.0)

    def test_two_node_hand_case(self, simple_rho):
        g = path_graph(2)
        params = make_params(simple_rho, 2, "B", kappa=(2.0, 2.0))
        u = control_B(g, np.array([1.0, 0.0]), params)
        np.testing.assert_allclose(
            u, [-2.0 * math.sqrt(3.0), 2.0 * math.sqrt(3.0)], rtol=1e-15
        )

    def test_equal_gain_sum_conservation(self, simple_rho, rng):
        # With equal gains the edge flows cancel in the state sum.
        count = 0
        for seed in range(100):
            for g in random_graphs(10, 7, seed=1000 + seed):
                params = make_params(simple_rho, 7, "B", zeta=0.3, kappa=(1.7,) * 7)
                x = rng.normal(size=7) * 30
                u = control_B(g, x, params)
                total = abs(float(np.sum(u)))
                assert total <= 1e-12 * max(1.0, float(np.sum(np.abs(u))))
                count += 1
        assert count == 1000

    def test_matches_matrix_form(self, simple_rho, rng):
        for g in random_graphs(6, 9, seed=34):
            kappa = tuple(rng.uniform(0.5, 3.0, size=9))
            params = make_params(simple_rho, 9, "B", zeta=0.15, kappa=kappa)
            x = rng.normal(size=9) * 10
            np.testing.assert_allclose(
                control_B(g, x, params),
                matrix_form_field_B(g, x, params),
                atol=1e-12,
            )


class TestClosedLoopField:
    def test_dispatches_by_variant(self, simple_rho, rng):
        g = random_graphs(1, 6, seed=35)[0]
        x = rng.normal(size=6) * 5
        pa = make_params(simple_rho, 6, "A", zeta=0.1)
        pb = make_params(simple_rho, 6, "B", zeta=0.1)
        np.testing.assert_array_equal(closed_loop_field(g, x, pa), control_A(g, x, pa))
        np.testing.assert_array_equal(closed_loop_field(g, x, pb), control_B(g, x, pb))

    def test_adds_disturbance(self, simple_rho, rng):
        g = random_graphs(1, 6, seed=36)[0]
        x = rng.normal(size=6) * 5
        d = rng.normal(size=6)
        params = make_params(simple_rho, 6, "A")
        np.testing.assert_allclose(
            closed_loop_field(g, x, params, d=d),
            control_A(g, x, params) + d,
            atol=0.0,
        )

    def test_rest_exactly_at_consensus_without_disturbance(self, simple_rho):
        for variant in ("A", "B"):
            g = path_graph(4)
            params = make_params(simple_rho, 4, variant, zeta=1.0)
            assert np.all(closed_loop_field(g, np.full(4, 9.9), params) == 0.0)

    def test_nonzero_away_from_consensus(self, simple_rho, rng):
        for g in random_graphs(5, 6, seed=37):
            x = rng.normal(size=6) * 10
            x[0] += 25.0
            for variant in ("A", "B"):
                params = make_params(simple_rho, 6, variant)
                assert float(np.max(np.abs(closed_loop_field(g, x, params)))) > 0.0

    def test_rejects_wrong_state_length(self, simple_rho):
        g = path_graph(3)
        params = make_params(simple_rho, 3, "A")
        with pytest.raises(ValueError):
            closed_loop_field(g, np.zeros(4), params)
