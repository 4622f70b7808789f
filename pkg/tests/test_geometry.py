"""Tests for geometry construction, range LS, and the one-bit range uplink."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onebitloc import geometry


def random_scene(seed, num_nodes=6, planar=True, span=800.0):
    rng = np.random.default_rng(seed)
    dim = 2 if planar else 3
    nodes = rng.uniform(-span, span, size=(num_nodes, dim))
    base = rng.uniform(-span, span, size=dim)
    target = rng.uniform(-span, span, size=dim)
    return geometry.Geometry(nodes, base, planar=planar), target


class TestGeometryType:
    def test_rejects_too_few_nodes(self):
        nodes = np.zeros((3, 2))
        with pytest.raises(ValueError):
            geometry.Geometry(nodes, np.zeros(2), planar=True)

    def test_rejects_mismatched_dimension(self):
        nodes = np.zeros((5, 3))
        with pytest.raises(ValueError):
            geometry.Geometry(nodes, np.zeros(3), planar=True)

    def test_properties(self):
        g, _ = random_scene(0)
        assert g.num_nodes == 6
        assert g.dim == 2


class TestTrueRanges:
    def test_target_at_node(self):
        g, _ = random_scene(1)
        target = g.node_positions[3].copy()
        r = geometry.true_ranges(g, target)
        assert r[3] == pytest.approx(np.linalg.norm(g.base_station - target))

    def test_target_at_base(self):
        g, _ = random_scene(2)
        target = g.base_station.copy()
        r = geometry.true_ranges(g, target)
        expected = np.linalg.norm(g.node_positions - g.base_station, axis=1)
        np.testing.assert_allclose(r, expected)

    def test_matches_scalar_distance_oracle(self):
        g, target = random_scene(3, planar=False)
        r = geometry.true_ranges(g, target)
        for m in range(g.num_nodes):
            leg1 = math.dist(g.node_positions[m], target)
            leg2 = math.dist(g.base_station, target)
            assert r[m] == pytest.approx(leg1 + leg2, rel=1e-12)


class TestBuildGh:
    def test_shapes_planar(self):
        g, target = random_scene(4, num_nodes=5)
        gmat, h = geometry.build_G_h(g, geometry.true_ranges(g, target))
        assert gmat.shape == (4, 3)
        assert h.shape == (4,)

    def test_shared_x_zeroes_first_column(self):
        rng = np.random.default_rng(5)
        nodes = np.column_stack([np.full(6, 12.5), rng.uniform(-100, 100, 6)])
        g = geometry.Geometry(nodes, np.array([0.0, 0.0]))
        gmat, _ = geometry.build_G_h(g, np.linspace(1.0, 2.0, 6))
        np.testing.assert_array_equal(gmat[:, 0], 0.0)

    def test_noiseless_identity(self):
        for seed in range(10):
            g, target = random_scene(seed, num_nodes=7)
            r = geometry.true_ranges(g, target)
            gmat, h = geometry.build_G_h(g, r)
            theta_true = np.append(
                target - g.node_positions[0],
                np.linalg.norm(g.node_positions[0] - target),
            )
            residual = np.linalg.norm(gmat @ theta_true - h)
            assert residual <= 1e-9 * (1.0 + np.linalg.norm(h))


class TestSolveLs:
    def test_noiseless_recovery(self):
        g, target = random_scene(7, num_nodes=8, planar=False)
        position, theta = geometry.localize_full_precision(
            g, geometry.true_ranges(g, target)
        )
        np.testing.assert_allclose(position, target, atol=1e-6)
        assert theta[-1] == pytest.approx(
            np.linalg.norm(g.node_positions[0] - target), abs=1e-6
        )

    def test_planar_scene_in_three_d_mode_names_column(self):
        rng = np.random.default_rng(8)
        nodes = np.column_stack([rng.uniform(-100, 100, (6, 2)), np.full(6, 3.0)])
        g = geometry.Geometry(nodes, np.array([0.0, 0.0, 3.0]), planar=False)
        target = np.array([10.0, -20.0, 3.0])
        gmat, h = geometry.build_G_h(g, geometry.true_ranges(g, target))
        with pytest.raises(np.linalg.LinAlgError, match="column 2"):
            geometry.solve_ls(gmat, h)

    def test_underdetermined_rejected(self):
        with pytest.raises(ValueError):
            geometry.solve_ls(np.ones((2, 3)), np.ones(2))

    def test_perturbation_bound(self):
        g, target = random_scene(9, num_nodes=10)
        r = geometry.true_ranges(g, target)
        gmat, h = geometry.build_G_h(g, r)
        theta = geometry.solve_ls(gmat, h)
        rng = np.random.default_rng(10)
        err = 1e-6 * rng.standard_normal(g.num_nodes)
        gmat_p, h_p = geometry.build_G_h(g, r + err)
        theta_p = geometry.solve_ls(gmat_p, h_p)
        # first-order LS perturbation bound with slack for the O(e^2) tail
        pinv_norm = np.linalg.norm(np.linalg.pinv(gmat), 2)
        bound = pinv_norm * (
            np.linalg.norm(h_p - h) + np.linalg.norm(gmat_p - gmat, 2) * np.linalg.norm(theta)
        )
        assert np.linalg.norm(theta_p - theta) <= 2.0 * bound

    @given(st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_translation_equivariance(self, seed):
        g, target = random_scene(seed, num_nodes=7)
        r = geometry.true_ranges(g, target)
        shift = np.random.default_rng(seed + 1).uniform(-1e3, 1e3, size=2)
        g2 = geometry.Geometry(
            g.node_positions + shift, g.base_station + shift, planar=True
        )
        np.testing.assert_allclose(geometry.true_ranges(g2, target + shift), r, rtol=1e-9)
        pos1, theta1 = geometry.localize_full_precision(g, r)
        pos2, theta2 = geometry.localize_full_precision(g2, r)
        scale = max(1.0, np.linalg.norm(theta1)) * np.linalg.cond(
            geometry.build_G_h(g, r)[0]
        )
        np.testing.assert_allclose(theta2, theta1, atol=1e-11 * scale)
        np.testing.assert_allclose(pos2 - pos1, shift, atol=1e-11 * scale)


class TestQuantizeRange:
    def test_above_threshold(self):
        assert geometry.quantize_range(1200.0, 1000.0) == 1

    def test_below_threshold(self):
        assert geometry.quantize_range(800.0, 1000.0) == -1

    def test_tie_is_positive(self):
        assert geometry.quantize_range(1000.0, 1000.0) == 1

    def test_vectorized(self):
        signs = geometry.quantize_range(np.array([1.0, 3.0]), np.array([2.0, 2.0]))
        np.testing.assert_array_equal(signs, [-1, 1])

    def test_rejects_nonpositive_threshold(self):
        with pytest.raises(ValueError):
            geometry.quantize_range(1.0, 0.0)


class TestRangeThresholds:
    def test_levels_at_reference_rmax(self):
        np.testing.assert_allclose(
            geometry.threshold_levels(4000.0),
            [500.0, 1000.0, 1500.0, 2000.0, 2500.0, 3000.0, 3500.0, 4000.0],
        )

    def test_codes_round_trip(self):
        lam, codes = geometry.draw_range_thresholds(64, 4000.0, rng_seed=11)
        np.testing.assert_array_equal(geometry.decode_threshold(codes, 4000.0), lam)

    def test_draw_determinism(self):
        a = geometry.draw_range_thresholds(16, 4000.0, rng_seed=12)
        b = geometry.draw_range_thresholds(16, 4000.0, rng_seed=12)
        np.testing.assert_array_equal(a[0], b[0])

    def test_level_frequencies_uniform(self):
        _, codes = geometry.draw_range_thresholds(100_000, 4000.0, rng_seed=13)
        freqs = np.bincount(codes, minlength=8) / codes.size
        np.testing.assert_allclose(freqs, 0.125, rtol=0.03)


class TestUplink:
    def make_data(self, seed, num_nodes):
        rng = np.random.default_rng(seed)
        signs = rng.choice([-1, 1], size=num_nodes)
        lam, codes = geometry.draw_range_thresholds(num_nodes, 4000.0, rng_seed=seed)
        return geometry.OneBitRangeData(signs, lam, codes, 4000.0)

    @pytest.mark.parametrize("num_nodes", [4, 5, 20])
    def test_round_trip(self, num_nodes):
        data = self.make_data(21, num_nodes)
        payload = geometry.pack_uplink(data)
        assert len(payload) == (num_nodes + 1) // 2
        back = geometry.unpack_uplink(payload, num_nodes, 4000.0)
        np.testing.assert_array_equal(back.signs, data.signs)
        np.testing.assert_array_equal(back.threshold_codes, data.threshold_codes)
        np.testing.assert_array_equal(back.thresholds, data.thresholds)

    def test_bit_layout(self):
        # node 0: +1 with code 5 -> nibble 0b1011; node 1: -1 code 2 -> 0b0100
        data = geometry.OneBitRangeData(
            signs=np.array([1, -1]),
            thresholds=geometry.decode_threshold(np.array([5, 2]), 4000.0),
            threshold_codes=np.array([5, 2]),
            r_max=4000.0,
        )
        payload = geometry.pack_uplink(data)
        assert payload == bytes([0b0100_1011])

    def test_odd_count_pads_high_nibble(self):
        data = self.make_data(22, 5)
        payload = geometry.pack_uplink(data)
        assert payload[-1] >> 4 == 0

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            geometry.unpack_uplink(b"\x00", 4, 4000.0)

    def test_json_debug_form(self):
        data = self.make_data(23, 6)
        record = json.loads(geometry.uplink_debug_json(data))
        assert record["num_nodes"] == 6
        assert record["signs"] == data.signs.tolist()
        assert record["thresholds_m"] == data.thresholds.tolist()

    def test_rejects_off_codebook_threshold(self):
        with pytest.raises(ValueError):
            geometry.OneBitRangeData(
                signs=np.array([1]),
                thresholds=np.array([501.0]),
                threshold_codes=np.array([0]),
                r_max=4000.0,
            )
