import numpy as np
import pytest

import twinslit as ts
from twinslit.guidance import integrate_batch, rk4_fixed_step


class TestVelocityField:
    def test_entangled_com_velocity_vanishes_on_axis(self, ent2_plus, ent2_minus, four_slit, rng):
        for wf in (ent2_plus, ent2_minus, four_slit):
            for _ in range(25):
                y = rng.uniform(-3, 3)
                t = rng.uniform(0, 2)
                v1, v2 = ts.velocity_field(wf, y, -y, t)
                assert v1 + v2 == pytest.approx(0.0, abs=1e-14)

    def test_product_velocity_odd_in_own_coordinate(self, product, rng):
        y1 = rng.uniform(-3.5, 3.5, 1000)
        y2 = rng.uniform(-3.5, 3.5, 1000)
        v1a, v2a = ts.velocity_field(product, y1, y2, 1.1)
        v1b, _ = ts.velocity_field(product, -y1, y2, 1.1)
        _, v2c = ts.velocity_field(product, y1, -y2, 1.1)
        assert np.max(np.abs(v1a + v1b)) < 1e-10
        assert np.max(np.abs(v2a + v2c)) < 1e-10

    def test_product_velocity_depends_only_on_own_coordinate(self, product, rng):
        y1 = rng.uniform(-3, 3, 100)
        v1a, _ = ts.velocity_field(product, y1, np.full(100, 0.3), 0.9)
        v1b, _ = ts.velocity_field(product, y1, np.full(100, -2.1), 0.9)
        assert np.allclose(v1a, v1b, rtol=0, atol=1e-14)

    @pytest.mark.parametrize("variant", list(ts.Variant))
    def test_matches_log_derivative_finite_difference(self, variant, rng):
        wf = ts.build_wavefunction(variant, 1, ts.PhysicalConfig(ky=0.15))
        h = 1e-7
        checked = 0
        while checked < 200:
            y1, y2 = rng.uniform(-3.5, 3.5, 2)
            t = rng.uniform(0.05, 2)
            psi = ts.evaluate_wavefunction(wf, y1, y2, t)
            if abs(psi) < 1e-6:
                continue
            v1, v2 = ts.velocity_field(wf, y1, y2, t)
            fd1 = np.imag(
                np.log(ts.evaluate_wavefunction(wf, y1 + h, y2, t))
                - np.log(ts.evaluate_wavefunction(wf, y1 - h, y2, t))
            ) / (2 * h)
            fd2 = np.imag(
                np.log(ts.evaluate_wavefunction(wf, y1, y2 + h, t))
                - np.log(ts.evaluate_wavefunction(wf, y1, y2 - h, t))
            ) / (2 * h)
            assert v1 == pytest.approx(fd1, rel=1e-6, abs=1e-9)
            assert v2 == pytest.approx(fd2, rel=1e-6, abs=1e-9)
            checked += 1

    def test_node_signal_on_antisymmetric_diagonal(self, ent2_minus):
        with pytest.raises(ts.NodeProximityError) as err:
            ts.velocity_field(ent2_minus, 0.8, 0.8, 0.4)
        y1, y2 = err.value.position
        assert y1 == pytest.approx(0.8)
        assert err.value.density_ratio < 1e-12

    def test_deep_tail_is_not_a_node(self, product):
        # smooth, interference-free regions stay integrable no matter how
        # small the absolute density is
        v1, v2 = ts.velocity_field(product, 20.0, -0.2, 0.0)
        assert np.isfinite(v1) and np.isfinite(v2)


class TestClosedForms:
    def test_com_scaling_law_values(self):
        assert ts.com_trajectory_closed_form(0.0, 7.3) == 0.0
        assert ts.com_trajectory_closed_form(0.5, 0.0) == 0.5
        assert ts.com_trajectory_closed_form(1.0, 1.0) == pytest.approx(np.sqrt(2.0))

    def test_fringe_maxima_values(self):
        cfg = ts.PhysicalConfig(slit_offset=0.1)
        assert ts.fringe_maxima(1, "+", 2.0, cfg) == pytest.approx(20 * np.pi)
        assert ts.fringe_maxima(2, "-", 2.0, cfg) == pytest.approx(-40 * np.pi)
        spacing = ts.fringe_maxima(3, "+", 2.0, cfg) - ts.fringe_maxima(2, "+", 2.0, cfg)
        assert spacing == pytest.approx(np.pi * 2.0 / 0.1)

    def test_fringe_maxima_undefined_for_merged_slits(self):
        cfg = ts.PhysicalConfig(slit_offset=0.0)
        with pytest.raises(ts.UndefinedFringeError):
            ts.fringe_maxima(1, "+", 1.0, cfg)

    def test_fringe_index_must_be_positive(self):
        cfg = ts.PhysicalConfig(slit_offset=1.0)
        with pytest.raises(ValueError):
            ts.fringe_maxima(0, "+", 1.0, cfg)

    def test_empty_interval_length_linear(self):
        assert ts.empty_interval_length(0.0, 5.0) == 0.0
        assert ts.empty_interval_length(5.0, 10.0) == pytest.approx(100.0)
        assert ts.empty_interval_length(2.5, 10.0) == pytest.approx(50.0)


class TestComVelocityClosedForm:
    def test_requires_product_variant(self, ent2_plus):
        with pytest.raises(ValueError):
            ts.com_velocity_unentangled(ent2_plus, 0.3, 0.1, 1.0)

    def test_spreading_term_vanishes_at_t_zero(self, product, rng):
        for _ in range(20):
            y1, y2 = rng.uniform(-2, 2, 2)
            direct = ts.com_velocity_unentangled(product, y1, y2, 0.0)
            v1, v2 = ts.velocity_field(product, y1, y2, 0.0)
            assert direct == pytest.approx(0.5 * (v1 + v2), rel=1e-9, abs=1e-12)

    def test_agrees_with_guidance_mean_at_random_points(self, product, rng):
        checked = 0
        while checked < 500:
            y1, y2 = rng.uniform(-3.5, 3.5, 2)
            t = rng.uniform(0, 2.5)
            try:
                direct = ts.com_velocity_unentangled(product, y1, y2, t)
            except ts.NodeProximityError:
                continue
            v1, v2 = ts.velocity_field(product, y1, y2, t)
            mean = 0.5 * (v1 + v2)
            assert direct == pytest.approx(mean, rel=1e-9, abs=1e-12)
            checked += 1

    def test_near_merged_slits_reduces_to_spreading_flow(self):
        # with the slits nearly coincident the correction term is tiny and
        # the center of mass follows the pure spreading flow
        cfg = ts.PhysicalConfig(slit_offset=0.05)
        wf = ts.build_wavefunction(ts.Variant.UNENTANGLED_PRODUCT, 1, cfg)
        t = 1.0
        kappa = 0.5
        for com in (0.4, 1.0, -0.7):
            vel = ts.com_velocity_unentangled(wf, com + 0.2, com - 0.2, t)
            spreading = kappa**2 * com * t / (1 + (kappa * t) ** 2)
            assert vel == pytest.approx(spreading, rel=0.02, abs=1e-4)


class TestIntegratePair:
    def test_zero_duration_is_a_single_point(self, ent2_plus):
        pair = ts.integrate_pair(ent2_plus, (0.3, -0.1), 0.0)
        assert pair.step_converged and not pair.node_proximity
        assert len(pair.times) == 65
        assert pair.final_positions == (0.3, -0.1)
        assert np.all(pair.positions[:, 0] == 0.3)

    def test_com_follows_scaling_law(self, ent2_plus):
        cfg = ent2_plus.config
        T = cfg.time_at_tau(np.sqrt(3.0))
        pair = ts.integrate_pair(ent2_plus, (0.6, -0.4), T, tol=1e-9)
        assert pair.step_converged
        # final center of mass doubles: sqrt(1 + 3) = 2
        com_final = 0.5 * sum(pair.final_positions)
        assert com_final == pytest.approx(0.2, abs=1e-7)
        taus = cfg.tau(pair.times)
        expected = ts.com_trajectory_closed_form(0.1, taus)
        assert np.max(np.abs(pair.com_path - expected)) < 1e-8

    def test_axis_centered_pair_stays_symmetric(self, ent2_plus):
        T = ent2_plus.config.time_at_tau(2.0)
        pair = ts.integrate_pair(ent2_plus, (0.9, -0.9), T, tol=1e-9)
        assert np.max(np.abs(pair.positions[:, 0] + pair.positions[:, 1])) < 1e-8

    def test_path_times_strictly_increasing_from_zero(self, ent2_plus):
        pair = ts.integrate_pair(ent2_plus, (0.2, 0.5), 2.0)
        assert pair.times[0] == 0.0
        assert np.all(np.diff(pair.times) > 0)
        assert pair.times[-1] == 2.0
        assert tuple(pair.positions[0]) == pair.initial

    def test_bit_identical_repeat(self, ent2_plus):
        a = ts.integrate_pair(ent2_plus, (0.37, -0.82), 2.0, tol=1e-8)
        b = ts.integrate_pair(ent2_plus, (0.37, -0.82), 2.0, tol=1e-8)
        assert np.array_equal(a.positions, b.positions)

    def test_node_crossing_flags_trajectory(self, ent2_minus):
        # start exactly on the antisymmetric node line: flagged, not crashed
        pair = ts.integrate_pair(ent2_minus, (0.5, 0.5), 1.0)
        assert pair.node_proximity

    def test_tolerance_refinement_order(self, ent2_plus):
        T = ent2_plus.config.time_at_tau(1.0)
        coarse = ts.integrate_pair(ent2_plus, (0.8, -0.3), T, tol=1e-6)
        fine = ts.integrate_pair(ent2_plus, (0.8, -0.3), T, tol=5e-7)
        shift = np.max(np.abs(np.array(coarse.final_positions) - np.array(fine.final_positions)))
        assert shift < 1e-6

    def test_fixed_step_kernel_is_fourth_order(self, ent2_plus):
        T = 1.5
        ref = np.array(rk4_fixed_step(ent2_plus, (0.8, -0.3), T, 512))
        errs = []
        for n in (16, 32):
            approx = np.array(rk4_fixed_step(ent2_plus, (0.8, -0.3), T, n))
            errs.append(np.max(np.abs(approx - ref)))
        order = np.log2(errs[0] / errs[1])
        assert order > 3.7


class TestEnsembleIntegration:
    def test_no_configuration_space_crossing(self, ent2_plus, rng):
        initials = np.column_stack([rng.uniform(-2, 2, 100), rng.uniform(-2, 2, 100)])
        result = integrate_batch(
            ent2_plus, initials, 2.0, tol=1e-8, record_indices=range(100)
        )
        paths = result.recorded_paths  # (100, 65, 2)
        for k in range(paths.shape[1]):
            pts = paths[:, k, :]
            diff = pts[:, None, :] - pts[None, :, :]
            dist = np.sqrt((diff**2).sum(axis=2))
            iu = np.triu_indices(len(pts), k=1)
            assert dist[iu].min() > 0.0

    def test_com_residual_tracked_for_unconstrained_batch(self, ent2_plus, rng):
        initials = np.column_stack([rng.uniform(-1, 1, 50), rng.uniform(-1, 1, 50)])
        result = integrate_batch(ent2_plus, initials, 2.0, tol=1e-9, track_com=True)
        assert result.com_residual_max < 1e-8

    def test_batch_matches_single_bitwise(self, ent2_plus):
        initials = [(0.3, -0.5), (1.1, 0.2), (-0.7, 0.9)]
        batch = integrate_batch(ent2_plus, initials, 2.0, tol=1e-8)
        for i, y0 in enumerate(initials):
            solo = ts.integrate_pair(ent2_plus, y0, 2.0, tol=1e-8)
            assert solo.final_positions == (batch.final[i, 0], batch.final[i, 1])
