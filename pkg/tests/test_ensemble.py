import numpy as np
import pytest

import twinslit as ts
from twinslit.quadrature import integrate_1d


class TestConstraint:
    def test_negative_spread_rejected(self):
        with pytest.raises(ValueError):
            ts.InitialConstraint.spread_com(0.0, -1.0)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            ts.InitialConstraint(mode="pinned")

    def test_fixed_com_is_zero_spread(self):
        c = ts.InitialConstraint.fixed_com(0.3)
        assert c.delta_y0 == 0.0


class TestSampling:
    def test_seed_determinism(self, ent2_plus):
        a = ts.sample_initial_positions(ent2_plus, ts.InitialConstraint.unconstrained(), 500, seed=7)
        b = ts.sample_initial_positions(ent2_plus, ts.InitialConstraint.unconstrained(), 500, seed=7)
        assert np.array_equal(a, b)
        c = ts.sample_initial_positions(ent2_plus, ts.InitialConstraint.unconstrained(), 500, seed=8)
        assert not np.array_equal(a, c)

    def test_fixed_com_constraint_exact(self, ent2_plus):
        y0 = 0.37
        pts = ts.sample_initial_positions(ent2_plus, ts.InitialConstraint.fixed_com(y0), 2000, seed=3)
        assert np.max(np.abs(pts[:, 0] + pts[:, 1] - 2 * y0)) < 1e-15

    def test_axis_pinned_com_is_bitwise_zero(self, ent2_plus):
        pts = ts.sample_initial_positions(ent2_plus, ts.InitialConstraint.fixed_com(0.0), 2000, seed=3)
        assert np.all(pts[:, 0] + pts[:, 1] == 0.0)

    @pytest.mark.slow
    def test_marginal_moments_match_equilibrium(
        self,
    ):
        # near-coincident slits: each particle's equilibrium spread is within
        # a few percent of the packet width
        cfg = ts.PhysicalConfig(slit_offset=0.3)
        wf = ts.build_wavefunction(ts.Variant.ENTANGLED_TWO_SLIT, 1, cfg)
        pts = ts.sample_initial_positions(wf, ts.InitialConstraint.unconstrained(), 100_000, seed=0)
        std = pts[:, 0].std()
        assert std == pytest.approx(1.0, rel=0.05)
        stderr = std / np.sqrt(len(pts))
        assert abs(pts[:, 0].mean()) < 3 * stderr

    @pytest.mark.slow
    def test_fixed_com_histogram_matches_conditional_density(self, ent2_plus):
        n = 100_000
        pts = ts.sample_initial_positions(ent2_plus, ts.InitialConstraint.fixed_com(0.0), n, seed=1)
        hist = ts.build_histogram(pts[:, 0], 0.25)

        def line_density(y):
            return ts.probability_density(ent2_plus, y, -y, 0.0)

        total = integrate_1d(line_density, -8, 8, abs_tol=1e-12)
        masses = np.array(
            [
                integrate_1d(line_density, lo, hi, abs_tol=1e-12)
                for lo, hi in zip(hist.edges[:-1], hist.edges[1:])
            ]
        ) / total
        assert ts.l1_distance(hist, masses) < 0.02

    def test_spread_com_recovers_equilibrium_com_law(self, ent2_plus):
        # the equilibrium center-of-mass law here is a centered Gaussian of
        # spread sqrt(1/2); widening the imposed spread toward that value
        # shrinks the distance to the unconstrained center-of-mass histogram
        n = 40_000
        free = ts.sample_initial_positions(ent2_plus, ts.InitialConstraint.unconstrained(), n, seed=5)
        com_free = 0.5 * free.sum(axis=1)
        edges = np.arange(-14, 15) * 0.25
        ref, _ = np.histogram(com_free, bins=edges)
        distances = []
        for delta in (0.2, 0.45, np.sqrt(0.5)):
            pts = ts.sample_initial_positions(
                ent2_plus, ts.InitialConstraint.spread_com(0.0, delta), n, seed=6
            )
            com = 0.5 * pts.sum(axis=1)
            got, _ = np.histogram(com, bins=edges)
            distances.append(np.abs(got - ref).sum() / n)
        assert distances[0] > distances[1] > distances[2]
        assert distances[-1] < 0.03

    def test_nonnegative_com_truncation(self, ent2_plus):
        pts = ts.sample_initial_positions(
            ent2_plus,
            ts.InitialConstraint.spread_com(0.1, 0.4, nonnegative=True),
            3000,
            seed=2,
        )
        assert np.all(pts.sum(axis=1) >= 0.0)

    def test_starved_truncation_reports_misfit(self, ent2_plus):
        constraint = ts.InitialConstraint.spread_com(-80.0, 0.5, nonnegative=True)
        with pytest.raises(ts.SamplerError):
            ts.sample_initial_positions(ent2_plus, constraint, 10, seed=0)

    def test_opposite_sides_restriction(self, product):
        pts = ts.sample_initial_positions(
            product, ts.InitialConstraint.unconstrained(), 2000, seed=4, opposite_sides=True
        )
        assert np.all(pts[:, 0] * pts[:, 1] < 0)

    def test_opposite_sides_with_displaced_com(self):
        cfg = ts.PhysicalConfig(slit_offset=0.05)
        wf = ts.build_wavefunction(ts.Variant.UNENTANGLED_PRODUCT, 1, cfg)
        constraint = ts.InitialConstraint.spread_com(10.0, 1.0)
        pts = ts.sample_initial_positions(wf, constraint, 500, seed=0, opposite_sides=True)
        assert np.all(pts[:, 0] * pts[:, 1] < 0)
        com = 0.5 * pts.sum(axis=1)
        assert com.mean() == pytest.approx(10.0, abs=0.2)
        assert com.std() == pytest.approx(1.0, abs=0.15)

    def test_requires_positive_count(self, ent2_plus):
        with pytest.raises(ValueError):
            ts.sample_initial_positions(ent2_plus, ts.InitialConstraint.unconstrained(), 0, seed=0)


class TestPropagateEnsemble:
    def test_rejects_empty_samples(self, ent2_plus):
        with pytest.raises(ValueError):
            ts.propagate_ensemble(ent2_plus, np.empty((0, 2)), 1.0)

    def test_zero_duration_echoes_samples(self, ent2_plus):
        samples = np.array([[0.4, -0.2], [1.0, 0.3]])
        result = ts.propagate_ensemble(ent2_plus, samples, 0.0)
        assert [r.pair_index for r in result.records] == [0, 1]
        assert result.records[0].y1 == 0.4
        assert result.records[1].y2 == 0.3

    def test_ordering_matches_input(self, ent2_plus, rng):
        samples = np.column_stack([rng.uniform(-1, 1, 30), rng.uniform(-1, 1, 30)])
        result = ts.propagate_ensemble(ent2_plus, samples, 2.0)
        assert [r.pair_index for r in result.records] == list(range(30))

    def test_pinned_com_pairs_arrive_symmetric(self, ent2_plus):
        samples = ts.sample_initial_positions(
            ent2_plus, ts.InitialConstraint.fixed_com(0.0), 500, seed=9
        )
        result = ts.propagate_ensemble(ent2_plus, samples, 2.0)
        worst = max(abs(r.y1 + r.y2) for r in result.records)
        assert worst < 1e-8

    def test_node_start_is_excluded_and_counted(self, ent2_minus):
        samples = np.array([[0.5, 0.5], [0.8, -0.4]])
        result = ts.propagate_ensemble(ent2_minus, samples, 1.0)
        assert result.node_count == 1
        assert [r.pair_index for r in result.records] == [1]
        assert result.excluded_count == 1
