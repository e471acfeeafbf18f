"""Grid Picard iteration: exactness, noise level, contraction, rate fit."""
import numpy as np
import pytest

from infbsde import (FitUnderdetermined, GridFunction, GridSolveConfig,
                     NonFiniteValue, RngStream, fit_rate_slope, picard_step,
                     rate_study, solve)


def config(**kwargs):
    base = dict(problem="linear-constant", dim=1, n_half=2, half_width=1.0,
                m_samples=4000, n_iters=1, seed=11)
    base.update(kwargs)
    return GridSolveConfig(**base)


class TestConfig:
    def test_mesh(self):
        assert config(n_half=10, half_width=3.0).mesh == pytest.approx(0.3)

    def test_validation(self):
        with pytest.raises(ValueError):
            config(m_samples=1)
        with pytest.raises(ValueError):
            config(n_iters=0)


class TestSingleStep:
    def test_first_iterate_level(self):
        # from the zero candidate each node estimates c0/a = 3/2
        result = solve(config())
        assert np.abs(result.final.u - 1.5).max() < 0.04
        assert np.abs(result.final.ubar).max() < 0.25

    def test_zero_source_stays_zero(self):
        result = solve(config(overrides={"c0": 0.0}, n_iters=3))
        assert np.all(result.final.u == 0.0)
        assert np.all(result.final.ubar == 0.0)

    def test_solve_one_iter_equals_picard_step(self):
        cfg = config()
        result = solve(cfg)
        grid = cfg.build_grid()
        v0 = GridFunction.zero(grid, 1)
        stepped = picard_step(v0, cfg, RngStream(cfg.seed).substream(1))
        np.testing.assert_array_equal(result.final.u, stepped.u)
        np.testing.assert_array_equal(result.final.ubar, stepped.ubar)

    def test_non_finite_candidate_raises(self):
        cfg = config(m_samples=8)
        grid = cfg.build_grid()
        v = GridFunction(grid, np.full((grid.n_nodes, 1), np.inf),
                         np.zeros((grid.n_nodes, 1, 1)))
        with np.errstate(invalid="ignore"), pytest.raises(NonFiniteValue):
            picard_step(v, cfg, RngStream(0))

    def test_interpolation_clamps_outside_box(self, monkeypatch):
        from infbsde import grid as grid_mod

        calls = []
        real = grid_mod.clamp_to_box

        def spy(x, half_extent):
            out = real(x, half_extent)
            calls.append(np.any(out != x))
            return out

        monkeypatch.setattr(grid_mod, "clamp_to_box", spy)
        solve(config(m_samples=200))
        assert any(calls)

    def test_truncation_bounds_weighted_norm(self):
        result = solve(config(truncation=(0.1, 0.0)))
        joint = np.sqrt(np.sum(result.final.u**2, axis=1)
                        + np.sum(result.final.ubar**2, axis=(1, 2)))
        assert joint.max() <= 0.2 + 1e-12


class TestDeterminism:
    def test_same_seed_same_result(self):
        a = solve(config(n_iters=2))
        b = solve(config(n_iters=2))
        np.testing.assert_array_equal(a.final.u, b.final.u)
        np.testing.assert_array_equal(a.final.ubar, b.final.ubar)

    def test_thread_count_does_not_change_result(self, monkeypatch):
        baseline = solve(config())
        monkeypatch.setenv("BSDE_THREADS", "3")
        threaded = solve(config())
        np.testing.assert_array_equal(baseline.final.u, threaded.final.u)
        np.testing.assert_array_equal(baseline.final.ubar, threaded.final.ubar)


class TestContraction:
    def test_envelope_with_analysis_constant(self):
        # kappa from the closed-form kernel norm; noise allowance is five
        # times the largest per-node standard error at the fixed point
        from infbsde import (CandidatePair, ContractionInputs, RngStream,
                             estimate_phi, kappa_infinity)

        cfg = config(overrides={"mu": 1.0}, m_samples=20000, n_iters=6)
        result = solve(cfg)
        kappa = kappa_infinity(ContractionInputs(
            lip_y=1.0, monotonicity=1.0, discount_y=2.0, c_inf=0.5,
            depends_on_z=False))
        assert kappa == 0.5
        problem = cfg.build_problem()
        w_star = CandidatePair.from_analytic(problem)
        se_u = []
        for k, node in enumerate(cfg.build_grid().nodes):
            est = estimate_phi(problem, cfg.params, w_star, node,
                               cfg.m_samples, None, RngStream(500 + k))
            se_u.append(est.std_err[0][0])
        allowance = 5 * max(se_u)
        errs = [r.sup_err_u for r in result.reports]
        for n in range(2, 7):
            assert errs[n - 1] <= kappa * errs[n - 2] + allowance

    def test_error_envelope(self):
        # monotonicity 1 with discount 2 gives a per-iteration factor 1/2;
        # fixed point u = 3, so the first iterate (= 3/2) errs by 3/2
        cfg = config(overrides={"mu": 1.0}, m_samples=20000, n_iters=8)
        result = solve(cfg)
        errs = [r.sup_err_u for r in result.reports]
        assert errs[0] == pytest.approx(1.5, abs=0.05)
        for prev, cur in zip(errs, errs[1:]):
            assert cur <= 0.55 * prev + 0.05
        assert errs[-1] < 0.08
        assert [r.n for r in result.reports] == list(range(1, 9))
        assert all(r.seconds >= 0 for r in result.reports)


class TestRateFit:
    def test_injected_power_law(self):
        nh = [5, 8, 12, 16, 20]
        errs = [3.7 * (2.0 + n) ** -2 for n in nh]
        slope, intercept = fit_rate_slope(nh, errs)
        assert slope == pytest.approx(-2.0, abs=1e-9)
        assert intercept == pytest.approx(np.log(3.7), abs=1e-9)

    def test_underdetermined(self):
        with pytest.raises(FitUnderdetermined):
            fit_rate_slope([5, 8], [0.1, 0.05])
        with pytest.raises(ValueError):
            fit_rate_slope([5, 8, 12], [0.1, 0.05])

    def test_rate_study_smoke(self):
        cfg = config(overrides={"mu": 1.0}, half_width=2.0, n_iters=4)
        result = rate_study(cfg, [2, 3, 4], k=10.0)
        np.testing.assert_array_equal(result.n_half, [2, 3, 4])
        np.testing.assert_array_equal(result.m_samples, [10, 51, 160])
        assert result.sup_err_u.shape == (3,)
        assert np.all(result.sup_err_u > 0)
        assert np.isfinite(result.slope) and np.isfinite(result.intercept)

    def test_rate_study_needs_three_sizes(self):
        with pytest.raises(FitUnderdetermined):
            rate_study(config(), [2, 3], k=10.0)
