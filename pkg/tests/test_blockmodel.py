"""Beta block-model tests: closed-form densities, moment fits, planted
two-block recovery, and the posterior bookkeeping around it."""

import math

import numpy as np
import pytest

from pcsvm.blockmodel import (BetaParams, BlockModelHyper, beta_pdf,
                              dump_posterior_csv, fit_beta_moments,
                              fit_blockmodel, identify_minority_cluster,
                              identify_minority_cluster_from, pair_density)

from conftest import planted_blocks, block_agreement


class TestBetaPdf:
    def test_uniform_density_is_one(self):
        for x in (0.1, 0.5, 0.9):
            assert beta_pdf(x, BetaParams(1.0, 1.0)) == pytest.approx(1.0)

    def test_symmetric_peak(self):
        # Beta(2,2): 6*x*(1-x) -> 1.5 at the midpoint
        assert beta_pdf(0.5, BetaParams(2.0, 2.0)) == pytest.approx(1.5)

    def test_skewed_closed_form(self):
        # Beta(2,5): 30*x*(1-x)^4 -> 30*0.1*0.9^4 = 1.9683
        assert beta_pdf(0.1, BetaParams(2.0, 5.0)) == pytest.approx(
            1.9683, abs=1e-12)

    def test_integrates_to_one(self):
        xs = np.linspace(1e-6, 1.0 - 1e-6, 20001)
        vals = [beta_pdf(float(x), BetaParams(3.0, 1.5)) for x in xs]
        assert np.trapezoid(vals, xs) == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.parametrize("x", [0.0, 1.0, -0.2, 1.7])
    def test_domain_is_open_interval(self, x):
        with pytest.raises(ValueError, match="0, 1"):
            beta_pdf(x, BetaParams(2.0, 2.0))

    def test_shape_parameters_positive(self):
        with pytest.raises(ValueError, match="positive"):
            BetaParams(0.0, 1.0)

    def test_mean_and_concentration(self):
        p = BetaParams(2.0, 6.0)
        assert p.mean == pytest.approx(0.25)
        assert p.concentration == pytest.approx(8.0)


class TestMomentFit:
    def test_recovers_known_shapes(self):
        samples = np.random.default_rng(42).beta(2.0, 5.0, size=10000)
        fit = fit_beta_moments(samples)
        assert fit.alpha == pytest.approx(2.0, rel=0.1)
        assert fit.beta == pytest.approx(5.0, rel=0.1)
        assert not fit.degenerate

    def test_two_point_sample(self):
        fit = fit_beta_moments([0.4, 0.6])
        assert math.isfinite(fit.alpha) and math.isfinite(fit.beta)
        assert fit.mean == pytest.approx(0.5, abs=1e-12)

    def test_zero_variance_degrades_to_uniform(self):
        fit = fit_beta_moments([0.3, 0.3, 0.3])
        assert fit.degenerate
        assert (fit.alpha, fit.beta) == (1.0, 1.0)

    def test_rejects_boundary_samples(self):
        with pytest.raises(ValueError, match="inside"):
            fit_beta_moments([0.0, 0.5])

    def test_rejects_single_sample(self):
        with pytest.raises(ValueError, match="two samples"):
            fit_beta_moments([0.5])


class TestPlantedRecovery:
    """Two planted blocks with Beta(8,2) within- and Beta(2,8)
    cross-similarities are far apart; the fit must find them."""

    @pytest.mark.parametrize("seed", range(20))
    def test_partition_recovered(self, seed):
        w, labels = planted_blocks(seed)
        post = fit_blockmodel(w, seed=seed)
        assert block_agreement(post, labels) >= 0.95

    @pytest.mark.parametrize("seed", range(20))
    def test_objective_never_decreases(self, seed):
        w, _ = planted_blocks(seed)
        post = fit_blockmodel(w, seed=seed)
        trace = np.asarray(post.objective_trace)
        assert len(trace) >= 1
        if len(trace) > 1:
            assert np.all(np.diff(trace) >= -1e-7)

    def test_label_init_shortens_the_climb(self):
        w, labels = planted_blocks(1)
        guided = fit_blockmodel(w, init_labels=np.where(labels == 1, 1, -1),
                                seed=1)
        cold = fit_blockmodel(w, seed=1, init="random")
        assert guided.n_iters < cold.n_iters
        a, b = guided.hard_assignment(), cold.hard_assignment()
        assert np.array_equal(a, b) or np.array_equal(a, 1 - b)

    def test_block_parameters_match_moments(self):
        # with near-flat hyperpriors the MAP fit should land close to the
        # generating shapes; planted within Beta(8,2), cross Beta(2,8)
        vague = BlockModelHyper(within_mean_alpha=1.0, within_mean_beta=1.0,
                                within_logconc_sigma2=100.0,
                                cross_mean_alpha=1.0, cross_mean_beta=1.0,
                                cross_logconc_sigma2=100.0)
        w, labels = planted_blocks(0, n_a=60, n_b=60)
        post = fit_blockmodel(w, vague,
                              init_labels=np.where(labels == 1, 1, -1), seed=0)
        for p in post.theta:
            assert p.alpha == pytest.approx(8.0, rel=0.15)
            assert p.beta == pytest.approx(2.0, rel=0.15)
        assert post.theta0.alpha == pytest.approx(2.0, rel=0.15)
        assert post.theta0.beta == pytest.approx(8.0, rel=0.15)

    def test_cross_mean_below_within_means(self):
        for seed in (0, 5, 11):
            w, _ = planted_blocks(seed)
            post = fit_blockmodel(w, seed=seed)
            assert post.theta0.mean < min(p.mean for p in post.theta)

    def test_responsibilities_are_distributions(self):
        w, _ = planted_blocks(2)
        post = fit_blockmodel(w, seed=2)
        r = post.responsibilities
        assert r.shape == (w.shape[0], 2)
        assert np.all(r >= 0.0)
        assert np.allclose(r.sum(axis=1), 1.0, atol=1e-12)
        # pi_weights are Dirichlet pseudo-counts: prior lambda plus the
        # responsibility mass assigned to each cluster
        assert post.pi_weights.sum() == pytest.approx(w.shape[0] + 2.0)
        share = post.pi_weights / post.pi_weights.sum()
        assert np.allclose(share, 0.5, atol=0.05)


class TestSingleCluster:
    def test_one_block_fit(self):
        w, _ = planted_blocks(0, n_a=20, n_b=0, within=(5.0, 3.0))
        post = fit_blockmodel(w, BlockModelHyper(n_clusters=1), seed=0)
        assert post.n_clusters == 1
        assert np.allclose(post.responsibilities, 1.0)
        # a single cluster sees every pair as within-block
        assert post.theta[0].mean > 0.5


class TestPairDensity:
    def _fitted(self):
        w, labels = planted_blocks(3)
        init = np.where(labels == 1, 1, -1)
        return fit_blockmodel(w, init_labels=init, seed=3), labels

    def test_within_dominates_at_within_mean(self):
        post, _ = self._fitted()
        # 0.8 is the generating within-block mean; the cross block, fitted
        # around 0.2, should give it almost no mass
        assert pair_density(post, 0.8, "within_minority") > 1.0
        assert pair_density(post, 0.8, "cross") < 0.01

    def test_cross_uses_the_shared_block(self):
        post, _ = self._fitted()
        assert pair_density(post, 0.2, "cross") == pytest.approx(
            beta_pdf(0.2, post.theta0))

    def test_unknown_mode_rejected(self):
        post, _ = self._fitted()
        with pytest.raises(ValueError, match="mode"):
            pair_density(post, 0.5, "between")

    def test_minority_required_for_within(self):
        w, _ = planted_blocks(3)
        post = fit_blockmodel(w, seed=3)  # no labels, no minority cluster
        with pytest.raises(ValueError, match="minority"):
            pair_density(post, 0.5, "within_minority")


class TestMinorityIdentification:
    def test_follows_label_mass(self):
        r = np.array([[0.9, 0.1], [0.8, 0.2], [0.2, 0.8], [0.1, 0.9]])
        assert identify_minority_cluster_from(r, [-1, -1, 1, 1]) == 1
        assert identify_minority_cluster_from(r, [1, 1, -1, -1]) == 0

    def test_requires_positive_labels(self):
        r = np.full((3, 2), 0.5)
        with pytest.raises(ValueError, match="\\+1"):
            identify_minority_cluster_from(r, [-1, -1, -1])

    def test_fit_records_minority(self):
        w, labels = planted_blocks(4)
        init = np.where(labels == 1, 1, -1)
        post = fit_blockmodel(w, init_labels=init, seed=4)
        assert post.minority_cluster == identify_minority_cluster(post, init)


class TestValidation:
    def test_square_required(self):
        with pytest.raises(ValueError, match="square"):
            fit_blockmodel(np.full((3, 4), 0.5))

    def test_symmetric_required(self):
        w = np.full((3, 3), 0.5)
        w[0, 1] = 0.7
        with pytest.raises(ValueError, match="symmetric"):
            fit_blockmodel(w)

    def test_open_interval_required(self):
        w = np.full((3, 3), 0.5)
        w[0, 1] = w[1, 0] = 1.0
        with pytest.raises(ValueError, match="strictly"):
            fit_blockmodel(w)

    def test_cluster_count_bounded_by_nodes(self):
        w = np.full((2, 2), 0.5)
        w[0, 1] = w[1, 0] = 0.4
        with pytest.raises(ValueError, match="clusters"):
            fit_blockmodel(w, BlockModelHyper(n_clusters=3))

    def test_max_iters_floor(self):
        w, _ = planted_blocks(0, n_a=3, n_b=3)
        with pytest.raises(ValueError, match="max_iters"):
            fit_blockmodel(w, max_iters=0)

    def test_init_value_checked(self):
        w, _ = planted_blocks(0, n_a=3, n_b=3)
        with pytest.raises(ValueError, match="init"):
            fit_blockmodel(w, init="kmeans")

    def test_hyper_validation(self):
        with pytest.raises(ValueError, match="dirichlet_lambda"):
            BlockModelHyper(dirichlet_lambda=0.0)
        with pytest.raises(ValueError, match="n_clusters"):
            BlockModelHyper(n_clusters=0)


class TestPosteriorDump:
    def test_csv_round_trips_responsibilities(self, tmp_path):
        w, labels = planted_blocks(5)
        post = fit_blockmodel(w, init_labels=np.where(labels == 1, 1, -1),
                              seed=5)
        path = tmp_path / "posterior.csv"
        dump_posterior_csv(post, path)
        lines = path.read_text().splitlines()
        comments = [ln for ln in lines if ln.startswith("#")]
        body = [ln for ln in lines if not ln.startswith("#")]
        assert comments[0] == "# block,alpha,beta"
        assert body[0] == "cluster_0,cluster_1"
        got = np.array([[float(v) for v in ln.split(",")] for ln in body[1:]])
        assert np.array_equal(got, post.responsibilities)
