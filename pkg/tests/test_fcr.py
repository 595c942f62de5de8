import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coldbrew import DegenerateFcrError, compute_fcr, grid_search, homophily_beta
from coldbrew import synth_power_law, make_degree_splits
from coldbrew.fcr import (fcr_pipeline, fcr_verdict, gcn_grid, lp_grid, mlp_grid)
from coldbrew.baselines import LpConfig
from coldbrew.mlp import MlpConfig
from coldbrew.teacher import TeacherConfig


class TestComputeFcr:
    # benchmark rows: (gnn, mlp, lp) -> published ratio
    CASES = [
        ((86.96, 69.02, 78.18), 32.86, 0.01),
        ((72.44, 56.59, 45.00), 63.39, 0.01),
        ((68.51, 58.65, 41.01), 73.61, 0.01),
        ((31.95, 38.51, 22.85), 141.89, 0.05),
    ]

    @pytest.mark.parametrize("zs,expected,tol", CASES)
    def test_published_values(self, zs, expected, tol):
        assert compute_fcr(*zs) == pytest.approx(expected, abs=tol)

    def test_degenerate_zero_residuals(self):
        with pytest.raises(DegenerateFcrError):
            compute_fcr(50.0, 50.0, 50.0)

    def test_degenerate_both_beat_gnn(self):
        with pytest.raises(DegenerateFcrError):
            compute_fcr(50.0, 60.0, 70.0)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            compute_fcr(110.0, 50.0, 50.0)

    def test_shift_invariance(self):
        base = compute_fcr(80.0, 60.0, 70.0)
        assert compute_fcr(90.0, 70.0, 80.0) == pytest.approx(base)

    @settings(max_examples=60, deadline=None)
    @given(z_gnn=st.floats(10, 100), d_mlp=st.floats(0.01, 50), d_lp=st.floats(0.01, 50))
    def test_branch_boundary(self, z_gnn, d_mlp, d_lp):
        z_mlp = max(z_gnn - d_mlp, 0.0)
        z_lp = max(z_gnn - d_lp, 0.0)
        value = compute_fcr(z_gnn, z_mlp, z_lp)
        assert value < 100.0  # z_mlp <= z_gnn stays in the first branch
        if z_gnn < 100 and z_gnn + min(d_mlp, 1.0) <= 100:
            above = compute_fcr(z_gnn, min(z_gnn + min(d_mlp, 1.0), 100.0), z_lp)
            if z_gnn < min(z_gnn + min(d_mlp, 1.0), 100.0):
                assert above >= 100.0

    @settings(max_examples=40, deadline=None)
    @given(z_gnn=st.floats(50, 100), z_lp=st.floats(0, 49),
           lo=st.floats(1, 40), hi=st.floats(41, 49.9))
    def test_monotone_in_mlp(self, z_gnn, z_lp, lo, hi):
        z1, z2 = z_gnn - hi, z_gnn - lo  # z2 > z1, both below z_gnn
        if z1 < 0 or z_lp >= z_gnn:
            return
        assert compute_fcr(z_gnn, z2, z_lp) > compute_fcr(z_gnn, z1, z_lp)

    def test_verdicts(self):
        assert fcr_verdict(32.9) == "graph-structure dominant"
        assert fcr_verdict(76.9) == "node-features dominant"
        assert fcr_verdict(141.9) == "aggregation harmful"


class TestGrids:
    def test_gcn_grid_size(self):
        assert len(gcn_grid()) == 300  # 6 depths x 2 SE x 5 residuals x 5 norms

    def test_mlp_grid_size(self):
        assert len(mlp_grid()) == 32  # 4 depths x 2 widths x 4 optimizers

    def test_lp_grid_size(self):
        assert len(lp_grid()) == 50  # 5 T x 2 matrices x 5 alphas


@pytest.fixture(scope="module")
def tiny_graph_splits():
    g = synth_power_law(120, inter_cluster_noise=0.15, num_clusters=3, seed=6,
                        feature_dim=6)
    return g, *make_degree_splits(g, seed=0)


class TestGridSearch:
    def test_singleton_space(self, tiny_graph_splits):
        g, splits, post = tiny_graph_splits
        cfg = LpConfig(num_props=10, matrix_kind="laplacian", alpha=0.5)
        best, z, trials = grid_search("lp", post, splits, space=[cfg], budget=1, seed=0)
        assert best is cfg
        assert len(trials) == 1
        assert 0 <= z <= 100

    def test_bottleneck_loses(self, tiny_graph_splits):
        g, splits, post = tiny_graph_splits
        # a 1-unit bottleneck cannot represent 3 classes; the wide net wins
        narrow = MlpConfig(hidden_layers=1, hidden_dim=1, max_epochs=150, patience=40)
        wide = MlpConfig(hidden_layers=1, hidden_dim=32, max_epochs=150, patience=40)
        best, _, trials = grid_search("mlp", post, splits, space=[narrow, wide], seed=0)
        assert best is wide
        assert len(trials) == 2

    def test_budget_subsampling_deterministic(self, tiny_graph_splits):
        g, splits, post = tiny_graph_splits
        space = lp_grid()
        _, _, t1 = grid_search("lp", post, splits, space=space, budget=5, seed=3)
        _, _, t2 = grid_search("lp", post, splits, space=space, budget=5, seed=3)
        assert [t.index for t in t1] == [t.index for t in t2]
        assert len(t1) == 5
        assert [t.index for t in t1] == sorted(t.index for t in t1)

    def test_parallel_workers_match_serial(self, tiny_graph_splits):
        g, splits, post = tiny_graph_splits
        space = lp_grid()[:6]
        serial = grid_search("lp", post, splits, space=space, seed=0, workers=1)
        parallel = grid_search("lp", post, splits, space=space, seed=0, workers=2)
        assert serial[1] == parallel[1]
        assert [t.index for t in serial[2]] == [t.index for t in parallel[2]]
        assert [t.val for t in serial[2]] == [t.val for t in parallel[2]]

    def test_empty_space_rejected(self, tiny_graph_splits):
        g, splits, post = tiny_graph_splits
        with pytest.raises(ValueError, match="empty"):
            grid_search("lp", post, splits, space=[])


class TestPipeline:
    def test_report_consistency_and_verdict(self, tiny_graph_splits):
        g, splits, post = tiny_graph_splits
        gcn_space = [TeacherConfig(num_layers=2, hidden_dim=16, use_se=se, norm="pair",
                                   max_epochs=80, patience=25)
                     for se in (True, False)]
        mlp_space = [MlpConfig(hidden_layers=1, hidden_dim=16, max_epochs=80, patience=25)]
        lp_space = [LpConfig(50, "laplacian", 0.5), LpConfig(50, "laplacian", 0.9)]
        report, logs = fcr_pipeline(post, splits, seed=0, gcn_space=gcn_space,
                                    mlp_space=mlp_space, lp_space=lp_space)
        assert report.fcr == pytest.approx(
            compute_fcr(report.z_gnn, report.z_mlp, report.z_lp))
        assert report.delta_mlp == report.z_gnn - report.z_mlp
        assert report.delta_lp == report.z_gnn - report.z_lp
        assert report.verdict == fcr_verdict(report.fcr)
        assert report.beta == pytest.approx(homophily_beta(post))
        assert set(logs) == {"gcn", "mlp", "lp"}

    def test_disassortative_fixture_aggregation_harmful(self):
        # features identical to one-hot labels, edges nearly random: the MLP is
        # perfect while propagation injects wrong-class signal
        rng = np.random.default_rng(0)
        g = synth_power_law(150, inter_cluster_noise=0.9, num_clusters=3, seed=1,
                            feature_dim=6)
        splits, post = make_degree_splits(g, seed=0)
        gcn_space = [TeacherConfig(num_layers=2, hidden_dim=8, use_se=False, norm="none",
                                   max_epochs=60, patience=20)]
        mlp_space = [MlpConfig(hidden_layers=1, hidden_dim=16, max_epochs=120, patience=40)]
        lp_space = [LpConfig(20, "laplacian", 0.9)]
        report, _ = fcr_pipeline(post, splits, seed=0, gcn_space=gcn_space,
                                 mlp_space=mlp_space, lp_space=lp_space)
        assert report.fcr > 100.0
        assert report.verdict == "aggregation harmful"

    def test_beta_fcr_anticorrelation(self):
        # across fixtures of decreasing homophily, FCR rises: sign-only check
        pairs = []
        for noise in (0.05, 0.45, 0.9):
            g = synth_power_law(150, inter_cluster_noise=noise, num_clusters=3,
                                seed=2, feature_dim=6)
            splits, post = make_degree_splits(g, seed=0)
            gcn_space = [TeacherConfig(num_layers=2, hidden_dim=8, use_se=False,
                                       norm="none", max_epochs=60, patience=20)]
            mlp_space = [MlpConfig(hidden_layers=1, hidden_dim=16, max_epochs=100,
                                   patience=30)]
            lp_space = [LpConfig(20, "laplacian", 0.9)]
            try:
                report, _ = fcr_pipeline(post, splits, seed=0, gcn_space=gcn_space,
                                         mlp_space=mlp_space, lp_space=lp_space)
            except DegenerateFcrError:
                continue
            pairs.append((report.beta, report.fcr))
        assert len(pairs) >= 2
        betas, fcrs = zip(*pairs)
        assert np.corrcoef(betas, fcrs)[0, 1] < 0
