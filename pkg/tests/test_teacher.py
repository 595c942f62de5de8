import numpy as np
import pytest

from coldbrew import (TeacherConfig, TeacherModel, export_embedding_bank,
                      normalized_adjacency, teacher_forward, teacher_loss, train_teacher)
from coldbrew import ops
from coldbrew.gradcheck import grad_check
from coldbrew.teacher import RESIDUAL_KINDS


def make_model(g, seed=0, **kw):
    defaults = dict(num_layers=2, hidden_dim=8, use_se=True, norm="none", precision="f64")
    defaults.update(kw)
    cfg = TeacherConfig(**defaults)
    return TeacherModel(g.num_nodes, g.feature_dim, g.num_classes, cfg, seed=seed), cfg


class TestForward:
    def test_se_at_init_equals_plain_gcn(self, small_graph):
        a = normalized_adjacency(small_graph, True)
        for norm in ("none", "pair", "node"):
            se_model, _ = make_model(small_graph, norm=norm, num_layers=3)
            plain, _ = make_model(small_graph, norm=norm, num_layers=3, use_se=False)
            diff = np.abs(se_model.logits(a, small_graph.features) -
                          plain.logits(a, small_graph.features)).max()
            assert diff < 1e-6

    def test_zero_features_single_effective_layer(self, small_graph):
        # with X=0 the first layer output is sigma(A E)
        a = normalized_adjacency(small_graph, True)
        model, _ = make_model(small_graph)
        rng = np.random.default_rng(3)
        for e in model.struct_emb:
            e.data = rng.standard_normal(e.data.shape)
        x0 = np.zeros_like(small_graph.features, dtype=np.float64)
        outs = teacher_forward(small_graph.with_edges(small_graph.edges), a, model)
        first = model.forward_layers(None, a, x0)[0].data
        expected = np.maximum(a.matrix.toarray() @ model.struct_emb[0].data, 0)
        assert np.allclose(first, expected, atol=1e-10)
        assert len(outs) == 2

    def test_two_node_path_by_hand(self, path2):
        # L=2, self-loops, hand-set weights, no norm: X2 = A(relu(A(XW0+E0))W1 + E1)
        a = normalized_adjacency(path2, True)
        cfg = TeacherConfig(num_layers=2, hidden_dim=2, use_se=True, norm="none",
                            precision="f64")
        model = TeacherModel(2, 3, 2, cfg, seed=0)
        rng = np.random.default_rng(1)
        x = rng.standard_normal((2, 3))
        for p in model.params():
            p.data = rng.standard_normal(p.data.shape)
        ahat = np.full((2, 2), 0.5)
        h1 = np.maximum(ahat @ (x @ model.weights[0].data + model.struct_emb[0].data), 0)
        expected = ahat @ (h1 @ model.weights[1].data + model.struct_emb[1].data)
        got = model.forward_layers(None, a, x)[-1].data
        assert np.abs(got - expected).max() < 1e-6

    def test_jumping_concatenates_hidden_layers(self, small_graph):
        model, cfg = make_model(small_graph, num_layers=3, residual="jumping")
        assert model.weights[-1].shape == (cfg.hidden_dim * 2, small_graph.num_classes)
        a = normalized_adjacency(small_graph, True)
        logits = model.logits(a, small_graph.features)
        assert logits.shape == (small_graph.num_nodes, small_graph.num_classes)

    def test_initial_residual_projects(self, small_graph):
        model, _ = make_model(small_graph, residual="initial")
        assert model.init_proj is not None
        assert model.init_proj.shape == (small_graph.feature_dim, 8)


class TestLoss:
    def test_eta_zero_equals_cross_entropy(self, small_graph):
        model, _ = make_model(small_graph, eta=0.0)
        a = normalized_adjacency(small_graph, True)
        logits = model.forward_layers(None, a, small_graph.features)[-1]
        mask = np.array([0, 1, 2])
        total = teacher_loss(None, logits, small_graph.labels, mask, model)
        ce = ops.cross_entropy(None, logits, small_graph.labels, mask)
        assert total.item() == pytest.approx(ce.item())

    def test_zero_embeddings_no_regularizer(self, small_graph):
        model, _ = make_model(small_graph, eta=0.7)
        a = normalized_adjacency(small_graph, True)
        logits = model.forward_layers(None, a, small_graph.features)[-1]
        mask = np.array([0, 1])
        ce = ops.cross_entropy(None, logits, small_graph.labels, mask)
        assert teacher_loss(None, logits, small_graph.labels, mask,
                            model).item() == pytest.approx(ce.item())

    def test_regularizer_value(self, small_graph):
        model, _ = make_model(small_graph, eta=0.1)
        model.struct_emb[0].data[0, :2] = [1.0, 2.0]
        a = normalized_adjacency(small_graph, True)
        logits = model.forward_layers(None, a, small_graph.features)[-1]
        mask = np.array([0, 1])
        ce = ops.cross_entropy(None, logits, small_graph.labels, mask)
        total = teacher_loss(None, logits, small_graph.labels, mask, model)
        assert total.item() - ce.item() == pytest.approx(0.5, abs=1e-6)


class TestGradients:
    @pytest.mark.parametrize("residual", RESIDUAL_KINDS)
    @pytest.mark.parametrize("norm", ops.NORM_KINDS)
    def test_full_layer_every_combo(self, small_graph, residual, norm):
        a = normalized_adjacency(small_graph, True)
        cfg = TeacherConfig(num_layers=2, hidden_dim=5, use_se=True, residual=residual,
                            norm=norm, eta=0.01, precision="f64")
        model = TeacherModel(small_graph.num_nodes, small_graph.feature_dim,
                             small_graph.num_classes, cfg, seed=1)
        rng = np.random.default_rng(9)
        for e in model.struct_emb:
            e.data = rng.standard_normal(e.data.shape)
        train = np.array([0, 1, 2, 3])

        def closure(tape):
            outs = model.forward_layers(tape, a, small_graph.features)
            return teacher_loss(tape, outs[-1], small_graph.labels, train, model)

        err = grad_check(closure, model.params(), rng=np.random.default_rng(4))
        assert err < 1e-4


class TestTraining:
    def test_separable_two_cluster(self, two_cluster_200, tc200_splits):
        splits, post = tc200_splits
        cfg = TeacherConfig(num_layers=2, hidden_dim=32, norm="pair",
                            max_epochs=300, patience=50)
        _, report = train_teacher(post, splits, cfg, seed=0)
        assert report.split_accuracy["overall"] >= 95.0

    def test_deterministic(self, two_cluster_200, tc200_splits):
        splits, post = tc200_splits
        cfg = TeacherConfig(num_layers=2, hidden_dim=16, norm="pair",
                            max_epochs=60, patience=20)
        m1, _ = train_teacher(post, splits, cfg, seed=5)
        m2, _ = train_teacher(post, splits, cfg, seed=5)
        for a, b in zip(m1.params(), m2.params()):
            assert np.array_equal(a.data, b.data)

    def test_eta_monotone_embedding_norm(self, two_cluster_200, tc200_splits):
        splits, post = tc200_splits
        norms = []
        for eta in (0.0, 1e-3, 1e-1):
            cfg = TeacherConfig(num_layers=2, hidden_dim=16, norm="none", eta=eta,
                                max_epochs=150, patience=150)
            model, _ = train_teacher(post, splits, cfg, seed=2)
            norms.append(sum(float((e.data ** 2).sum()) for e in model.struct_emb))
        assert norms[0] >= norms[1] >= norms[2]

    def test_se_beats_shared_rows_bias(self):
        # 4-cycle with uniform degrees and constant features: identical inputs
        # for every node, so a shared bias cannot separate the classes while
        # per-node embeddings can
        from coldbrew import GraphBundle, DegreeSplits
        from coldbrew.graphs import SplitPartition
        edges = np.array([[0, 1], [0, 3], [1, 2], [2, 3]])
        g = GraphBundle("cycle", 4, 2, edges, np.ones((4, 3), np.float32),
                        np.array([0, 1, 0, 1]))
        nodes = np.arange(4)
        part = SplitPartition(train=nodes, val=nodes, test=nodes)
        splits = DegreeSplits(head=nodes[:0], tail=nodes[:0], isolation=nodes[:0],
                              middle=nodes,
                              removed_edges=np.zeros((0, 2), dtype=np.int64),
                              partitions={name: part if name == "overall" else
                                          SplitPartition(nodes[:0], nodes[:0], nodes[:0])
                                          for name in DegreeSplits.SPLIT_NAMES},
                              seed=0, fractions=(0.1, 0.1, 0.1))
        losses = {}
        for shared in (False, True):
            cfg = TeacherConfig(num_layers=2, hidden_dim=8, norm="none", eta=0.0,
                                max_epochs=400, patience=400, se_shared_rows=shared)
            _, report = train_teacher(g, splits, cfg, seed=0)
            losses[shared] = report.loss_curve[-1]
        assert losses[False] < losses[True]
        assert losses[True] > 0.5  # shared rows cannot beat the ln 2 barrier


class TestDivergence:
    def test_divergence_reports_epoch(self, two_cluster_200, tc200_splits):
        import warnings
        from coldbrew.mlp import DivergenceError
        splits, post = tc200_splits
        cfg = TeacherConfig(num_layers=2, hidden_dim=8, norm="none", optimizer="sgd",
                            learning_rate=1e18, max_epochs=30, patience=30)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            with pytest.raises(DivergenceError, match="epoch") as err:
                train_teacher(post, splits, cfg, seed=0)
        assert err.value.epoch >= 0


class TestEmbeddingBank:
    def test_final_shape(self, cora, cora_splits):
        splits, post = cora_splits
        cfg = TeacherConfig(num_layers=2, hidden_dim=16, max_epochs=5, patience=5)
        model, _ = train_teacher(post, splits, cfg, seed=0)
        a = normalized_adjacency(post, True)
        bank = export_embedding_bank(model, post, a, "final")
        assert bank.matrix.shape == (2708, 7)

    def test_concat_width_formula(self, small_graph):
        # hidden_dim*(L-1) + classes
        a = normalized_adjacency(small_graph, True)
        model, cfg = make_model(small_graph, num_layers=2, hidden_dim=128)
        model.trained = True
        bank = export_embedding_bank(model, small_graph, a, "concat")
        assert bank.width == 128 * 1 + small_graph.num_classes
        model3, cfg3 = make_model(small_graph, num_layers=3, hidden_dim=16)
        model3.trained = True
        bank3 = export_embedding_bank(model3, small_graph, a, "concat")
        assert bank3.width == 16 * 2 + small_graph.num_classes

    def test_plain_gcn_final_equals_logits(self, small_graph):
        a = normalized_adjacency(small_graph, True)
        model, _ = make_model(small_graph, use_se=False)
        model.trained = True
        bank = export_embedding_bank(model, small_graph, a, "final")
        assert np.allclose(bank.matrix, model.logits(a, small_graph.features))

    def test_untrained_warns(self, small_graph):
        a = normalized_adjacency(small_graph, True)
        model, _ = make_model(small_graph)
        with pytest.warns(UserWarning, match="untrained"):
            export_embedding_bank(model, small_graph, a, "final")

    def test_bad_mode(self, small_graph):
        a = normalized_adjacency(small_graph, True)
        model, _ = make_model(small_graph)
        model.trained = True
        with pytest.raises(ValueError, match="mode"):
            export_embedding_bank(model, small_graph, a, "middle")
