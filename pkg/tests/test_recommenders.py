"""Item-KNN, SKNN, and BPR-MF baselines plus top-k ranking."""

import math

import numpy as np
import pytest

from crprobe import (
    BprHyperParams,
    ModelError,
    Sample,
    SampleSet,
    SequenceSet,
    predict_all,
    recommend_topk,
    train_bpr_mf,
    train_item_knn,
    train_sknn,
)
from crprobe.recommenders import top_k_indices


class TestItemKnn:
    def test_toy_similarities(self, toy_corpus, toy_index):
        model = train_item_knn(toy_corpus)
        x = toy_index
        assert model.similarity(x["x2"], x["x3"]) == pytest.approx(0.5)
        assert model.similarity(x["x1"], x["x2"]) == pytest.approx(1 / math.sqrt(2))

    def test_never_cooccurring_pair_not_stored(self, toy_corpus, toy_index):
        model = train_item_knn(toy_corpus)
        items, _ = model.neighbors(toy_index["x1"])
        assert toy_index["x6"] not in items
        assert model.similarity(toy_index["x1"], toy_index["x6"]) == 0.0

    def test_similarity_symmetric(self, toy_corpus):
        model = train_item_knn(toy_corpus)
        for a in range(toy_corpus.n_items):
            for b in range(toy_corpus.n_items):
                if a != b:
                    assert model.similarity(a, b) == pytest.approx(model.similarity(b, a))

    def test_integer_recovery(self, toy_corpus):
        # sim * sqrt(freq_i * freq_j) must reproduce the co-occurrence count
        from crprobe import build_global_graph

        model = train_item_knn(toy_corpus)
        graph = build_global_graph(toy_corpus)
        for a in range(toy_corpus.n_items):
            items, sims = model.neighbors(a)
            for b, sim in zip(items, sims):
                back = sim * math.sqrt(model.seq_freq[a] * model.seq_freq[int(b)])
                assert back == pytest.approx(graph.cooc_between(a, int(b)))

    def test_similarities_in_unit_interval(self, toy_corpus):
        model = train_item_knn(toy_corpus)
        assert np.all(model.neighbor_sims > 0)
        assert np.all(model.neighbor_sims <= 1.0)

    def test_scoring_last_item(self, toy_corpus, toy_index):
        model = train_item_knn(toy_corpus)
        x = toy_index
        scores = model.score([x["x3"]])
        assert scores[x["x1"]] == pytest.approx(1 / math.sqrt(2))
        assert scores[x["x2"]] == pytest.approx(0.5)
        assert scores[x["x5"]] == pytest.approx(1 / math.sqrt(2))
        rec = recommend_topk(model, [x["x3"]], k=3)
        assert rec.items[:2] == [x["x1"], x["x5"]]  # tie broken by index
        assert rec.items[2] == x["x2"]

    def test_single_neighbor_prefix(self, toy_corpus, toy_index):
        model = train_item_knn(toy_corpus)
        scores = model.score([toy_index["x6"]])
        nonzero = np.flatnonzero(scores)
        assert list(nonzero) == [toy_index["x4"]]
        assert np.all(np.isfinite(scores))

    def test_neighbor_cap(self):
        lists = [[f"hub", f"i{j}"] for j in range(10)]
        corpus = SequenceSet.from_item_lists(lists)
        model = train_item_knn(corpus, neighbor_cap=4)
        hub = corpus.vocab.encode("hub")
        items, _ = model.neighbors(hub)
        assert items.size == 4


class TestSknn:
    def test_cosine_against_single_session(self):
        corpus = SequenceSet.from_item_lists([["x1", "x2", "x3"]])
        model = train_sknn(corpus)
        v = corpus.vocab
        scores = model.score([v.encode("x1"), v.encode("x2")])
        assert scores[v.encode("x3")] == pytest.approx(2 / math.sqrt(6))

    def test_identical_prefix_full_similarity(self):
        corpus = SequenceSet.from_item_lists([["a", "b"]])
        model = train_sknn(corpus)
        scores = model.score([0, 1])
        assert scores[0] == pytest.approx(1.0)
        assert scores[1] == pytest.approx(1.0)

    def test_tie_prefers_lower_sequence_id(self):
        corpus = SequenceSet.from_item_lists([["a", "b"], ["a", "c"]])
        model = train_sknn(corpus, k_n=1)
        scores = model.score([corpus.vocab.encode("a")])
        assert scores[corpus.vocab.encode("b")] > 0
        assert scores[corpus.vocab.encode("c")] == 0

    def test_recency_window(self):
        corpus = SequenceSet.from_item_lists(
            [["a", "b"], ["a", "c"], ["a", "d"]], end_times=[1, 2, 3]
        )
        model = train_sknn(corpus, m_recent=1)
        scores = model.score([corpus.vocab.encode("a")])
        assert scores[corpus.vocab.encode("d")] > 0
        assert scores[corpus.vocab.encode("b")] == 0
        assert scores[corpus.vocab.encode("c")] == 0

    def test_toy_multi_session_scores(self, toy_corpus, toy_index):
        model = train_sknn(toy_corpus)
        x = toy_index
        scores = model.score([x["x3"], x["x4"]])
        # hand-computed: s1 gives 1/sqrt(6); s2, s3, s4 give 1/2 each
        assert scores[x["x4"]] == pytest.approx(1.0)
        assert scores[x["x2"]] == pytest.approx(1 / math.sqrt(6) + 0.5)
        assert scores[x["x1"]] == pytest.approx(1 / math.sqrt(6))
        assert scores[x["x6"]] == pytest.approx(0.5)

    def test_similarities_within_unit_interval(self, toy_corpus):
        # overlap <= sqrt(|A| * |B|), so every neighbor similarity is in (0, 1]
        model = train_sknn(toy_corpus)
        rng = np.random.default_rng(0)
        for _ in range(20):
            prefix = list(rng.integers(0, toy_corpus.n_items, size=2))
            scores = model.score([int(p) for p in prefix])
            assert np.all(scores >= 0)
            assert np.all(np.isfinite(scores))

    def test_unseen_prefix_items_score_zero(self, toy_corpus):
        model = train_sknn(toy_corpus)
        scores = model.score([toy_corpus.n_items - 1])
        assert np.all(np.isfinite(scores))


class TestBprMf:
    def test_learns_cooccurrence_preference(self):
        lists = [["a", "b"]] * 6 + [["c", "c"]]
        corpus = SequenceSet.from_item_lists(lists)
        hp = BprHyperParams(dim=8, epochs=40, batch_size=4, learning_rate=0.1)
        model = train_bpr_mf(corpus, hp, seed=3)
        v = corpus.vocab
        scores = model.score([v.encode("a")])
        assert scores[v.encode("b")] > scores[v.encode("c")]

    def test_zero_epochs_finite_scores(self, toy_corpus):
        model = train_bpr_mf(toy_corpus, BprHyperParams(dim=4, epochs=0), seed=1)
        scores = model.score([0, 1])
        assert np.all(np.isfinite(scores))
        assert model.epoch_losses == []

    def test_seed_determinism(self, toy_corpus):
        hp = BprHyperParams(dim=4, epochs=3, batch_size=4)
        first = train_bpr_mf(toy_corpus, hp, seed=42)
        second = train_bpr_mf(toy_corpus, hp, seed=42)
        assert np.array_equal(first.factors, second.factors)
        assert first.epoch_losses == second.epoch_losses

    def test_different_seeds_differ(self, toy_corpus):
        hp = BprHyperParams(dim=4, epochs=1, batch_size=4)
        first = train_bpr_mf(toy_corpus, hp, seed=1)
        second = train_bpr_mf(toy_corpus, hp, seed=2)
        assert not np.array_equal(first.factors, second.factors)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_first_epoch_improves_on_initialization(self, seed):
        rng = np.random.default_rng(seed)
        lists = [
            [f"i{rng.integers(8)}" for _ in range(rng.integers(2, 5))] for _ in range(25)
        ]
        corpus = SequenceSet.from_item_lists(lists)
        hp = BprHyperParams(dim=8, epochs=1, batch_size=8)
        model = train_bpr_mf(corpus, hp, seed=seed)
        assert model.epoch_losses[0] < model.initial_loss

    def test_divergence_aborts(self, toy_corpus):
        hp = BprHyperParams(dim=4, epochs=50, learning_rate=1e18, batch_size=4)
        with pytest.raises(ModelError):
            train_bpr_mf(toy_corpus, hp, seed=0)

    def test_whole_catalog_sequence_rejected(self):
        corpus = SequenceSet.from_item_lists([["a", "b"], ["a", "b"]])
        with pytest.raises(ModelError):
            train_bpr_mf(corpus, BprHyperParams(dim=2, epochs=1), seed=0)

    def test_hyperparameter_validation(self):
        with pytest.raises(ValueError):
            BprHyperParams(dim=0).validate()
        with pytest.raises(ValueError):
            BprHyperParams(learning_rate=-1).validate()


class TestTopK:
    def test_all_equal_scores_order_by_index(self):
        scores = np.ones(8)
        assert list(top_k_indices(scores, 3)) == [0, 1, 2]

    def test_strict_max_first(self):
        scores = np.array([0.1, 0.9, 0.3])
        assert list(top_k_indices(scores, 2)) == [1, 2]

    def test_true_topk_property(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            scores = rng.choice([0.0, 0.25, 0.5, 1.0], size=30)
            k = int(rng.integers(1, 30))
            top = top_k_indices(scores, k)
            kth = scores[top[-1]]
            outside = np.setdiff1d(np.arange(30), top)
            assert np.all(scores[outside] <= kth)

    def test_k_larger_than_catalog_rejected(self, toy_corpus):
        model = train_item_knn(toy_corpus)
        with pytest.raises(ValueError):
            recommend_topk(model, [0], k=toy_corpus.n_items + 1)


class TestPredictAll:
    def test_workers_equivalent(self, toy_corpus):
        model = train_item_knn(toy_corpus)
        samples = SampleSet(
            samples=[Sample(id=i, prefix=[i % 6], label=0, origin_end_time=0) for i in range(9)]
        )
        solo = predict_all(model, samples, k=3, workers=1)
        multi = predict_all(model, samples, k=3, workers=2)
        assert solo.lists == multi.lists
        assert solo.k == 3

    def test_scores_finite_for_all_models(self, toy_corpus):
        samples = SampleSet(
            samples=[Sample(id=0, prefix=[0, 1], label=2, origin_end_time=0)]
        )
        for model in (
            train_item_knn(toy_corpus),
            train_sknn(toy_corpus),
            train_bpr_mf(toy_corpus, BprHyperParams(dim=4, epochs=1, batch_size=4), seed=0),
        ):
            preds = predict_all(model, samples, k=4)
            assert len(preds.lists[0]) == 4
