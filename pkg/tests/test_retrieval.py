import numpy as np
import pytest

from clasp import contrastive as ct
from clasp import dataset as ds
from clasp import encoders as enc
from clasp import retrieval as rt
from clasp.errors import (
    CheckpointError,
    ContractError,
    IndexError_,
    InvalidSignalError,
    ModalityError,
    StaleIndexError,
)


@pytest.fixture(scope="module")
def setup():
    corpus = ds.generate_dataset(ds.GeneratorConfig(size=40, length=256), 13)
    vocab = enc.build_vocab([ex.caption for ex in corpus])
    model = ct.init_model(vocab, 13)
    return corpus, model


@pytest.fixture(scope="module")
def sig_index(setup):
    corpus, model = setup
    return rt.build_index([ex.signal for ex in corpus], model, "signal")


class TestCosine:
    def test_self_similarity(self):
        a = np.array([1.0, 2.0, -3.0])
        assert rt.cosine(a, a) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert rt.cosine([1, 0, 0], [0, 1, 0]) == 0.0

    def test_symmetric(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a, b = rng.standard_normal(5), rng.standard_normal(5)
            assert rt.cosine(a, b) == pytest.approx(rt.cosine(b, a))

    def test_zero_norm_guard(self):
        assert rt.cosine(np.zeros(3), [1.0, 2.0, 3.0]) == 0.0


class TestBuildIndex:
    def test_single_item(self, setup):
        corpus, model = setup
        idx = rt.build_index([corpus[0].signal], model, "signal")
        assert len(idx) == 1
        assert np.linalg.norm(idx.embeddings[0]) == pytest.approx(1.0, abs=1e-5)

    def test_rows_unit_norm(self, sig_index):
        assert np.allclose(np.linalg.norm(sig_index.embeddings, axis=1), 1.0, atol=1e-5)

    def test_rebuild_identical(self, setup, tmp_path):
        corpus, model = setup
        a = rt.build_index([ex.signal for ex in corpus], model, "signal")
        b = rt.build_index([ex.signal for ex in corpus], model, "signal")
        pa, pb = tmp_path / "a.idx", tmp_path / "b.idx"
        rt.save_index(a, pa)
        rt.save_index(b, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_empty_items(self, setup):
        _, model = setup
        with pytest.raises(IndexError_):
            rt.build_index([], model, "signal")


class TestQueries:
    def test_full_ranking_is_permutation(self, setup, sig_index):
        corpus, model = setup
        result = rt.query_by_text("sawtooth wave", sig_index, model, k=len(corpus))
        assert sorted(i for i, _ in result.ranked) == sorted(ex.signal.id for ex in corpus)

    def test_scores_non_increasing_and_bounded(self, setup, sig_index):
        _, model = setup
        scores = [s for _, s in rt.query_by_text("large noise", sig_index, model, 20).ranked]
        assert all(a >= b for a, b in zip(scores, scores[1:]))
        assert all(-1 - 1e-6 <= s <= 1 + 1e-6 for s in scores)

    def test_matches_independent_scan_oracle(self, setup, sig_index):
        corpus, model = setup
        rng = np.random.default_rng(1)
        queries = ["sine wave", "linearly increasing trend", "positive spikes", "the signal is flat"]
        for q in queries:
            result = rt.query_by_text(q, sig_index, model, 10)
            qv = rt._embed_texts([q], model)[0]
            oracle = []
            for i, ex_id in enumerate(sig_index.ids):
                s = sum(float(a * b) for a, b in zip(sig_index.embeddings[i], qv))
                oracle.append((ex_id, s / float(np.linalg.norm(qv))))
            oracle.sort(key=lambda t: (-t[1], t[0]))
            assert [i for i, _ in result.ranked] == [i for i, _ in oracle[:10]]
            for (_, a), (_, b) in zip(result.ranked, oracle):
                assert a == pytest.approx(b, abs=1e-9)

    def test_k_larger_than_m_clamps(self, setup, sig_index):
        corpus, model = setup
        result = rt.query_by_text("square wave", sig_index, model, k=10_000)
        assert len(result.ranked) == len(corpus)

    def test_modality_mismatch(self, setup, sig_index):
        corpus, model = setup
        with pytest.raises(ModalityError):
            rt.query_by_signal(corpus[0].signal, sig_index, model, 5)

    def test_stale_index(self, setup, sig_index):
        corpus, _ = setup
        vocab = enc.build_vocab([ex.caption for ex in corpus])
        other = ct.init_model(vocab, 999)
        with pytest.raises(StaleIndexError):
            rt.query_by_text("sine wave", sig_index, other, 5)

    def test_invalid_signal_query_propagates(self, setup):
        corpus, model = setup
        tidx = rt.build_index([ex.caption for ex in corpus], model, "text")
        bad = ds.SignalSeries(id="bad", values=[np.nan] * 32)
        with pytest.raises(InvalidSignalError):
            rt.query_by_signal(bad, tidx, model, 3)

    def test_k_must_be_positive(self, setup, sig_index):
        _, model = setup
        with pytest.raises(ContractError):
            rt.query_by_text("sine wave", sig_index, model, 0)

    def test_deterministic_ranking(self, setup, sig_index):
        _, model = setup
        a = rt.query_by_text("triangle wave", sig_index, model, 10)
        b = rt.query_by_text("triangle wave", sig_index, model, 10)
        assert a.ranked == b.ranked


class TestIndexPersistence:
    def test_roundtrip(self, sig_index, tmp_path):
        path = tmp_path / "sig.idx"
        rt.save_index(sig_index, path)
        loaded = rt.load_index(path)
        assert loaded.ids == sig_index.ids
        assert loaded.modality == "signal"
        assert loaded.fingerprint == sig_index.fingerprint
        assert np.array_equal(loaded.embeddings, sig_index.embeddings)

    def test_wrong_container(self, setup, tmp_path):
        _, model = setup
        path = tmp_path / "model.ckpt"
        ct.save_checkpoint(model, path)
        with pytest.raises(CheckpointError):
            rt.load_index(path)
