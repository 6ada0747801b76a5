import numpy as np
import pytest

from clasp import dataset as ds
from clasp import encoders as enc
from clasp import numerics as nm
from clasp.dataset import Caption, SignalSeries
from clasp.errors import InputTooShortError, InvalidSignalError, VersionError


@pytest.fixture(scope="module")
def corpus():
    return ds.generate_dataset(ds.GeneratorConfig(size=100, length=128), 7)


@pytest.fixture(scope="module")
def vocab(corpus):
    return enc.build_vocab([ex.caption for ex in corpus], min_count=1)


class TestVocab:
    def test_min_count_filters(self):
        vocab = enc.build_vocab([Caption(id="a", text="a a b")], min_count=2)
        assert vocab.tokens == [enc.PAD, enc.UNK, "a"]

    def test_includes_corpus_terms(self, vocab):
        assert "sawtooth" in vocab.index

    def test_deterministic_file_roundtrip(self, vocab, tmp_path):
        p1, p2 = tmp_path / "v1.txt", tmp_path / "v2.txt"
        enc.save_vocab(vocab, p1)
        enc.save_vocab(vocab, p2)
        assert p1.read_bytes() == p2.read_bytes()
        loaded = enc.load_vocab(p1)
        assert loaded.tokens == vocab.tokens
        assert loaded.min_count == vocab.min_count

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("not-a-vocab\n")
        with pytest.raises(VersionError):
            enc.load_vocab(p)


class TestTokenize:
    def test_paper_sentence(self, vocab):
        idx = enc.tokenize("The signal is sawtooth wave.", vocab)
        assert [vocab.tokens[i] for i in idx] == ["the", "signal", "is", "sawtooth", "wave"]

    def test_all_punctuation_gives_unk(self, vocab):
        assert enc.tokenize("???", vocab) == [enc.UNK_IDX]

    def test_idempotent_on_detokenized(self, vocab):
        idx = enc.tokenize("The signal is sawtooth wave.", vocab)
        text = " ".join(vocab.tokens[i] for i in idx)
        assert enc.tokenize(text, vocab) == idx

    def test_oov_maps_to_unk(self, vocab):
        assert enc.tokenize("zyzzyva", vocab) == [enc.UNK_IDX]


class TestPreprocess:
    def test_z_score_values(self):
        out = enc.preprocess_signal(SignalSeries(id="s", values=[1.0, 2.0, 3.0]))
        assert np.allclose(out.values, [-1.2247, 0.0, 1.2247], atol=1e-4)

    def test_constant_maps_to_zero(self):
        out = enc.preprocess_signal(SignalSeries(id="s", values=[5.0, 5.0, 5.0]))
        assert np.allclose(out.values, 0.0)

    def test_moments(self):
        rng = np.random.default_rng(0)
        out = enc.preprocess_signal(SignalSeries(id="s", values=rng.normal(3, 7, 500)))
        assert abs(out.values.mean()) < 1e-6
        assert out.values.std() == pytest.approx(1.0, abs=1e-4)

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        s = SignalSeries(id="s", values=rng.normal(0, 2, 100))
        once = enc.preprocess_signal(s).values
        twice = enc.preprocess_signal(enc.preprocess_signal(s)).values
        assert np.allclose(once, twice, atol=1e-6)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidSignalError):
            enc.preprocess_signal(SignalSeries(id="s", values=[1.0, np.nan, 2.0]))


class TestSignalEncoder:
    def params(self, vocab_size=10, seed=0):
        return enc.init_encoder_params(vocab_size, seed)

    def test_temporal_dims_halve_per_layer(self):
        # 2048 -> 1024 -> 512 -> 256 -> 128 before pooling
        p = self.params()
        nodes = {k: nm.constant(v) for k, v in p.items()}
        x = nm.constant(np.zeros((1, 1, 2048), dtype=np.float32))
        lengths = []
        h = x
        for i in range(1, 5):
            h = nm.relu(nm.conv1d(h, nodes[f"sig.conv{i}.w"], nodes[f"sig.conv{i}.b"], 2, 3))
            lengths.append(h.value.shape[2])
        assert lengths == [1024, 512, 256, 128]

    def test_zero_input_zero_bias_gives_zero_feature_pre_dense(self):
        p = self.params()
        for i in range(1, 5):
            p[f"sig.conv{i}.b"] = np.zeros_like(p[f"sig.conv{i}.b"])
        nodes = {k: nm.constant(v) for k, v in p.items()}
        h = nm.constant(np.zeros((1, 1, 256), dtype=np.float32))
        for i in range(1, 5):
            h = nm.relu(nm.conv1d(h, nodes[f"sig.conv{i}.w"], nodes[f"sig.conv{i}.b"], 2, 3))
        assert np.allclose(h.value, 0.0)

    def test_short_truce_style_signal_encodes(self):
        p = self.params()
        series = SignalSeries(id="s", values=np.linspace(-1, 1, 16))
        out = enc.encode_signal(series, p)
        assert out.shape == (enc.SIGNAL_DIM,)
        assert np.all(np.isfinite(out))

    def test_too_short_rejected(self):
        with pytest.raises(InputTooShortError):
            enc.encode_signal(SignalSeries(id="s", values=np.zeros(8)), self.params())

    def test_deterministic(self):
        p = self.params()
        series = SignalSeries(id="s", values=np.sin(np.linspace(0, 9, 300)))
        assert np.array_equal(enc.encode_signal(series, p), enc.encode_signal(series, p))


class TestTextEncoder:
    def test_single_token_pool_equals_embedding_row(self, vocab):
        p = enc.init_encoder_params(len(vocab), 3)
        idx, mask = enc.pad_token_batch([[5]])
        nodes = {k: nm.constant(v) for k, v in p.items()}
        emb = nm.embedding_lookup(nodes["text.embed"], idx)
        mask3 = np.repeat(mask[:, :, None], enc.EMBED_DIM, axis=2)
        pooled = nm.sum_over_axis(nm.mul_const(emb, mask3.astype(np.float32)), 1)
        assert np.allclose(pooled.value[0], p["text.embed"][5])

    def test_order_invariance(self, vocab):
        p = enc.init_encoder_params(len(vocab), 3)
        a = enc.encode_text("sawtooth wave signal", vocab, p)
        b = enc.encode_text("signal wave sawtooth", vocab, p)
        assert np.allclose(a, b, atol=1e-6)

    def test_disjoint_captions_differ_at_random_init(self, vocab):
        p = enc.init_encoder_params(len(vocab), 3)
        a = enc.encode_text("sawtooth wave", vocab, p)
        b = enc.encode_text("large noise", vocab, p)
        assert not np.allclose(a, b)

    def test_padding_does_not_change_output(self, vocab):
        p = enc.init_encoder_params(len(vocab), 3)
        nodes = {k: nm.constant(v) for k, v in p.items()}
        toks = enc.tokenize("the signal is sawtooth wave", vocab)
        alone = enc.text_forward(*enc.pad_token_batch([toks]), nodes).value[0]
        padded = enc.text_forward(*enc.pad_token_batch([toks, toks + toks]), nodes).value[0]
        assert np.allclose(alone, padded, atol=1e-6)
