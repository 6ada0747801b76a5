import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clasp import dataset as ds
from clasp.errors import (
    MissingParamError,
    ParseError,
    SplitError,
    TemplateError,
    VersionError,
)


def triple(t="flat", p="none", f="none"):
    return ds.ClassTriple(trend=t, periodic=p, fluctuation=f)


class TestComposeSignal:
    def test_flat_none_none_is_constant_zero(self):
        s = ds.compose_signal(triple(), {"offset": 0.0}, 2048, rng_seed=1)
        assert s.length == 2048
        assert np.allclose(s.values, 0.0)

    def test_linear_trend_total_rise(self):
        # trend runs over normalized time t in [0,1): rise = slope * (L-1)/L
        slope, length = 1.5, 200
        s = ds.compose_signal(triple(t="linear_inc"), {"offset": 0.0, "slope": slope}, length, 1)
        assert s.values[-1] - s.values[0] == pytest.approx(slope * (length - 1) / length)

    def test_sawtooth_autocorrelation_period(self):
        period = 128
        s = ds.compose_signal(
            triple(p="sawtooth"), {"offset": 0.0, "amplitude": 1.0, "period": period}, 2048, 1
        )
        x = s.values - s.values.mean()
        # brute-force circular autocorrelation; max over lags 1..200 at the period
        ac = np.array([np.dot(x, np.roll(x, lag)) for lag in range(1, 200)])
        assert int(np.argmax(ac)) + 1 == period

    def test_missing_param(self):
        with pytest.raises(MissingParamError) as exc:
            ds.compose_signal(triple(t="linear_inc"), {"offset": 0.0}, 100, 1)
        assert exc.value.name == "slope"

    def test_component_additivity(self):
        params = {
            "offset": 0.3,
            "slope": 1.2,
            "amplitude": 0.8,
            "period": 32.0,
            "noise_sigma": 0.1,
        }
        full = ds.compose_signal(triple("linear_inc", "sine", "large_noise"), params, 256, 9)
        parts = (
            ds.compose_signal(triple(t="linear_inc"), params, 256, 9).values
            + ds.compose_signal(triple(p="sine"), {**params, "offset": 0.0}, 256, 9).values
            + ds.compose_signal(triple(f="large_noise"), {**params, "offset": 0.0}, 256, 9).values
        )
        assert np.allclose(full.values, parts)

    def test_spike_signs(self):
        params = {"offset": 0.0, "spike_rate": 0.2, "spike_magnitude": 2.0}
        pos = ds.compose_signal(triple(f="pos_spikes"), params, 500, 4).values
        neg = ds.compose_signal(triple(f="neg_spikes"), params, 500, 4).values
        assert pos.max() > 0 and pos.min() == 0
        assert neg.min() < 0 and neg.max() == 0


class TestCaptions:
    def test_sushi_template_matches_published_caption(self):
        cap = ds.render_caption(triple(p="sawtooth"), 0)
        assert cap.text == (
            "The signal is showing a periodic pattern that repeats at "
            "regular intervals, like a sawtooth wave."
        )

    def test_nine_word_template(self):
        assert ds.render_caption(triple(p="sawtooth"), 1).text == "The signal shows a sawtooth wave."

    def test_fixed_forms(self):
        assert ds.render_caption(triple(p="sawtooth"), 2).text == "The signal is sawtooth wave."
        assert ds.render_caption(triple(p="sawtooth"), 3).text == "sawtooth wave"

    def test_unknown_template(self):
        with pytest.raises(TemplateError):
            ds.render_caption(triple(), ds.TEMPLATE_COUNT)

    def test_mentions_each_component_once(self):
        tr = triple("linear_inc", "none", "large_noise")
        for tid in range(ds.TEMPLATE_COUNT):
            text = ds.render_caption(tr, tid).text.lower()
            assert text.count("linearly increasing") == 1
            assert text.count("large noise") == 1

    def test_nine_word_template_stays_within_limit(self):
        for t in ds.TREND_CLASSES:
            for p in ds.PERIODIC_CLASSES:
                for f in ds.FLUCT_CLASSES:
                    cap = ds.render_caption(triple(t, p, f), 1)
                    assert cap.word_count <= 9, cap.text

    def test_detector_inverts_every_template(self):
        for t in ds.TREND_CLASSES:
            for p in ds.PERIODIC_CLASSES:
                for f in ds.FLUCT_CLASSES:
                    for tid in range(ds.TEMPLATE_COUNT):
                        cap = ds.render_caption(triple(t, p, f), tid)
                        assert ds.detect_triple(cap.text) == triple(t, p, f)

    def test_phrase_pools_injective(self):
        phrases = (
            list(ds.TREND_PHRASES.values())
            + list(ds.PERIODIC_PHRASES.values())
            + list(ds.FLUCT_PHRASES.values())
        )
        assert len(set(phrases)) == len(phrases)
        for a in phrases:
            for b in phrases:
                assert a == b or a not in b


class TestGenerate:
    def test_size_zero(self):
        assert ds.generate_dataset(ds.GeneratorConfig(size=0), 1) == []

    def test_lengths_and_count(self):
        out = ds.generate_dataset(ds.GeneratorConfig(size=40, length=2048), 5)
        assert len(out) == 40
        assert all(ex.signal.length == 2048 for ex in out)

    def test_determinism_sha(self):
        cfg = ds.GeneratorConfig(size=100, length=128)
        a = ds.corpus_sha256(ds.generate_dataset(cfg, 11))
        b = ds.corpus_sha256(ds.generate_dataset(cfg, 11))
        assert a == b
        assert a != ds.corpus_sha256(ds.generate_dataset(cfg, 12))

    def test_class_value_coverage(self):
        out = ds.generate_dataset(ds.GeneratorConfig(size=200, length=64), 2)
        for cat, classes in (
            ("trend", ds.TREND_CLASSES),
            ("periodic", ds.PERIODIC_CLASSES),
            ("fluctuation", ds.FLUCT_CLASSES),
        ):
            assert {getattr(ex.labels, cat) for ex in out} == set(classes)

    def test_caption_faithful_to_labels(self):
        out = ds.generate_dataset(ds.GeneratorConfig(size=100, length=64), 3)
        for ex in out:
            assert ds.detect_triple(ex.caption.text) == ex.labels

    def test_values_normalized(self):
        out = ds.generate_dataset(ds.GeneratorConfig(size=30, length=256), 4)
        for ex in out:
            assert ex.signal.values.max() <= 1.0 + 1e-9
            assert ex.signal.values.min() >= -1.0 - 1e-9


class TestSplit:
    def test_ten_examples(self):
        out = ds.generate_dataset(ds.GeneratorConfig(size=10, length=64), 6)
        sp = ds.split_dataset(out, 0)
        assert (len(sp.train), len(sp.val), len(sp.test)) == (8, 1, 1)

    def test_too_small(self):
        out = ds.generate_dataset(ds.GeneratorConfig(size=2, length=64), 6)
        with pytest.raises(SplitError):
            ds.split_dataset(out, 0)

    @pytest.mark.parametrize("n", range(3, 21))
    def test_rounding_rule_enumerated(self, n):
        out = ds.generate_dataset(ds.GeneratorConfig(size=n, length=64), 6)
        sp = ds.split_dataset(out, 0)
        # oracle: floor(0.8n)/floor(0.1n)/rest, one moved out of train per empty split
        tr, va = int(0.8 * n), int(0.1 * n)
        te = n - tr - va
        if va == 0:
            tr, va = tr - 1, 1
        if te == 0:
            tr, te = tr - 1, 1
        assert (len(sp.train), len(sp.val), len(sp.test)) == (tr, va, te)
        ids = [ex.signal.id for part in (sp.train, sp.val, sp.test) for ex in part]
        assert sorted(ids) == sorted(ex.signal.id for ex in out)

    def test_split_deterministic(self):
        out = ds.generate_dataset(ds.GeneratorConfig(size=20, length=64), 6)
        a = ds.split_dataset(out, 5)
        b = ds.split_dataset(out, 5)
        assert [e.signal.id for e in a.train] == [e.signal.id for e in b.train]

    @given(seed=st.integers(0, 10_000), n=st.integers(3, 60))
    @settings(max_examples=25, deadline=None)
    def test_split_partitions_corpus(self, seed, n):
        out = ds.generate_dataset(ds.GeneratorConfig(size=n, length=64), 1)
        sp = ds.split_dataset(out, seed)
        parts = [{e.signal.id for e in p} for p in (sp.train, sp.val, sp.test)]
        assert parts[0] | parts[1] | parts[2] == {e.signal.id for e in out}
        assert not (parts[0] & parts[1] or parts[0] & parts[2] or parts[1] & parts[2])


class TestJsonl:
    def test_empty_roundtrip(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        ds.save_jsonl([], path)
        assert path.read_text().count("\n") == 1  # header only
        assert ds.load_jsonl(path) == []

    def test_roundtrip_fixed_point(self, tmp_path):
        out = ds.generate_dataset(ds.GeneratorConfig(size=100, length=64), 8)
        path = tmp_path / "corpus.jsonl"
        ds.save_jsonl(out, path)
        loaded = ds.load_jsonl(path)
        assert ds.corpus_sha256(loaded) == ds.corpus_sha256(out)
        for a, b in zip(out, loaded):
            assert np.array_equal(a.signal.values, b.signal.values)
            assert a.caption.text == b.caption.text
            assert a.labels == b.labels
            assert a.gen_params == pytest.approx(b.gen_params)
            assert a.template_id == b.template_id

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        out = ds.generate_dataset(ds.GeneratorConfig(size=2, length=64), 8)
        path.write_text(ds.dumps_jsonl(out) + "{not json\n")
        with pytest.raises(ParseError) as exc:
            ds.load_jsonl(path)
        assert exc.value.line_no == 4

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "v2.jsonl"
        path.write_text('{"schema":"clasp-dataset","version":2}\n')
        with pytest.raises(VersionError):
            ds.load_jsonl(path)
