"""Synthetic (signal, caption, labels) corpora.

Each example is built from a class triple (trend, periodic, fluctuation):
the signal is the sample-wise sum of one component per category, min-max
scaled to [-1, 1], and the caption is rendered from one of a fixed set of
templates so that every non-null class is mentioned by its keyword phrase
exactly once.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    ContractError,
    InvalidParamError,
    MissingParamError,
    ParseError,
    SplitError,
    TemplateError,
    VersionError,
)

TREND_CLASSES = ("flat", "linear_inc", "linear_dec", "quadratic", "exp_inc", "exp_dec", "neg_cubic")
PERIODIC_CLASSES = ("none", "sine", "square", "sawtooth", "triangle")
FLUCT_CLASSES = ("none", "small_noise", "large_noise", "pos_spikes", "neg_spikes")

# Keyword phrase per non-null class. The pools are injective: no phrase is a
# substring of another, so a substring scan recovers the triple exactly.
TREND_PHRASES = {
    "linear_inc": "linearly increasing",
    "linear_dec": "linearly decreasing",
    "quadratic": "quadratic",
    "exp_inc": "exponentially increasing",
    "exp_dec": "exponentially decreasing",
    "neg_cubic": "negative cubic",
}
PERIODIC_PHRASES = {
    "sine": "sine wave",
    "square": "square wave",
    "sawtooth": "sawtooth wave",
    "triangle": "triangle wave",
}
FLUCT_PHRASES = {
    "small_noise": "small noise",
    "large_noise": "large noise",
    "pos_spikes": "positive spikes",
    "neg_spikes": "negative spikes",
}

NOISE_FACTORS = {"small_noise": 0.06, "large_noise": 0.3}

JSONL_SCHEMA = "clasp-dataset"
JSONL_VERSION = 1

# substream tags so the stochastic component sees the same draws whether or
# not the deterministic components are present (additivity property)
_FLUCT_STREAM = 0xF1


@dataclass
class SignalSeries:
    id: str
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.length < 2:
            raise ContractError(f"SignalSeries needs >= 2 samples, got shape {self.values.shape}")

    @property
    def length(self):
        return int(self.values.shape[0])


@dataclass
class Caption:
    id: str
    text: str

    def __post_init__(self):
        if not self.text:
            raise ContractError("Caption text must be non-empty")

    @property
    def word_count(self):
        return len(self.text.split())


@dataclass(frozen=True)
class ClassTriple:
    trend: str = "flat"
    periodic: str = "none"
    fluctuation: str = "none"

    def __post_init__(self):
        if self.trend not in TREND_CLASSES:
            raise ContractError(f"unknown trend class {self.trend!r}")
        if self.periodic not in PERIODIC_CLASSES:
            raise ContractError(f"unknown periodic class {self.periodic!r}")
        if self.fluctuation not in FLUCT_CLASSES:
            raise ContractError(f"unknown fluctuation class {self.fluctuation!r}")


@dataclass
class LabeledExample:
    signal: SignalSeries
    caption: Caption
    labels: ClassTriple
    gen_params: dict
    template_id: int


@dataclass
class DatasetSplit:
    train: list
    val: list
    test: list
    seed: int


# ---------------------------------------------------------------------------
# signal composition
# ---------------------------------------------------------------------------

def _require(params, *names):
    for name in names:
        if name not in params:
            raise MissingParamError(name)
        if not math.isfinite(float(params[name])):
            raise InvalidParamError(f"parameter {name} is not finite")


def trend_component(kind, params, length):
    u = np.arange(length, dtype=np.float64) / length
    if kind == "flat":
        _require(params, "offset")
        return np.full(length, float(params["offset"]))
    if kind in ("linear_inc", "linear_dec"):
        _require(params, "offset", "slope")
        sign = 1.0 if kind == "linear_inc" else -1.0
        return float(params["offset"]) + sign * abs(float(params["slope"])) * u
    if kind == "quadratic":
        _require(params, "offset", "slope")
        return float(params["offset"]) + float(params["slope"]) * u * u
    if kind in ("exp_inc", "exp_dec"):
        _require(params, "rate")
        sign = 1.0 if kind == "exp_inc" else -1.0
        y = np.exp(sign * abs(float(params["rate"])) * u)
        return _minmax_scale(y)
    if kind == "neg_cubic":
        return -((2 * u - 1) ** 3)
    raise ContractError(f"unknown trend class {kind!r}")


def periodic_component(kind, params, length):
    if kind == "none":
        return np.zeros(length)
    _require(params, "amplitude", "period")
    period = float(params["period"])
    if period <= 0:
        raise InvalidParamError("period must be positive")
    amp = float(params["amplitude"])
    phase = float(params.get("phase", 0.0))
    frac = (np.arange(length, dtype=np.float64) / period + phase) % 1.0
    if kind == "sine":
        return amp * np.sin(2 * np.pi * frac)
    if kind == "square":
        return amp * np.where(frac < 0.5, 1.0, -1.0)
    if kind == "sawtooth":
        return amp * (2 * frac - 1)
    if kind == "triangle":
        return amp * (4 * np.abs(frac - 0.5) - 1)
    raise ContractError(f"unknown periodic class {kind!r}")


def fluctuation_component(kind, params, length, rng_seed):
    if kind == "none":
        return np.zeros(length)
    rng = np.random.default_rng(np.random.SeedSequence((rng_seed, _FLUCT_STREAM)))
    if kind in ("small_noise", "large_noise"):
        _require(params, "noise_sigma")
        return rng.normal(0.0, abs(float(params["noise_sigma"])), size=length)
    if kind in ("pos_spikes", "neg_spikes"):
        _require(params, "spike_rate", "spike_magnitude")
        rate = float(params["spike_rate"])
        if not 0 <= rate <= 1:
            raise InvalidParamError("spike_rate must be in [0, 1]")
        hits = rng.random(length) < rate
        sign = 1.0 if kind == "pos_spikes" else -1.0
        return hits * sign * abs(float(params["spike_magnitude"]))
    raise ContractError(f"unknown fluctuation class {kind!r}")


def compose_signal(triple, params, length, rng_seed):
    """Sum of trend + periodic + fluctuation components, unnormalized."""
    if length < 2:
        raise ContractError("length must be >= 2")
    values = (
        trend_component(triple.trend, params, length)
        + periodic_component(triple.periodic, params, length)
        + fluctuation_component(triple.fluctuation, params, length, rng_seed)
    )
    return SignalSeries(id="", values=values)


def _minmax_scale(values):
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi - lo < 1e-12:
        return np.zeros_like(np.asarray(values, dtype=np.float64))
    return 2.0 * (values - lo) / (hi - lo) - 1.0


# ---------------------------------------------------------------------------
# caption templates
# ---------------------------------------------------------------------------

def _phrases(triple):
    out = {}
    if triple.trend != "flat":
        out["trend"] = TREND_PHRASES[triple.trend]
    if triple.periodic != "none":
        out["periodic"] = PERIODIC_PHRASES[triple.periodic]
    if triple.fluctuation != "none":
        out["fluctuation"] = FLUCT_PHRASES[triple.fluctuation]
    return out


def _render_sushi(p):
    parts = []
    if "trend" in p:
        parts.append(f"The signal is showing an overall {p['trend']} trend.")
    if "periodic" in p:
        parts.append(
            "The signal is showing a periodic pattern that repeats at "
            f"regular intervals, like a {p['periodic']}."
        )
    if "fluctuation" in p:
        parts.append(f"Besides, the signal is affected by {p['fluctuation']} throughout.")
    return " ".join(parts) or "The signal is staying level with no notable pattern."


def _render_nine_word(p):
    if set(p) == {"periodic"}:
        return f"The signal shows a {p['periodic']}."
    parts = []
    if "trend" in p:
        parts.append(f"{p['trend']} trend")
    if "periodic" in p:
        parts.append(p["periodic"])
    if "fluctuation" in p:
        parts.append(p["fluctuation"])
    if not parts:
        return "Signal stays level throughout."
    return "Signal shows " + ", ".join(parts) + "."


def _class_label(p):
    return " ".join(p[k] for k in ("trend", "periodic", "fluctuation") if k in p)


def _render_template_sentence(p):
    label = _class_label(p)
    return f"The signal is {label}." if label else "The signal is staying level."


def _render_label_only(p):
    return _class_label(p) or "level line"


def _render_para_a(p):
    parts = []
    if "trend" in p:
        parts.append(f"Overall the series trends in a {p['trend']} manner.")
    if "periodic" in p:
        parts.append(f"It repeats in cycles shaped like a {p['periodic']}.")
    if "fluctuation" in p:
        parts.append(f"It also carries {p['fluctuation']} on top.")
    return " ".join(parts) or "It stays level throughout."


def _render_para_b(p):
    parts = []
    if "trend" in p:
        parts.append(f"The curve moves along a {p['trend']} trajectory.")
    if "periodic" in p:
        parts.append(f"A repeating {p['periodic']} pattern runs through it.")
    if "fluctuation" in p:
        parts.append(f"You can spot {p['fluctuation']} across the span.")
    return " ".join(parts) or "The curve stays level from start to end."


def _render_heldout_a(p):
    parts = []
    if "trend" in p:
        parts.append(f"This time series drifts with a {p['trend']} tendency.")
    if "periodic" in p:
        parts.append(f"Regular oscillations resembling a {p['periodic']} are present.")
    if "fluctuation" in p:
        parts.append(f"It is disturbed by {p['fluctuation']} along the way.")
    return " ".join(parts) or "This time series stays level the whole way."


def _render_heldout_b(p):
    parts = []
    if "trend" in p:
        parts.append(f"Across the window the values trace a {p['trend']} course.")
    if "periodic" in p:
        parts.append(f"Cycle after cycle it mimics a {p['periodic']}.")
    if "fluctuation" in p:
        parts.append(f"On top of that it shows {p['fluctuation']}.")
    return " ".join(parts) or "Across the window the values hold level."


_TEMPLATES = (
    _render_sushi,
    _render_nine_word,
    _render_template_sentence,
    _render_label_only,
    _render_para_a,
    _render_para_b,
    _render_heldout_a,
    _render_heldout_b,
)
TEMPLATE_COUNT = len(_TEMPLATES)
TRAIN_TEMPLATE_IDS = (0, 1, 2, 3, 4, 5)
HELDOUT_TEMPLATE_IDS = (6, 7)


def render_caption(triple, template_id, rng_seed=0):
    """Render the caption for a class triple with the given template."""
    if not 0 <= template_id < TEMPLATE_COUNT:
        raise TemplateError(f"unknown template id {template_id}")
    text = _TEMPLATES[template_id](_phrases(triple))
    return Caption(id="", text=text)


def detect_triple(text):
    """Recover the class triple from a caption by keyword-phrase scan."""
    low = text.lower()

    def pick(pool, default):
        found = [cls for cls, phrase in pool.items() if phrase in low]
        if len(found) > 1:
            raise ContractError(f"ambiguous caption mentions {found}")
        return found[0] if found else default

    return ClassTriple(
        trend=pick(TREND_PHRASES, "flat"),
        periodic=pick(PERIODIC_PHRASES, "none"),
        fluctuation=pick(FLUCT_PHRASES, "none"),
    )


# ---------------------------------------------------------------------------
# corpus generation
# ---------------------------------------------------------------------------

def _uniform_weights(classes):
    return {c: 1.0 for c in classes}


def _null_boosted_weights(classes, null_name):
    # null classes sampled 2x so captions regularly omit an attribute,
    # which keeps single-attribute queries in-distribution for retrieval
    weights = {c: 1.0 for c in classes}
    weights[null_name] = 2.0
    return weights


@dataclass
class GeneratorConfig:
    size: int = 1000
    length: int = 2048
    trend_weights: dict = field(default_factory=lambda: _null_boosted_weights(TREND_CLASSES, "flat"))
    periodic_weights: dict = field(default_factory=lambda: _null_boosted_weights(PERIODIC_CLASSES, "none"))
    fluct_weights: dict = field(default_factory=lambda: _null_boosted_weights(FLUCT_CLASSES, "none"))
    template_ids: tuple = TRAIN_TEMPLATE_IDS
    offset_range: tuple = (-0.5, 0.5)
    slope_range: tuple = (1.5, 2.5)
    rate_range: tuple = (2.5, 3.5)
    amplitude_range: tuple = (0.5, 1.0)
    period_frac_range: tuple = (1 / 32, 1 / 16)
    spike_rate_range: tuple = (0.01, 0.05)
    spike_mag_range: tuple = (1.0, 3.0)


def _pick(rng, weights, classes):
    names = [c for c in classes if weights.get(c, 0.0) > 0]
    if not names:
        raise ConfigError("all class weights are zero")
    w = np.array([weights[c] for c in names])
    return names[int(rng.choice(len(names), p=w / w.sum()))]


def _sample_params(rng, triple, config):
    params = {"offset": float(rng.uniform(*config.offset_range))}
    if triple.trend in ("linear_inc", "linear_dec", "quadratic"):
        params["slope"] = float(rng.uniform(*config.slope_range))
    if triple.trend in ("exp_inc", "exp_dec"):
        params["rate"] = float(rng.uniform(*config.rate_range))
    if triple.periodic != "none":
        params["amplitude"] = float(rng.uniform(*config.amplitude_range))
        lo, hi = config.period_frac_range
        params["period"] = float(round(rng.uniform(lo, hi) * config.length))
        params["phase"] = float(rng.uniform(0, 1))
    if triple.fluctuation in ("pos_spikes", "neg_spikes"):
        params["spike_rate"] = float(rng.uniform(*config.spike_rate_range))
    return params


def _make_example(index, seed, config, forced=None):
    rng = np.random.default_rng(np.random.SeedSequence((seed, index)))
    trend = _pick(rng, config.trend_weights, TREND_CLASSES)
    periodic = _pick(rng, config.periodic_weights, PERIODIC_CLASSES)
    fluct = _pick(rng, config.fluct_weights, FLUCT_CLASSES)
    if forced:
        trend = forced.get("trend", trend)
        periodic = forced.get("periodic", periodic)
        fluct = forced.get("fluctuation", fluct)
    triple = ClassTriple(trend=trend, periodic=periodic, fluctuation=fluct)

    params = _sample_params(rng, triple, config)
    rng_seed = int(rng.integers(0, 2**31 - 1))

    # scale the stochastic component to the deterministic amplitude
    base = compose_signal(
        ClassTriple(trend=triple.trend, periodic=triple.periodic), params, config.length, rng_seed
    ).values
    amp = max(float(base.max() - base.min()) / 2.0, 1e-6)
    if triple.fluctuation in NOISE_FACTORS:
        params["noise_sigma"] = NOISE_FACTORS[triple.fluctuation] * amp
    if triple.fluctuation in ("pos_spikes", "neg_spikes"):
        params["spike_magnitude"] = float(rng.uniform(*config.spike_mag_range)) * amp

    series = compose_signal(triple, params, config.length, rng_seed)
    values = _minmax_scale(series.values)
    template_id = int(config.template_ids[int(rng.integers(0, len(config.template_ids)))])
    caption = render_caption(triple, template_id, rng_seed)
    ex_id = f"ex{index:06d}"
    params["rng_seed"] = float(rng_seed)
    return LabeledExample(
        signal=SignalSeries(id=ex_id, values=values),
        caption=Caption(id=ex_id, text=caption.text),
        labels=triple,
        gen_params=params,
        template_id=template_id,
    )


def generate_dataset(config, seed):
    """Deterministically generate `config.size` labeled examples."""
    for tid in config.template_ids:
        if not 0 <= tid < TEMPLATE_COUNT:
            raise TemplateError(f"unknown template id {tid}")
    if config.size == 0:
        return []
    examples = [_make_example(i, seed, config) for i in range(config.size)]

    # repair pass: guarantee every positively-weighted class value appears
    # at least once on corpora large enough to afford it
    if config.size >= 2 * (len(TREND_CLASSES) + len(PERIODIC_CLASSES) + len(FLUCT_CLASSES)):
        missing = []
        for cat, classes, weights in (
            ("trend", TREND_CLASSES, config.trend_weights),
            ("periodic", PERIODIC_CLASSES, config.periodic_weights),
            ("fluctuation", FLUCT_CLASSES, config.fluct_weights),
        ):
            present = {getattr(ex.labels, cat) for ex in examples}
            missing.extend((cat, c) for c in classes if weights.get(c, 0.0) > 0 and c not in present)
        for slot, (cat, cls) in enumerate(missing):
            examples[slot] = _make_example(slot, seed, config, forced={cat: cls})
    return examples


def split_dataset(corpus, seed):
    """Shuffle (seeded) and partition 8:1:1; val/test never left empty."""
    n = len(corpus)
    if n < 3:
        raise SplitError(f"need at least 3 examples to split, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    shuffled = [corpus[i] for i in order]
    n_train, n_val = int(0.8 * n), int(0.1 * n)
    train = shuffled[:n_train]
    val = shuffled[n_train : n_train + n_val]
    test = shuffled[n_train + n_val :]
    for part in (val, test):
        if not part:
            part.append(train.pop())
    return DatasetSplit(train=train, val=val, test=test, seed=seed)


# ---------------------------------------------------------------------------
# JSONL persistence
# ---------------------------------------------------------------------------

def _example_to_obj(ex):
    return {
        "id": ex.signal.id,
        "values": [float(v) for v in ex.signal.values],
        "text": ex.caption.text,
        "trend": ex.labels.trend,
        "periodic": ex.labels.periodic,
        "fluctuation": ex.labels.fluctuation,
        "gen_params": {k: float(ex.gen_params[k]) for k in sorted(ex.gen_params)},
        "template_id": ex.template_id,
    }


def _obj_to_example(obj):
    triple = ClassTriple(trend=obj["trend"], periodic=obj["periodic"], fluctuation=obj["fluctuation"])
    return LabeledExample(
        signal=SignalSeries(id=obj["id"], values=np.array(obj["values"], dtype=np.float64)),
        caption=Caption(id=obj["id"], text=obj["text"]),
        labels=triple,
        gen_params=dict(obj["gen_params"]),
        template_id=int(obj["template_id"]),
    )


def dumps_jsonl(examples):
    lines = [json.dumps({"schema": JSONL_SCHEMA, "version": JSONL_VERSION}, separators=(",", ":"))]
    lines.extend(json.dumps(_example_to_obj(ex), separators=(",", ":")) for ex in examples)
    return "\n".join(lines) + "\n"


def save_jsonl(examples, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_jsonl(examples))


def load_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", line_no=1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise ParseError(str(e), line_no=1) from e
    if header.get("schema") != JSONL_SCHEMA:
        raise VersionError(f"not a {JSONL_SCHEMA} file")
    if header.get("version") != JSONL_VERSION:
        raise VersionError(f"unsupported version {header.get('version')}")
    out = []
    for no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            out.append(_obj_to_example(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ContractError) as e:
            raise ParseError(str(e), line_no=no) from e
    return out


def corpus_sha256(examples):
    return hashlib.sha256(dumps_jsonl(examples).encode("utf-8")).hexdigest()
