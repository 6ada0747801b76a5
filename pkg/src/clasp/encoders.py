"""Word-level text encoder and temporal-convolution signal encoder.

Text: embedding lookup (128) -> masked mean over tokens -> 128-256-128 MLP.
Signal: z-score, 4 stride-2 conv blocks (kernel 7, channels 32/64/128/128),
mean over time, dense to 128. Signals shorter than 64 samples are linearly
resampled to 64 so one architecture serves 12-point and 2048-point corpora.
"""

import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import numerics as nm
from .dataset import SignalSeries
from .errors import InputTooShortError, InvalidSignalError, VersionError, VocabError

PAD, UNK = "<pad>", "<unk>"
PAD_IDX, UNK_IDX = 0, 1

EMBED_DIM = 128
TEXT_HIDDEN = 256
TEXT_DIM = 128  # U
SIGNAL_DIM = 128  # V
CONV_CHANNELS = (32, 64, 128, 128)
CONV_KERNEL = 7
CONV_STRIDE = 2
CONV_PAD = 3
MIN_SIGNAL_LEN = 16
RESAMPLE_LEN = 64

_token_re = re.compile(r"[^a-z0-9]+")


@dataclass
class Vocab:
    tokens: list  # index -> token, specials included
    min_count: int = 1

    def __post_init__(self):
        self.index = {tok: i for i, tok in enumerate(self.tokens)}
        if self.index.get(UNK) != UNK_IDX or self.index.get(PAD) != PAD_IDX:
            raise VocabError("vocab must start with <pad>, <unk>")

    def __len__(self):
        return len(self.tokens)


def normalize_text(text):
    return [t for t in _token_re.sub(" ", text.lower()).split() if t]


def build_vocab(captions, min_count=1):
    """Frequency-desc then lexicographic ordering; PAD/UNK always present."""
    counts = Counter()
    for cap in captions:
        counts.update(normalize_text(cap.text))
    kept = sorted(
        (tok for tok, c in counts.items() if c >= min_count),
        key=lambda tok: (-counts[tok], tok),
    )
    return Vocab(tokens=[PAD, UNK] + kept, min_count=min_count)


def tokenize(text, vocab):
    """Map text to vocab indices; all-punctuation input yields [UNK]."""
    toks = normalize_text(text)
    if not toks:
        return [UNK_IDX]
    return [vocab.index.get(t, UNK_IDX) for t in toks]


def save_vocab(vocab, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"clasp-vocab v1 min_count={vocab.min_count}\n")
        fh.write("".join(tok + "\n" for tok in vocab.tokens))


def load_vocab(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        m = re.fullmatch(r"clasp-vocab v(\d+) min_count=(\d+)", header)
        if not m or int(m.group(1)) != 1:
            raise VersionError(f"bad vocab header: {header!r}")
        tokens = [line.rstrip("\n") for line in fh]
    return Vocab(tokens=tokens, min_count=int(m.group(2)))


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

def _uniform_init(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


def init_encoder_params(vocab_size, seed):
    """All encoder tensors, uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))."""
    rng = np.random.default_rng(seed)
    p = {
        "text.embed": _uniform_init(rng, (vocab_size, EMBED_DIM), EMBED_DIM),
        "text.fc1.w": _uniform_init(rng, (EMBED_DIM, TEXT_HIDDEN), EMBED_DIM),
        "text.fc1.b": _uniform_init(rng, (TEXT_HIDDEN,), EMBED_DIM),
        "text.fc2.w": _uniform_init(rng, (TEXT_HIDDEN, TEXT_DIM), TEXT_HIDDEN),
        "text.fc2.b": _uniform_init(rng, (TEXT_DIM,), TEXT_HIDDEN),
    }
    cin = 1
    for i, cout in enumerate(CONV_CHANNELS, start=1):
        fan = cin * CONV_KERNEL
        p[f"sig.conv{i}.w"] = _uniform_init(rng, (cout, cin, CONV_KERNEL), fan)
        p[f"sig.conv{i}.b"] = _uniform_init(rng, (cout,), fan)
        cin = cout
    p["sig.fc.w"] = _uniform_init(rng, (CONV_CHANNELS[-1], SIGNAL_DIM), CONV_CHANNELS[-1])
    p["sig.fc.b"] = _uniform_init(rng, (SIGNAL_DIM,), CONV_CHANNELS[-1])
    return p


# ---------------------------------------------------------------------------
# signal preprocessing
# ---------------------------------------------------------------------------

def preprocess_signal(series):
    """Z-score with population std; constant input maps to all zeros."""
    values = np.asarray(series.values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise InvalidSignalError(f"signal {series.id!r} has non-finite samples")
    std = float(values.std())
    z = (values - values.mean()) / max(std, 1e-8)
    return SignalSeries(id=series.id, values=z)


def signal_to_input(series):
    """Preprocess + short-signal resampling; returns a float array (L,)."""
    if series.length < MIN_SIGNAL_LEN:
        raise InputTooShortError(
            f"signal {series.id!r} has {series.length} samples, need >= {MIN_SIGNAL_LEN}"
        )
    z = preprocess_signal(series).values
    if z.shape[0] < RESAMPLE_LEN:
        src = np.linspace(0.0, 1.0, z.shape[0])
        dst = np.linspace(0.0, 1.0, RESAMPLE_LEN)
        z = np.interp(dst, src, z)
    return z


# ---------------------------------------------------------------------------
# forward graphs (batched)
# ---------------------------------------------------------------------------

def pad_token_batch(token_seqs):
    """Stack variable-length index lists into (B, T) with a PAD mask."""
    t = max(len(s) for s in token_seqs)
    idx = np.full((len(token_seqs), t), PAD_IDX, dtype=np.int64)
    mask = np.zeros((len(token_seqs), t), dtype=np.float32)
    for i, seq in enumerate(token_seqs):
        idx[i, : len(seq)] = seq
        mask[i, : len(seq)] = 1.0
    return idx, mask


def text_forward(indices, mask, params):
    """(B, T) indices + mask -> (B, TEXT_DIM) node; PAD excluded from the mean."""
    if indices.max(initial=0) >= params["text.embed"].value.shape[0]:
        raise VocabError("token index outside the embedding table")
    emb = nm.embedding_lookup(params["text.embed"], indices)  # (B, T, D)
    mask3 = np.repeat(mask[:, :, None], EMBED_DIM, axis=2).astype(emb.value.dtype)
    summed = nm.sum_over_axis(nm.mul_const(emb, mask3), axis=1)  # (B, D)
    counts = np.maximum(mask.sum(axis=1), 1.0)
    inv = np.repeat((1.0 / counts)[:, None], EMBED_DIM, axis=1).astype(emb.value.dtype)
    pooled = nm.mul_const(summed, inv)
    h = nm.relu(nm.add_rowvec(nm.matmul(pooled, params["text.fc1.w"]), params["text.fc1.b"]))
    return nm.add_rowvec(nm.matmul(h, params["text.fc2.w"]), params["text.fc2.b"])


def signal_forward(x, params):
    """(B, 1, L) input node -> (B, SIGNAL_DIM) node."""
    h = x
    for i in range(1, len(CONV_CHANNELS) + 1):
        h = nm.relu(
            nm.conv1d(
                h,
                params[f"sig.conv{i}.w"],
                params[f"sig.conv{i}.b"],
                stride=CONV_STRIDE,
                padding=CONV_PAD,
            )
        )
    pooled = nm.mean_over_axis(h, axis=2)  # (B, C)
    return nm.add_rowvec(nm.matmul(pooled, params["sig.fc.w"]), params["sig.fc.b"])


def _param_nodes(params):
    return {k: nm.constant(v, name=k) for k, v in params.items()}


def encode_text(caption_text, vocab, params):
    """Single-caption inference; returns a (TEXT_DIM,) array."""
    idx, mask = pad_token_batch([tokenize(caption_text, vocab)])
    return text_forward(idx, mask, _param_nodes(params)).value[0]


def encode_signal(series, params):
    """Single-signal inference; returns a (SIGNAL_DIM,) array."""
    x = signal_to_input(series).astype(np.float32)[None, None, :]
    return signal_forward(nm.constant(x), _param_nodes(params)).value[0]
