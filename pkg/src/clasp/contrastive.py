"""Projection heads, temperature-scaled similarity, symmetric loss, training.

The loss is the mean cross entropy of the diagonal of the row-softmaxed
similarity matrix, averaged over the text and signal directions; encoders,
projections, and the log-temperature are trained jointly with Adam.
"""

import itertools
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import checkpoint as ckpt
from . import dataset as ds
from . import encoders
from . import numerics as nm
from .encoders import Vocab, pad_token_batch, signal_forward, signal_to_input, text_forward, tokenize
from .errors import (
    CheckpointError,
    ConfigError,
    DivergenceError,
    NumericalError,
    ShapeError,
)

PROJECTION_DIM = 64  # d
INIT_LOG_TEMPERATURE = math.log(1 / 0.07)
MAX_LOG_TEMPERATURE = math.log(100.0)
MIN_LOG_TEMPERATURE = math.log(1e-4)


@dataclass
class SimilarityMatrix:
    values: np.ndarray
    temperature_used: float


@dataclass
class ContrastiveModel:
    params: dict  # name -> ndarray, includes both encoders, heads, log_temperature
    vocab: Vocab
    d: int = PROJECTION_DIM
    normalize: bool = True
    train_ids: tuple = ()

    @property
    def temperature(self):
        return float(np.exp(self.params["log_temperature"]))

    def fingerprint(self):
        return ckpt.container_crc(_model_records(self))


@dataclass
class TrainConfig:
    batch_size: int = 64
    epochs: int = 30
    lr: float = 1e-3
    lr_schedule: str = "constant"  # "constant" or "cosine" (decays to lr/100)
    token_dropout: float = 0.0  # train-time caption word dropout probability
    caption_dropout: float = 0.0  # prob. of training on a partial-attribute caption
    seed: int = 0
    d: int = PROJECTION_DIM
    normalize_embeddings: bool = True
    checkpoint_path: str = None


def _epoch_lr(config, epoch):
    if config.lr_schedule == "constant":
        return config.lr
    if config.lr_schedule == "cosine":
        if config.epochs <= 1:
            return config.lr
        warmup = min(2, config.epochs // 10)
        if epoch < warmup:
            return config.lr * (epoch + 1) / (warmup + 1)
        frac = (epoch - warmup) / max(config.epochs - 1 - warmup, 1)
        lo = config.lr / 100.0
        return lo + 0.5 * (config.lr - lo) * (1 + math.cos(math.pi * frac))
    raise ConfigError(f"unknown lr schedule {config.lr_schedule!r}")


@dataclass
class TrainLog:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = -1
    seed: int = 0


def init_model(vocab, seed, normalize=True):
    params = encoders.init_encoder_params(len(vocab), seed)
    rng = np.random.default_rng(seed + 1)

    def head(in_dim):
        bound = 1.0 / np.sqrt(in_dim)
        return rng.uniform(-bound, bound, size=(in_dim, PROJECTION_DIM)).astype(np.float32)

    params["proj.text.w"] = head(encoders.TEXT_DIM)
    params["proj.text.b"] = np.zeros(PROJECTION_DIM, dtype=np.float32)
    params["proj.sig.w"] = head(encoders.SIGNAL_DIM)
    params["proj.sig.b"] = np.zeros(PROJECTION_DIM, dtype=np.float32)
    params["log_temperature"] = np.array(INIT_LOG_TEMPERATURE, dtype=np.float32)
    return ContrastiveModel(params=params, vocab=vocab, normalize=normalize)


# ---------------------------------------------------------------------------
# value-level operations
# ---------------------------------------------------------------------------

def project(feature, weight, bias, normalize):
    """Affine projection of a single feature vector, optionally unit-norm."""
    feature = np.asarray(feature)
    if feature.shape != (weight.shape[0],):
        raise ShapeError("project", feature.shape, weight.shape)
    out = feature @ weight + bias
    if normalize:
        n = float(np.linalg.norm(out))
        if n > 1e-12:
            out = out / n
    return out


def similarity_matrix(e_t, e_s, tau):
    """C = tau * (E_t @ E_s.T); rows index text, columns index signals."""
    e_t, e_s = np.asarray(e_t), np.asarray(e_s)
    if e_t.shape != e_s.shape or e_t.ndim != 2:
        raise ShapeError("similarity_matrix", e_t.shape, e_s.shape)
    if tau <= 0:
        raise ConfigError("temperature must be positive")
    return SimilarityMatrix(values=tau * (e_t @ e_s.T), temperature_used=float(tau))


def clasp_loss(c):
    """0.5 * (text-axis + signal-axis cross entropy) of the diagonal."""
    values = c.values if isinstance(c, SimilarityMatrix) else np.asarray(c)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ShapeError("clasp_loss", values.shape)
    if not np.all(np.isfinite(values)):
        raise NumericalError("clasp_loss: non-finite similarity matrix")

    def axis_loss(m):
        mx = m.max(axis=1, keepdims=True)
        lse = mx[:, 0] + np.log(np.exp(m - mx).sum(axis=1))
        return float(np.mean(lse - np.diagonal(m)))

    return 0.5 * (axis_loss(values) + axis_loss(values.T))


# ---------------------------------------------------------------------------
# training graph
# ---------------------------------------------------------------------------

def _project_node(feat, nodes, prefix, normalize):
    out = nm.add_rowvec(nm.matmul(feat, nodes[f"{prefix}.w"]), nodes[f"{prefix}.b"])
    return nm.l2_normalize_rows(out) if normalize else out


def batch_loss_node(nodes, indices, mask, signals, normalize, fixed_tau=None):
    """Full forward graph for one batch; returns the scalar loss node."""
    e_t = _project_node(text_forward(indices, mask, nodes), nodes, "proj.text", normalize)
    e_s = _project_node(signal_forward(nm.constant(signals), nodes), nodes, "proj.sig", normalize)
    raw = nm.matmul(e_t, nm.transpose(e_s))
    tau = fixed_tau if fixed_tau is not None else nm.exp(nodes["log_temperature"])
    c = nm.mul_scalar(raw, tau)
    loss_t = nm.mul_scalar(nm.mean_all(nm.gather_diag(nm.log_softmax_rows(c))), -1.0)
    loss_s = nm.mul_scalar(nm.mean_all(nm.gather_diag(nm.log_softmax_rows(nm.transpose(c)))), -1.0)
    return nm.mul_scalar(nm.add(loss_t, loss_s), 0.5)


def _prepare(examples, vocab):
    signals = np.stack([signal_to_input(ex.signal) for ex in examples]).astype(np.float32)
    tokens = [tokenize(ex.caption.text, vocab) for ex in examples]
    return signals[:, None, :], tokens


def _subset_tokens(examples, vocab):
    """Tokenized captions for every proper nonempty attribute subset."""
    out = []
    for ex in examples:
        attrs = {}
        if ex.labels.trend != "flat":
            attrs["trend"] = ex.labels.trend
        if ex.labels.periodic != "none":
            attrs["periodic"] = ex.labels.periodic
        if ex.labels.fluctuation != "none":
            attrs["fluctuation"] = ex.labels.fluctuation
        variants = []
        names = sorted(attrs)
        for r in range(1, len(names)):
            for combo in itertools.combinations(names, r):
                triple = ds.ClassTriple(**{k: attrs[k] for k in combo})
                text = ds.render_caption(triple, ex.template_id).text
                variants.append(tokenize(text, vocab))
        out.append(variants)
    return out


def _batch_arrays(signals, tokens, batch_idx, dropout=0.0, rng=None, variants=None, caption_dropout=0.0):
    batch_tokens = [tokens[i] for i in batch_idx]
    if caption_dropout > 0.0 and rng is not None and variants is not None:
        # swap in a partial-attribute caption so that attribute-level queries
        # are in-distribution at retrieval time
        for j, i in enumerate(batch_idx):
            vs = variants[i]
            if vs and rng.random() < caption_dropout:
                batch_tokens[j] = vs[int(rng.integers(len(vs)))]
    if dropout > 0.0 and rng is not None:
        # word dropout: partial captions during training, so single-attribute
        # queries still land near the right signals at inference
        kept = []
        for toks in batch_tokens:
            keep = [t for t in toks if rng.random() >= dropout]
            kept.append(keep if keep else [toks[int(rng.integers(len(toks)))]])
        batch_tokens = kept
    idx, mask = pad_token_batch(batch_tokens)
    return idx, mask, signals[batch_idx]


def batch_loss_value(model, signals, tokens, batch_idx, fixed_tau=None):
    nodes = {k: nm.constant(v, name=k) for k, v in model.params.items()}
    idx, mask, sig = _batch_arrays(signals, tokens, batch_idx)
    return float(batch_loss_node(nodes, idx, mask, sig, model.normalize, fixed_tau).value)


def _mean_eval_loss(model, signals, tokens, batch_size):
    n = signals.shape[0]
    losses = []
    for start in range(0, n, batch_size):
        batch = np.arange(start, min(start + batch_size, n))
        if len(batch) < 2:
            continue
        losses.append(batch_loss_value(model, signals, tokens, batch))
    return float(np.mean(losses)) if losses else float("nan")


def train(model, train_examples, val_examples, config):
    """Jointly optimize all parameters; returns (best model, TrainLog)."""
    if not train_examples or not val_examples:
        raise ConfigError("train and val splits must be nonempty")
    if config.batch_size < 2 or config.batch_size > len(train_examples):
        raise ConfigError(
            f"batch_size {config.batch_size} invalid for {len(train_examples)} train examples"
        )

    model = replace(
        model,
        normalize=config.normalize_embeddings,
        train_ids=tuple(ex.signal.id for ex in train_examples),
    )
    tr_signals, tr_tokens = _prepare(train_examples, model.vocab)
    va_signals, va_tokens = _prepare(val_examples, model.vocab)
    tr_variants = (
        _subset_tokens(train_examples, model.vocab) if config.caption_dropout > 0.0 else None
    )

    rng = np.random.default_rng(config.seed)
    state = nm.AdamState(lr=config.lr)
    log = TrainLog(seed=config.seed)
    best = (float("inf"), None)
    params = dict(model.params)

    for epoch in range(config.epochs):
        state.lr = _epoch_lr(config, epoch)
        order = rng.permutation(len(train_examples))
        epoch_losses = []
        for start in range(0, len(order) - config.batch_size + 1, config.batch_size):
            batch = order[start : start + config.batch_size]
            nodes = {k: nm.parameter(v, name=k) for k, v in params.items()}
            idx, mask, sig = _batch_arrays(
                tr_signals,
                tr_tokens,
                batch,
                dropout=config.token_dropout,
                rng=rng,
                variants=tr_variants,
                caption_dropout=config.caption_dropout,
            )
            loss = batch_loss_node(nodes, idx, mask, sig, model.normalize)
            if not np.isfinite(loss.value):
                if best[1] is not None and config.checkpoint_path:
                    save_checkpoint(replace(model, params=best[1]), config.checkpoint_path)
                raise DivergenceError(f"loss diverged at epoch {epoch}")
            grads = nm.backward(loss, list(nodes.values()))
            params = nm.adam_step(params, {n.name: grads[n] for n in nodes.values()}, state)
            params["log_temperature"] = np.clip(
                params["log_temperature"], MIN_LOG_TEMPERATURE, MAX_LOG_TEMPERATURE
            )
            epoch_losses.append(float(loss.value))

        model = replace(model, params=params)
        val_loss = _mean_eval_loss(model, va_signals, va_tokens, config.batch_size)
        log.train_loss.append(float(np.mean(epoch_losses)))
        log.val_loss.append(val_loss)
        if val_loss < best[0]:
            best = (val_loss, {k: v.copy() for k, v in params.items()})
            log.best_epoch = epoch
            if config.checkpoint_path:
                save_checkpoint(replace(model, params=best[1]), config.checkpoint_path)

    best_params = best[1] if best[1] is not None else params
    return replace(model, params=best_params), log


# ---------------------------------------------------------------------------
# checkpoint round trip
# ---------------------------------------------------------------------------

def _model_records(model):
    meta = {
        "schema": "clasp-model",
        "d": model.d,
        "normalize": model.normalize,
        "train_ids": list(model.train_ids),
        "vocab_min_count": model.vocab.min_count,
    }
    records = [("__meta__", json.dumps(meta, sort_keys=True).encode("utf-8"))]
    records.append(("__vocab__", "\n".join(model.vocab.tokens).encode("utf-8")))
    records.extend((name, model.params[name]) for name in sorted(model.params))
    return records


def save_checkpoint(model, path):
    return ckpt.write_container(path, _model_records(model))


def load_checkpoint(path):
    records, _crc = ckpt.read_container(path)
    try:
        meta = json.loads(records.pop("__meta__").decode("utf-8"))
        vocab = Vocab(
            tokens=records.pop("__vocab__").decode("utf-8").split("\n"),
            min_count=meta["vocab_min_count"],
        )
    except (KeyError, json.JSONDecodeError) as e:
        raise CheckpointError(f"missing or corrupt model metadata: {e}") from e
    if meta.get("schema") != "clasp-model":
        raise CheckpointError("container does not hold a model")
    return ContrastiveModel(
        params=dict(records),
        vocab=vocab,
        d=meta["d"],
        normalize=meta["normalize"],
        train_ids=tuple(meta["train_ids"]),
    )
