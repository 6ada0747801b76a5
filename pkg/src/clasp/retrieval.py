"""Exact brute-force cross-modal retrieval over a frozen model.

An index stores unit-norm embeddings for every candidate of one modality;
queries from the other modality are ranked by cosine similarity with ties
broken by ascending item id, so results are fully deterministic.
"""

from dataclasses import dataclass

import numpy as np

from . import checkpoint as ckpt
from . import numerics as nm
from .checkpoint import read_container, write_container
from .contrastive import ContrastiveModel  # noqa: F401  (type of `model` below)
from .encoders import pad_token_batch, signal_forward, signal_to_input, text_forward, tokenize
from .errors import CheckpointError, ContractError, IndexError_, ModalityError, StaleIndexError

MODALITIES = ("signal", "text")


@dataclass
class EmbeddingIndex:
    ids: list
    embeddings: np.ndarray  # (M, d), rows unit-norm
    modality: str
    fingerprint: int

    def __len__(self):
        return len(self.ids)


@dataclass
class RetrievalResult:
    query: str
    ranked: list  # [(item_id, cosine score)], scores non-increasing


def cosine(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractError(f"cosine: shapes {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        return 0.0
    return float(a @ b / (na * nb))


def _normalize_rows(m):
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    return m / np.maximum(norms, 1e-12)


def _embed_signals(series_list, model, batch=256):
    nodes = {k: nm.constant(v) for k, v in model.params.items()}
    out = []
    for start in range(0, len(series_list), batch):
        chunk = series_list[start : start + batch]
        x = np.stack([signal_to_input(s) for s in chunk]).astype(np.float32)[:, None, :]
        feats = signal_forward(nm.constant(x), nodes).value
        out.append(feats @ model.params["proj.sig.w"] + model.params["proj.sig.b"])
    return _normalize_rows(np.concatenate(out).astype(np.float64))


def _embed_texts(texts, model, batch=256):
    nodes = {k: nm.constant(v) for k, v in model.params.items()}
    out = []
    for start in range(0, len(texts), batch):
        chunk = texts[start : start + batch]
        idx, mask = pad_token_batch([tokenize(t, model.vocab) for t in chunk])
        feats = text_forward(idx, mask, nodes).value
        out.append(feats @ model.params["proj.text.w"] + model.params["proj.text.b"])
    return _normalize_rows(np.concatenate(out).astype(np.float64))


def build_index(items, model, modality):
    """Embed every item with the frozen model; items are SignalSeries or Caption."""
    if modality not in MODALITIES:
        raise ModalityError(f"unknown modality {modality!r}")
    if not items:
        raise IndexError_("cannot build an index from zero items")
    if modality == "signal":
        emb = _embed_signals(items, model)
    else:
        emb = _embed_texts([c.text for c in items], model)
    return EmbeddingIndex(
        ids=[it.id for it in items],
        embeddings=emb,
        modality=modality,
        fingerprint=model.fingerprint(),
    )


def _rank(query_vec, index, k, query_echo):
    q = np.asarray(query_vec, dtype=np.float64)
    q = q / max(np.linalg.norm(q), 1e-12)
    scores = index.embeddings @ q
    order = sorted(range(len(index)), key=lambda i: (-scores[i], index.ids[i]))
    top = order[: min(k, len(index))]
    return RetrievalResult(query=query_echo, ranked=[(index.ids[i], float(scores[i])) for i in top])


def _check(index, model, expected_modality, k):
    if k < 1:
        raise ContractError("k must be >= 1")
    if index.modality != expected_modality:
        raise ModalityError(f"index holds {index.modality!r}, expected {expected_modality!r}")
    if index.fingerprint != model.fingerprint():
        raise StaleIndexError("index was built with a different model; rebuild it")


def query_by_text(text, index, model, k):
    """Rank candidate signals for a natural-language query."""
    _check(index, model, "signal", k)
    return _rank(_embed_texts([text], model)[0], index, k, text)


def query_by_signal(series, index, model, k):
    """Rank candidate captions for a signal query."""
    _check(index, model, "text", k)
    return _rank(_embed_signals([series], model)[0], index, k, series.id)


def save_index(index, path):
    records = [
        ("ids", "\n".join(index.ids).encode("utf-8")),
        ("embeddings", index.embeddings.astype(np.float64)),
        ("modality", index.modality.encode("utf-8")),
        ("fingerprint", np.array(index.fingerprint, dtype=np.int64)),
    ]
    return write_container(path, records)


def load_index(path):
    records, _crc = read_container(path)
    try:
        return EmbeddingIndex(
            ids=records["ids"].decode("utf-8").split("\n"),
            embeddings=np.asarray(records["embeddings"], dtype=np.float64),
            modality=records["modality"].decode("utf-8"),
            fingerprint=int(records["fingerprint"]),
        )
    except KeyError as e:
        raise CheckpointError(f"container does not hold an index: missing {e}") from e
