"""mAP@10 evaluation: class-label and TF-IDF relevance oracles over the four
class-query variants (full SUSHI-style caption, 9-word caption, template
sentence, bare label).

The retrieval side only ever sees the test signals; captions and labels are
used by the oracles alone.
"""

import csv
import json
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import dataset as ds
from . import retrieval
from .errors import ContractError, LeakageError

DEFAULT_K = 10
QUERY_VARIANTS = ("sushi_caption", "nine_word_caption", "template_sentence", "label_only")
_VARIANT_TEMPLATE = {"sushi_caption": 0, "nine_word_caption": 1, "template_sentence": 2, "label_only": 3}

_CATEGORY_POOLS = (
    ("trend", ds.TREND_PHRASES),
    ("periodic", ds.PERIODIC_PHRASES),
    ("fluctuation", ds.FLUCT_PHRASES),
)


def average_precision_at_k(ranked_ids, relevant, k=DEFAULT_K):
    """Standard AP@k with min(|relevant|, k) normalization."""
    if k < 1:
        raise ContractError("k must be >= 1")
    if len(set(ranked_ids)) != len(ranked_ids):
        raise ContractError("ranked ids contain duplicates")
    relevant = set(relevant)
    if not relevant:
        return 0.0
    hits, total = 0, 0.0
    for i, item in enumerate(ranked_ids[:k], start=1):
        if item in relevant:
            hits += 1
            total += hits / i
    return total / min(len(relevant), k)


# ---------------------------------------------------------------------------
# TF-IDF relevance oracle
# ---------------------------------------------------------------------------

@dataclass
class TfidfStats:
    """Document frequencies over the full test caption set."""

    df: dict
    n_docs: int

    @classmethod
    def from_captions(cls, captions):
        df = Counter()
        for cap in captions:
            df.update(set(_terms(cap.text)))
        return cls(df=dict(df), n_docs=len(captions))

    def idf(self, term):
        # smoothed, sklearn-style
        return math.log((1 + self.n_docs) / (1 + self.df.get(term, 0))) + 1.0


def _terms(text):
    return [t for t in "".join(c if c.isalnum() else " " for c in text.lower()).split() if t]


def tfidf_vector(text, stats):
    counts = Counter(_terms(text))
    vec = {t: (1 + math.log(c)) * stats.idf(t) for t, c in counts.items()}
    norm = math.sqrt(sum(v * v for v in vec.values()))
    if norm < 1e-12:
        return {}
    return {t: v / norm for t, v in vec.items()}


def tfidf_cosine(a, b, stats):
    va, vb = tfidf_vector(a, stats), tfidf_vector(b, stats)
    return sum(v * vb.get(t, 0.0) for t, v in va.items())


def tfidf_relevance(query, caption, stats, ts):
    """True when the log-tf/smoothed-idf cosine exceeds ts; empty text is False."""
    if not _terms(query) or not _terms(caption):
        return False
    return tfidf_cosine(query, caption, stats) > ts


# ---------------------------------------------------------------------------
# query construction
# ---------------------------------------------------------------------------

def make_class_queries(variant, template_id=None):
    """One (query text, category, class value) per non-null class value."""
    if template_id is None:
        if variant not in _VARIANT_TEMPLATE:
            raise ContractError(f"unknown query variant {variant!r}")
        template_id = _VARIANT_TEMPLATE[variant]
    out = []
    for category, pool in _CATEGORY_POOLS:
        for value in pool:
            triple = ds.ClassTriple(**{category: value})
            text = ds.render_caption(triple, template_id).text
            out.append((text, category, value))
    return out


# ---------------------------------------------------------------------------
# evaluation run
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    k: int
    ts_values: tuple
    seed: int
    entries: dict = field(default_factory=dict)  # (oracle, variant) -> {"map", "per_query"}

    def map_at_k(self, oracle, variant):
        return self.entries[(oracle, variant)]["map"]

    def to_json(self):
        payload = {
            "k": self.k,
            "ts_values": list(self.ts_values),
            "seed": self.seed,
            "results": [
                {
                    "oracle": oracle,
                    "variant": variant,
                    "map": entry["map"],
                    "per_query": entry["per_query"],
                }
                for (oracle, variant), entry in sorted(self.entries.items())
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["query", "variant", "oracle", "ap"])
            for (oracle, variant), entry in sorted(self.entries.items()):
                for row in entry["per_query"]:
                    writer.writerow([row["query"], variant, oracle, f"{row['ap']:.6f}"])


def _class_relevant(test_examples, category, value):
    return {ex.signal.id for ex in test_examples if getattr(ex.labels, category) == value}


def _tfidf_relevant(query, test_examples, stats, ts):
    return {
        ex.signal.id
        for ex in test_examples
        if tfidf_relevance(query, ex.caption.text, stats, ts)
    }


def run_eval(model, test_examples, variants=QUERY_VARIANTS, ts_values=(0.5, 0.8), k=DEFAULT_K):
    """Evaluate retrieval over the test split; the index sees signals only."""
    test_ids = {ex.signal.id for ex in test_examples}
    leaked = test_ids & set(model.train_ids)
    if leaked:
        raise LeakageError(f"{len(leaked)} test ids appear in the training set")

    index = retrieval.build_index([ex.signal for ex in test_examples], model, "signal")
    stats = TfidfStats.from_captions([ex.caption for ex in test_examples])
    report = EvalReport(k=k, ts_values=tuple(ts_values), seed=0)

    oracles = [("class_label", None)] + [(f"tfidf_ts{ts}", ts) for ts in ts_values]
    for variant in variants:
        queries = make_class_queries(variant)
        rankings = {}
        for query, category, value in queries:
            result = retrieval.query_by_text(query, index, model, k)
            rankings[query] = [item_id for item_id, _score in result.ranked]
        for oracle_name, ts in oracles:
            per_query = []
            for query, category, value in queries:
                if ts is None:
                    relevant = _class_relevant(test_examples, category, value)
                else:
                    relevant = _tfidf_relevant(query, test_examples, stats, ts)
                if not relevant:
                    warnings.warn(f"no relevant items for query {query!r}", stacklevel=2)
                ap = average_precision_at_k(rankings[query], relevant, k)
                per_query.append({"query": query, "category": category, "value": value, "ap": ap})
            report.entries[(oracle_name, variant)] = {
                "map": float(np.mean([r["ap"] for r in per_query])),
                "per_query": per_query,
            }
    return report


def category_map(report, oracle, variant, categories):
    """Mean AP restricted to queries from the given label categories."""
    rows = [
        r
        for r in report.entries[(oracle, variant)]["per_query"]
        if r["category"] in categories
    ]
    return float(np.mean([r["ap"] for r in rows]))


def template_map(model, test_examples, template_id, k=DEFAULT_K):
    """Class-label-oracle mAP@k for class queries rendered from one template."""
    index = retrieval.build_index([ex.signal for ex in test_examples], model, "signal")
    aps = []
    for query, category, value in make_class_queries(None, template_id=template_id):
        result = retrieval.query_by_text(query, index, model, k)
        relevant = _class_relevant(test_examples, category, value)
        aps.append(average_precision_at_k([i for i, _ in result.ranked], relevant, k))
    return float(np.mean(aps))
