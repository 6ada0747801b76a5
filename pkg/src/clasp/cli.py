"""Command-line interface: gen -> train -> index -> search -> eval -> serve.

Option precedence: explicit flags > CLASP_* environment variables > JSON
config file (--config) > built-in defaults. Every run prints its resolved
configuration. Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

import json
import os
import sys

import click

from . import contrastive, dataset, encoders, evaluation, retrieval
from .errors import ClaspError

ENV_PREFIX = "CLASP_"


def _resolve(name, flag_value, file_config, default, cast):
    if flag_value is not None:
        return flag_value
    env = os.environ.get(ENV_PREFIX + name.upper())
    if env is not None:
        return cast(env)
    if name in file_config:
        return cast(file_config[name])
    return default


def _load_config_file(path):
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _print_config(command, resolved):
    click.echo(f"[{command}] config: " + json.dumps(resolved, sort_keys=True))


def _fail(err):
    click.echo(f"error: {err}", err=True)
    sys.exit(1)


@click.group()
def main():
    """Contrastive signal-language retrieval toolkit."""


@main.command()
@click.option("--size", type=int, default=None)
@click.option("--length", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def gen(size, length, seed, out_path, config_path):
    """Generate a synthetic corpus and write it as JSONL."""
    cfg = _load_config_file(config_path)
    resolved = {
        "size": _resolve("size", size, cfg, 1000, int),
        "length": _resolve("length", length, cfg, 2048, int),
        "seed": _resolve("seed", seed, cfg, 0, int),
        "out": out_path,
    }
    _print_config("gen", resolved)
    try:
        gen_cfg = dataset.GeneratorConfig(size=resolved["size"], length=resolved["length"])
        examples = dataset.generate_dataset(gen_cfg, resolved["seed"])
        dataset.save_jsonl(examples, out_path)
    except ClaspError as e:
        _fail(e)
    click.echo(f"wrote {len(examples)} examples to {out_path}")


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--epochs", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--lr", type=float, default=None)
@click.option("--lr-schedule", type=click.Choice(["constant", "cosine"]), default=None)
@click.option("--caption-dropout", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def train(data_path, epochs, batch_size, lr, lr_schedule, caption_dropout, seed, out_path, config_path):
    """Train a contrastive model on a JSONL corpus."""
    cfg = _load_config_file(config_path)
    resolved = {
        "data": data_path,
        "epochs": _resolve("epochs", epochs, cfg, 30, int),
        "batch_size": _resolve("batch_size", batch_size, cfg, 32, int),
        "lr": _resolve("lr", lr, cfg, 3e-3, float),
        "lr_schedule": _resolve("lr_schedule", lr_schedule, cfg, "cosine", str),
        "caption_dropout": _resolve("caption_dropout", caption_dropout, cfg, 0.65, float),
        "seed": _resolve("seed", seed, cfg, 0, int),
        "out": out_path,
    }
    _print_config("train", resolved)
    try:
        corpus = dataset.load_jsonl(data_path)
        split = dataset.split_dataset(corpus, resolved["seed"])
        vocab = encoders.build_vocab([ex.caption for ex in split.train], min_count=1)
        model = contrastive.init_model(vocab, resolved["seed"])
        train_cfg = contrastive.TrainConfig(
            batch_size=min(resolved["batch_size"], len(split.train)),
            epochs=resolved["epochs"],
            lr=resolved["lr"],
            lr_schedule=resolved["lr_schedule"],
            caption_dropout=resolved["caption_dropout"],
            seed=resolved["seed"],
            checkpoint_path=out_path,
        )
        model, log = contrastive.train(model, split.train, split.val, train_cfg)
        contrastive.save_checkpoint(model, out_path)
    except ClaspError as e:
        _fail(e)
    click.echo(
        f"trained {resolved['epochs']} epochs; best val loss "
        f"{min(log.val_loss):.4f} at epoch {log.best_epoch}; saved to {out_path}"
    )


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--modality", type=click.Choice(["signal", "text"]), default="signal")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def index(model_path, data_path, modality, out_path):
    """Build and persist an embedding index for one modality."""
    _print_config("index", {"model": model_path, "data": data_path, "modality": modality, "out": out_path})
    try:
        model = contrastive.load_checkpoint(model_path)
        corpus = dataset.load_jsonl(data_path)
        items = [ex.signal for ex in corpus] if modality == "signal" else [ex.caption for ex in corpus]
        idx = retrieval.build_index(items, model, modality)
        retrieval.save_index(idx, out_path)
    except ClaspError as e:
        _fail(e)
    click.echo(f"indexed {len(idx)} {modality} items to {out_path}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--query", required=True)
@click.option("--k", type=int, default=10)
def search(model_path, index_path, query, k):
    """Run one text query against a signal index."""
    _print_config("search", {"model": model_path, "index": index_path, "query": query, "k": k})
    try:
        model = contrastive.load_checkpoint(model_path)
        idx = retrieval.load_index(index_path)
        result = retrieval.query_by_text(query, idx, model, k)
    except ClaspError as e:
        _fail(e)
    for rank, (item_id, score) in enumerate(result.ranked, start=1):
        click.echo(f"{rank:3d}. {item_id}  {score:+.4f}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=None)
def eval(model_path, data_path, report_path, csv_path, seed):
    """Evaluate mAP@10 on the test split of a corpus."""
    resolved = {
        "model": model_path,
        "data": data_path,
        "report": report_path,
        "seed": _resolve("seed", seed, {}, 0, int),
    }
    _print_config("eval", resolved)
    try:
        model = contrastive.load_checkpoint(model_path)
        corpus = dataset.load_jsonl(data_path)
        split = dataset.split_dataset(corpus, resolved["seed"])
        report = evaluation.run_eval(model, split.test)
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        if csv_path:
            report.write_csv(csv_path)
    except ClaspError as e:
        _fail(e)
    for (oracle, variant), entry in sorted(report.entries.items()):
        click.echo(f"mAP@{report.k} {oracle:14s} {variant:18s} {entry['map']:.4f}")
    click.echo(f"report written to {report_path}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--bind", default=None, help="host:port")
@click.option("--static-dir", type=click.Path(exists=True, file_okay=False))
def serve(model_path, index_path, data_path, bind, static_dir):
    """Serve the search API (and the web UI bundle, when built)."""
    import uvicorn

    from .server import create_app

    bind = _resolve("bind", bind, {}, "127.0.0.1:8000", str)
    _print_config(
        "serve",
        {"model": model_path, "index": index_path, "data": data_path, "bind": bind, "static_dir": static_dir},
    )
    try:
        model = contrastive.load_checkpoint(model_path)
        idx = retrieval.load_index(index_path)
        corpus = dataset.load_jsonl(data_path)
        app = create_app(model, idx, corpus, static_dir=static_dir)
    except ClaspError as e:
        _fail(e)
    host, _, port = bind.partition(":")
    uvicorn.run(app, host=host, port=int(port or 8000))


if __name__ == "__main__":
    main()
