"""Single entry point for the whole pipeline.

Subcommands: extract, build-kb, sample-audit, build-corpus, train,
eval-zeroshot, report, gradcheck, selftest, validate.

Exit codes: 0 success, 1 validation error (bad inputs/flags), 2 runtime
error. Errors go to stderr as one JSON record per failure. Every command
that draws randomness requires an explicit ``--seed`` (or a ``seed`` entry
in the config file) and prints the effective seed it ran with, so any output
can be reproduced byte-for-byte.

Config precedence: command-line flags > ``--config`` file (flat
``key = value`` lines) > built-in defaults.
"""

from __future__ import annotations

import functools
import json
import math
import sys
import warnings
from pathlib import Path

import click
import numpy as np

from . import __version__
from .assembly import AssemblyConfig, Vocabulary, build_corpus
from .concepts import build_knowledge_base, extract_category, extract_concept_name
from .errors import KnowvlError, NoNounFound, ValidationError
from .formats import (
    config_hash,
    read_corpus,
    read_detections,
    read_embedding_table,
    read_knowledge_base,
    read_parse_file,
    read_records,
    write_corpus,
    write_knowledge_base,
)
from .model import ModelConfig, finite_difference_check, load_checkpoint
from .sampling import SamplerConfig
from .training import TrainRunConfig, model_config_for_corpus, report as run_report, train as run_train
from .zeroshot import read_zero_shot_task, zero_shot_classify


def _error_record(exc: Exception) -> dict:
    kind = exc.kind if isinstance(exc, KnowvlError) else type(exc).__name__
    return {"error": kind, "message": str(exc)}


def pipeline_command(fn):
    """Translate pipeline exceptions into exit codes + stderr records."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except KnowvlError as exc:
            click.echo(json.dumps(_error_record(exc)), err=True)
            sys.exit(exc.exit_code)
        except (OSError, json.JSONDecodeError) as exc:
            click.echo(json.dumps(_error_record(exc)), err=True)
            sys.exit(2)

    return wrapper


def load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    cfg: dict[str, object] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{path} line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        for cast in (int, float):
            try:
                cfg[key] = cast(value)
                break
            except ValueError:
                continue
        else:
            cfg[key] = value
    return cfg


def pick(flag, cfg: dict, key: str, default):
    if flag is not None:
        return flag
    if key in cfg:
        return cfg[key]
    return default


def require_seed(seed, cfg: dict):
    seed = pick(seed, cfg, "seed", None)
    if seed is None:
        click.echo(json.dumps({
            "error": "MissingSeed",
            "message": "this command samples; pass --seed (or set seed in --config)",
        }), err=True)
        sys.exit(1)
    return int(seed)


config_option = click.option("--config", "config_path", type=click.Path(exists=True),
                             default=None, help="Flat key=value config file.")


@click.group()
@click.version_option(version=__version__, prog_name="knowvl")
@click.option("--log-level", default="warning", show_default=True,
              type=click.Choice(["debug", "info", "warning", "error"]),
              help="Logging threshold for pipeline diagnostics.")
def main(log_level: str) -> None:
    """Knowledge-grounded vision-language pre-training pipeline."""
    import logging

    logging.basicConfig(level=getattr(logging, log_level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")


# ---------------------------------------------------------------------------
# extract / build-kb
# ---------------------------------------------------------------------------

@main.command()
@click.option("--parses", "parses_path", required=True, type=click.Path(exists=True),
              help="Parse file to extract phrases from.")
@click.option("--kind", type=click.Choice(["concept", "category"]), default="concept",
              show_default=True)
@click.option("--out", "out_path", default="-", show_default=True,
              help="Output JSONL of phrase records ('-' for stdout).")
@pipeline_command
def extract(parses_path: str, kind: str, out_path: str) -> None:
    """Extract head-noun phrases from every sentence of a parse file."""
    extractor = extract_concept_name if kind == "concept" else extract_category
    sentences = read_parse_file(parses_path)
    out = sys.stdout if out_path == "-" else open(out_path, "w", encoding="utf-8")
    failures = 0
    try:
        for sid, tokens in sentences:
            try:
                phrase = extractor(tokens)
            except NoNounFound as exc:
                failures += 1
                click.echo(json.dumps({"error": "NoNounFound", "sentence_id": sid,
                                       "message": str(exc)}), err=True)
                continue
            out.write(json.dumps({
                "sentence_id": sid,
                "phrase": phrase.text,
                "head_index": phrase.head_index,
                "modifier_indices": list(phrase.modifier_indices),
            }, sort_keys=True) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    click.echo(json.dumps({"sentences": len(sentences), "failed": failures}), err=True)


@main.command("build-kb")
@click.option("--pages", "pages_path", required=True, type=click.Path(exists=True),
              help="JSONL of {name, text} page records.")
@click.option("--parses", "parses_path", required=True, type=click.Path(exists=True),
              help="Parse file of first sentences, sentence_id = page name.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--knowledge-budget", type=int, default=40, show_default=True,
              help="Token budget for stored knowledge text.")
@pipeline_command
def build_kb(pages_path: str, parses_path: str, out_path: str,
             knowledge_budget: int) -> None:
    """Mine category phrases from definition-sentence parses and emit the
    knowledge base."""
    parses = dict(read_parse_file(parses_path))
    pages = []
    with open(pages_path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            d = json.loads(raw)
            if "name" not in d or "text" not in d:
                raise ValidationError(f"{pages_path} line {lineno}: need name and text")
            if d["name"] not in parses:
                raise ValidationError(
                    f"{pages_path} line {lineno}: no parse with sentence_id "
                    f"{d['name']!r}"
                )
            pages.append((d["name"], parses[d["name"]], d["text"]))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        concepts = build_knowledge_base(pages, knowledge_token_budget=knowledge_budget)
    for w in caught:
        click.echo(json.dumps({"warning": str(w.message)}), err=True)
    write_knowledge_base(out_path, concepts)
    click.echo(json.dumps({"pages": len(pages), "concepts": len(concepts),
                           "out": out_path}))


# ---------------------------------------------------------------------------
# sample-audit / build-corpus
# ---------------------------------------------------------------------------

def _corpus_inputs(records_path, kb_path, embeddings_path, concepts_path=None):
    records = read_records(records_path)
    kb = read_knowledge_base(kb_path)
    table = read_embedding_table(embeddings_path)
    if concepts_path:
        phrases = {}
        with open(concepts_path, "r", encoding="utf-8") as fh:
            for raw in fh:
                if raw.strip():
                    d = json.loads(raw)
                    phrases[d["sentence_id"]] = d["phrase"]
        for rec in records:
            if rec.concept_name is None and rec.image_id in phrases:
                rec.concept_name = phrases[rec.image_id]
    return records, kb, table


def _assembly_options(fn):
    for opt in reversed([
        click.option("--mlm-rate", type=float, default=None),
        click.option("--max-text-tokens", type=int, default=None),
        click.option("--max-objects", type=int, default=None),
        click.option("--tau", type=float, default=None),
        click.option("--candidates", "ikm_candidates", type=int, default=None,
                     help="Candidate draw size for hardest-negative knowledge."),
        click.option("--sample-images", type=int, default=None,
                     help="Images drawn per replacement-donor search."),
        click.option("--top-k", "top_k", type=int, default=None,
                     help="Area cutoff for concept locating."),
    ]):
        fn = opt(fn)
    return fn


def _make_configs(cfg: dict, seed: int, mlm_rate, max_text_tokens, max_objects,
                  tau, ikm_candidates, sample_images, top_k):
    assembly = AssemblyConfig(
        mlm_rate=pick(mlm_rate, cfg, "mlm_rate", 0.15),
        max_text_tokens=pick(max_text_tokens, cfg, "max_text_tokens", 70),
        max_objects=pick(max_objects, cfg, "max_objects", 50),
        rng_seed=seed,
    )
    sampler = SamplerConfig(
        tau=pick(tau, cfg, "tau", 0.3),
        ikm_candidate_count=pick(ikm_candidates, cfg, "ikm_candidate_count", 200),
        iec_sample_images=pick(sample_images, cfg, "iec_sample_images", 20),
        top_k_objects=pick(top_k, cfg, "top_k_objects", 10),
        rng_seed=seed,
    )
    return assembly, sampler


@main.command("sample-audit")
@click.option("--records", "records_path", required=True, type=click.Path(exists=True))
@click.option("--kb", "kb_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", "embeddings_path", required=True,
              type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@config_option
@_assembly_options
@pipeline_command
def sample_audit(records_path, kb_path, embeddings_path, seed, out_path,
                 config_path, **knobs) -> None:
    """Dump per-record sampler decisions (located object, drawn candidates,
    chosen negatives and donors) for inspection."""
    cfg = load_config_file(config_path)
    seed = require_seed(seed, cfg)
    records, kb, table = _corpus_inputs(records_path, kb_path, embeddings_path)
    assembly_cfg, sampler_cfg = _make_configs(cfg, seed, **knobs)
    result = build_corpus(records, kb, assembly_cfg, sampler_cfg, table, seed,
                          collect_audits=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for entry in result.audits:
            fh.write(json.dumps(entry, sort_keys=True, default=str) + "\n")
    click.echo(json.dumps({
        "effective_seed": seed,
        "records": len(records),
        "audited": len(result.audits),
        "failures": len(result.failures),
        "out": out_path,
    }, sort_keys=True))


@main.command("build-corpus")
@click.option("--records", "records_path", required=True, type=click.Path(exists=True))
@click.option("--kb", "kb_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", "embeddings_path", required=True,
              type=click.Path(exists=True))
@click.option("--concepts", "concepts_path", type=click.Path(exists=True), default=None,
              help="Phrase records from `extract`; fills missing concept names "
                   "by image id.")
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--threads", type=int, default=1, show_default=True,
              help="Shard count for parallel assembly; changing it changes "
                   "the draw streams, so keep it fixed for reproducibility.")
@config_option
@_assembly_options
@pipeline_command
def build_corpus_cmd(records_path, kb_path, embeddings_path, concepts_path, seed,
                     out_path, threads, config_path, **knobs) -> None:
    """Assemble the labeled pre-training corpus from records + knowledge base."""
    cfg = load_config_file(config_path)
    seed = require_seed(seed, cfg)
    records, kb, table = _corpus_inputs(records_path, kb_path, embeddings_path,
                                        concepts_path)
    assembly_cfg, sampler_cfg = _make_configs(cfg, seed, **knobs)
    result = build_corpus(records, kb, assembly_cfg, sampler_cfg, table, seed,
                          shards=threads)
    write_corpus(out_path, result.examples, result.manifest)
    for failure in result.failures:
        click.echo(json.dumps({"warning": "record skipped",
                               "image_id": failure.image_id,
                               "reason": failure.reason}), err=True)
    click.echo(json.dumps({
        "effective_seed": seed,
        "config_hash": result.manifest.config_hash,
        "examples": len(result.examples),
        "failures": len(result.failures),
        "itm_counts": list(result.manifest.itm_counts),
        "ikm_counts": list(result.manifest.ikm_counts),
        "iec_counts": list(result.manifest.iec_counts),
        "out": out_path,
    }, sort_keys=True))


# ---------------------------------------------------------------------------
# train / eval-zeroshot / report
# ---------------------------------------------------------------------------

@main.command("train")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", default="run", show_default=True)
@click.option("--steps", type=int, default=None, help="default 2000")
@click.option("--batch-size", type=int, default=None, help="default 8")
@click.option("--lr", type=float, default=None, help="default 1e-4")
@click.option("--hidden", type=int, default=None, help="default 64")
@click.option("--layers", type=int, default=None, help="default 2")
@click.option("--heads", type=int, default=None, help="default 4")
@click.option("--ffn", type=int, default=None, help="default 256")
@click.option("--dropout", type=float, default=None, help="default 0.0")
@click.option("--checkpoint-interval", type=int, default=None, help="default 500")
@config_option
@pipeline_command
def train_cmd(corpus_path, seed, out_dir, steps, batch_size, lr, hidden, layers,
              heads, ffn, dropout, checkpoint_interval, config_path) -> None:
    """Pre-train the micro-transformer on a corpus file."""
    cfg = load_config_file(config_path)
    seed = require_seed(seed, cfg)
    run_cfg = TrainRunConfig(
        corpus_path=corpus_path,
        batch_size=pick(batch_size, cfg, "batch_size", 8),
        max_steps=pick(steps, cfg, "max_steps", 2000),
        learning_rate=pick(lr, cfg, "learning_rate", 1e-4),
        seed=seed,
        checkpoint_interval=pick(checkpoint_interval, cfg, "checkpoint_interval", 500),
        output_dir=out_dir,
    )
    manifest, examples = read_corpus(corpus_path)
    model_cfg = model_config_for_corpus(
        manifest,
        hidden=pick(hidden, cfg, "hidden", 64),
        layers=pick(layers, cfg, "layers", 2),
        heads=pick(heads, cfg, "heads", 4),
        ffn=pick(ffn, cfg, "ffn", 256),
        dropout=pick(dropout, cfg, "dropout", 0.0),
    )
    result = run_train(run_cfg, model_cfg, corpus=(manifest, examples))
    click.echo(json.dumps({
        "effective_seed": seed,
        "steps": result.steps,
        "final_loss": result.final_loss.to_json_dict(),
        "wall_seconds": round(result.wall_seconds, 3),
        "checkpoint": str(result.checkpoint_path),
        "metrics": str(result.metrics_path),
    }, sort_keys=True))


@main.command("eval-zeroshot")
@click.option("--checkpoint", "checkpoint_path", required=True,
              type=click.Path(exists=True))
@click.option("--task", "task_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None, type=click.Path())
@pipeline_command
def eval_zeroshot(checkpoint_path, task_path, out_path) -> None:
    """Classify task items by matching-head probability over the classes."""
    params, extras = load_checkpoint(checkpoint_path)
    vocab = Vocabulary(list(extras["vocab_tokens"]))
    assembly = extras.get("assembly", {})
    cfg = AssemblyConfig(
        max_text_tokens=assembly.get("max_text_tokens", 70),
        max_objects=assembly.get("max_objects", 50),
    )
    task = read_zero_shot_task(task_path)
    result = zero_shot_classify(params, task, vocab, cfg)
    if out_path:
        Path(out_path).write_text(json.dumps(result.to_json_dict(), sort_keys=True))
    click.echo(json.dumps({
        "items": len(task.items),
        "classes": len(task.classes),
        "accuracy": result.accuracy,
        "out": out_path,
    }, sort_keys=True))


@main.command("report")
@click.option("--metrics", "metrics_path", required=True, type=click.Path(exists=True))
@click.option("--run-meta", "run_meta_path", type=click.Path(exists=True), default=None)
@click.option("--eval", "eval_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@pipeline_command
def report_cmd(metrics_path, run_meta_path, eval_path, out_dir) -> None:
    """Summarize a metrics log (and optionally realized ratios + accuracy)."""
    summary = run_report(metrics_path, run_meta_path=run_meta_path,
                         eval_path=eval_path, out_dir=out_dir)
    click.echo(summary.table)


# ---------------------------------------------------------------------------
# gradcheck / selftest / validate
# ---------------------------------------------------------------------------

@main.command("gradcheck")
@click.option("--hidden", type=int, default=8, show_default=True)
@click.option("--layers", type=int, default=1, show_default=True)
@click.option("--heads", type=int, default=2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tolerance", type=float, default=1e-4, show_default=True)
@pipeline_command
def gradcheck(hidden, layers, heads, seed, tolerance) -> None:
    """Verify analytic gradients against central finite differences."""
    config = ModelConfig(hidden=hidden, layers=layers, heads=heads,
                         ffn=4 * hidden, vocab_size=24, visual_in=10,
                         max_positions=24, dropout=0.0, dtype="float64")
    errors = finite_difference_check(config, seed)
    worst = max(errors.values())
    click.echo(json.dumps({
        "effective_seed": seed,
        "max_relative_error": worst,
        "worst_block": max(errors, key=errors.get),
        "tolerance": tolerance,
    }, sort_keys=True))
    if not worst < tolerance:
        click.echo(json.dumps({"error": "GradCheckFailed",
                               "message": f"max relative error {worst:.3e}"}),
                   err=True)
        sys.exit(1)


@main.command("selftest")
@click.option("--seed", type=int, default=0, show_default=True)
@pipeline_command
def selftest(seed) -> None:
    """Run the embedded oracle suite: analytic losses, cosine laws,
    round-trips, a tiny gradient check."""
    import tempfile

    from .embeddings import PhraseVector, cosine_similarity
    from .formats import EmbeddingTable
    from .model import batch_from_examples, loss_and_grads, synthetic_batch, zero_params
    from .synthetic import make_knowledge_base, make_records

    failures: list[str] = []

    def check(name: str, ok: bool) -> None:
        click.echo(("ok   " if ok else "FAIL ") + name)
        if not ok:
            failures.append(name)

    cfg = ModelConfig(hidden=8, layers=1, heads=2, ffn=16, vocab_size=16,
                      visual_in=8, max_positions=16, dtype="float64")
    rng = np.random.default_rng(seed)
    batch = synthetic_batch(cfg, rng)
    breakdown, _ = loss_and_grads(zero_params(cfg), batch)
    check("uniform-logit 3-way loss = ln 3",
          abs(breakdown.l_ikm - math.log(3)) < 1e-6)
    check("uniform-logit binary loss = ln 2",
          abs(breakdown.l_iec - math.log(2)) < 1e-6)
    check("total equals component sum",
          breakdown.total == breakdown.l_mlm + breakdown.l_itm
          + breakdown.l_ikm + breakdown.l_iec)

    v = PhraseVector(np.array([0.3, 0.4]), 1.0)
    check("cosine(a, a) = 1", abs(cosine_similarity(v, v) - 1.0) < 1e-12)
    zero = PhraseVector(np.zeros(2), 0.0)
    check("cosine against zero vector = 0", cosine_similarity(v, zero) == 0.0)

    with tempfile.TemporaryDirectory() as tmp:
        kb = make_knowledge_base(16, seed)
        records = make_records(8, kb, seed)
        from .formats import write_records
        path = Path(tmp) / "records.jsonl"
        write_records(path, records)
        back = read_records(path)
        check("records round-trip", len(back) == len(records)
              and all(a.caption == b.caption for a, b in zip(records, back)))

    errors = finite_difference_check(
        ModelConfig(hidden=8, layers=1, heads=2, ffn=16, vocab_size=16,
                    visual_in=8, max_positions=16, dtype="float64"),
        seed,
    )
    check("gradient check < 1e-4", max(errors.values()) < 1e-4)

    if failures:
        click.echo(json.dumps({"error": "SelfTestFailed",
                               "message": ", ".join(failures)}), err=True)
        sys.exit(1)
    click.echo(json.dumps({"effective_seed": seed, "checks_passed": True}))


@main.command("validate")
@click.option("--kind", required=True,
              type=click.Choice(["parse", "detections", "records", "embeddings",
                                 "kb", "corpus", "task"]))
@click.argument("path", type=click.Path(exists=True))
@pipeline_command
def validate(kind, path) -> None:
    """Run a file through its schema validator; reports counts and warnings."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if kind == "parse":
            items = read_parse_file(path)
            count = len(items)
        elif kind == "detections":
            count = len(read_detections(path))
        elif kind == "records":
            count = len(read_records(path))
        elif kind == "embeddings":
            count = len(read_embedding_table(path).entries)
        elif kind == "kb":
            count = len(read_knowledge_base(path))
        elif kind == "corpus":
            manifest, examples = read_corpus(path)
            count = len(examples)
        else:
            count = len(read_zero_shot_task(path).items)
    click.echo(json.dumps({
        "ok": True,
        "kind": kind,
        "records": count,
        "warnings": [str(w.message) for w in caught],
    }, sort_keys=True))


if __name__ == "__main__":
    main()
