"""Command-line pipelines: generation, splitting, verification, analysis.

Exit codes: 0 success, 2 configuration error, 3 quota/generation failure,
4 verification failure.  Every randomized command requires an explicit
--seed; output directories always contain a manifest sufficient to
regenerate them.  SIP_FORGE_THREADS bounds the worker pool.
"""

from __future__ import annotations

import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from . import __version__
from .dataio import (
    fst_from_sidecar,
    read_jsonl,
    record_from_example,
    sidecar_from_fst,
    write_jsonl,
    write_manifest,
    write_sidecars,
    write_symbol_table,
)
from .fst import state_sequence
from .metrics import evaluate, heuristic_probe_baseline
from .prefix_analysis import (
    DEFAULT_ITERS,
    DEFAULT_TEMPERATURE,
    distractor_discrimination,
    load_prefix,
    prefix_similarity_exact,
    prefix_similarity_sinkhorn,
    row_embedding,
)
from .sampling import (
    DEFAULT_STOP_PROB,
    CorpusConfig,
    DetFstConfig,
    GenerationError,
    gen_det_fst,
    gen_pretrain_task,
    sample_vocab,
    task_rng,
)
from .splits import (
    IterationSplitConfig,
    LengthSplitConfig,
    UcSplitConfig,
    gen_iteration_split,
    gen_length_split,
    gen_uc_split,
)
from .symbols import DEFAULT_TABLE
from .verify import verify_split_dir

EXIT_CONFIG = 2
EXIT_QUOTA = 3
EXIT_VERIFY = 4


def _n_workers() -> int:
    try:
        return max(1, int(os.environ.get("SIP_FORGE_THREADS", "1")))
    except ValueError:
        return 1


@click.group()
@click.version_option(__version__)
def main():
    """FST benchmark forge."""


_corpus_cfg = None  # worker-global, set by the pool initializer


def _init_worker(cfg):
    global _corpus_cfg
    _corpus_cfg = cfg


def _gen_task(task_id):
    return gen_pretrain_task(_corpus_cfg, task_id)


@main.command("gen-pretrain")
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--tasks", default=40_000, show_default=True)
@click.option("--pairs-per-task", default=5, show_default=True)
@click.option("--min-len", default=1, show_default=True)
@click.option("--max-len", default=35, show_default=True)
@click.option("--states-min", default=2, show_default=True)
@click.option("--states-max", default=4, show_default=True)
@click.option("--vocab-min", default=5, show_default=True)
@click.option("--vocab-max", default=25, show_default=True)
@click.option("--seed", required=True, type=int)
@click.option("--mode", type=click.Choice(["det", "bimachine"]), default="det",
              show_default=True)
@click.option("--bm-left-states", default="2,3", show_default=True)
@click.option("--bm-right-states", default="2,3", show_default=True)
@click.option("--p-id", default=0.2, show_default=True)
@click.option("--p-drop", default=0.4, show_default=True)
@click.option("--p-shorthand", default=0.15, show_default=True)
@click.option("--stop-prob", default=DEFAULT_STOP_PROB, show_default=True)
@click.option("--ascii-only", is_flag=True)
def cmd_gen_pretrain(out_dir, tasks, pairs_per_task, min_len, max_len, states_min,
                     states_max, vocab_min, vocab_max, seed, mode, bm_left_states,
                     bm_right_states, p_id, p_drop, p_shorthand, stop_prob, ascii_only):
    """Generate a pre-training corpus: JSONL pairs plus FST sidecars."""
    try:
        cfg = CorpusConfig(
            num_tasks=tasks, pairs_per_task=pairs_per_task, min_input_len=min_len,
            max_input_len=max_len, min_vocab=vocab_min, max_vocab=vocab_max,
            min_states=states_min, max_states=states_max, master_seed=seed,
            mode=mode, p_id=p_id, p_drop=p_drop, p_shorthand=p_shorthand,
            bm_left_states=tuple(int(x) for x in bm_left_states.split(",")),
            bm_right_states=tuple(int(x) for x in bm_right_states.split(",")),
            stop_prob=stop_prob, ascii_only=ascii_only)
    except (ValueError, TypeError) as err:
        raise click.UsageError(str(err))
    out_dir.mkdir(parents=True, exist_ok=True)
    table = DEFAULT_TABLE
    try:
        workers = _n_workers()
        if workers > 1:
            with ProcessPoolExecutor(workers, initializer=_init_worker,
                                     initargs=(cfg,)) as pool:
                results = list(pool.map(_gen_task, range(cfg.num_tasks), chunksize=64))
        else:
            results = [gen_pretrain_task(cfg, i) for i in range(cfg.num_tasks)]
    except GenerationError as err:
        click.echo(f"generation failed: {err}", err=True)
        sys.exit(EXIT_QUOTA)
    results.sort(key=lambda t: t.task_id)
    records = [record_from_example(t.task_id, x, y, table)
               for t in results for x, y in t.pairs]
    corpus_path = out_dir / "corpus.jsonl"
    sidecar_path = out_dir / "fsts.jsonl"
    symbols_path = out_dir / "symbols.json"
    write_jsonl(corpus_path, records)
    write_sidecars(sidecar_path, (sidecar_from_fst(t.task_id, t.fst) for t in results))
    write_symbol_table(symbols_path, table)
    write_manifest(out_dir, "gen-pretrain", _cfg_dict(cfg), seed,
                   [corpus_path, sidecar_path, symbols_path])
    click.echo(f"wrote {len(records)} pairs across {len(results)} tasks to {out_dir}")


def _cfg_dict(cfg) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v)
            for k, v in vars(cfg).items()}


@main.command("gen-split")
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--mode", type=click.Choice(["iteration", "uc", "length"]), required=True)
@click.option("--seed", required=True, type=int)
@click.option("--states", default=4, show_default=True)
@click.option("--vocab-size", default=25, show_default=True)
@click.option("--pairs", default=20, show_default=True, help="Max withheld pairs (uc).")
@click.option("--train", "train_size", default=5000, show_default=True)
@click.option("--test", "test_size", default=1000, show_default=True)
@click.option("--train-max-len", default=15, show_default=True)
@click.option("--test-min-len", default=None, type=int,
              help="Lower test length bound (length mode; default 40).")
@click.option("--test-max-len", default=None, type=int,
              help="Upper test length bound (default: 30, or 70 in length mode).")
@click.option("--p-id", default=0.2, show_default=True)
@click.option("--p-drop", default=0.4, show_default=True)
@click.option("--p-shorthand", default=0.15, show_default=True)
def cmd_gen_split(out_dir, mode, seed, states, vocab_size, pairs, train_size,
                  test_size, train_max_len, test_min_len, test_max_len,
                  p_id, p_drop, p_shorthand):
    """Generate a systematic-generalization split for a fresh task FST.

    Task FSTs follow the evaluation protocol: printable-ASCII vocabulary of
    the configured size, sampled like the pre-training tasks.
    """
    table = DEFAULT_TABLE
    rng = task_rng(seed, 0)
    try:
        vocab = sample_vocab(rng, table, vocab_size, vocab_size, ascii_only=True)
        f = int(rng.integers(1, states + 1))
        fst = gen_det_fst(DetFstConfig(states, f, vocab, p_id, p_drop, p_shorthand),
                          rng, table)
        if mode == "iteration":
            cfg = IterationSplitConfig(
                train_len_range=(3, train_max_len),
                test_max_len=test_max_len or 30,
                train_size=train_size, test_size=test_size)
            ds = gen_iteration_split(fst, cfg, rng, table)
        elif mode == "uc":
            cfg = UcSplitConfig(
                max_withheld_pairs=pairs,
                train_len_range=(3, train_max_len),
                test_len_range=(3, test_max_len or 30),
                train_size=train_size, test_size=test_size)
            ds = gen_uc_split(fst, cfg, rng, table)
        else:
            cfg = LengthSplitConfig(
                train_max_len=train_max_len,
                test_len_range=(test_min_len or 40, test_max_len or 70),
                train_size=train_size, test_size=test_size)
            ds = gen_length_split(fst, cfg, rng, table)
    except GenerationError as err:
        click.echo(f"quota failure: {err}", err=True)
        sys.exit(EXIT_QUOTA)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path, test_path = out_dir / "train.jsonl", out_dir / "test.jsonl"
    fst_path, symbols_path = out_dir / "task_fst.jsonl", out_dir / "symbols.json"
    write_jsonl(train_path, (record_from_example(0, x, y, table) for x, y in ds.train))
    write_jsonl(test_path, (record_from_example(0, x, y, table) for x, y in ds.test))
    write_sidecars(fst_path, [sidecar_from_fst(0, fst)])
    write_symbol_table(symbols_path, table)
    split_meta = {"mode": mode, "config": _cfg_dict(cfg)}
    if mode == "uc":
        split_meta["withheld_pairs"] = [
            [[p.a.src, p.a.inp, p.a.out, p.a.dst], [p.b.src, p.b.inp, p.b.out, p.b.dst]]
            for p in ds.info["withheld_pairs"]]
    write_manifest(out_dir, "gen-split", {"states": states, "vocab_size": vocab_size},
                   seed, [train_path, test_path, fst_path, symbols_path],
                   extra={"split": split_meta})
    click.echo(f"wrote {len(ds.train)} train / {len(ds.test)} test examples to {out_dir}")


@main.command("verify")
@click.argument("out_dir", type=click.Path(exists=True, path_type=Path))
def cmd_verify(out_dir):
    """Replay split invariants against an emitted dataset directory."""
    violations = verify_split_dir(out_dir)
    if violations:
        for v in violations:
            click.echo(f"FAIL {v}", err=True)
        click.echo(f"{len(violations)} violations", err=True)
        sys.exit(EXIT_VERIFY)
    click.echo("ok")


@main.command("eval")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
def cmd_eval(pred_path, gold_path):
    """Sequence accuracy, mean edit distance and PER.

    Predictions are newline-delimited strings aligned with the gold JSONL.
    """
    with open(pred_path, encoding="utf-8") as fh:
        preds = [line.rstrip("\n") for line in fh]
    if preds and preds[-1] == "":
        preds.pop()
    golds = [rec["output"] for rec in read_jsonl(gold_path)]
    if len(preds) != len(golds):
        raise click.UsageError(f"{len(preds)} predictions vs {len(golds)} gold records")
    report = evaluate(preds, golds)
    click.echo(json.dumps(report.to_dict(), indent=2))


@main.command("probe-oracle")
@click.option("--corpus", "corpus_dir", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--baseline/--no-baseline", default=False,
              help="Also evaluate the random-appropriate-state heuristic.")
@click.option("--seed", type=int, default=None,
              help="Required with --baseline (it is randomized).")
def cmd_probe_oracle(corpus_dir, out_dir, baseline, seed):
    """Attach gold state sequences to a corpus; optional heuristic report."""
    if baseline and seed is None:
        raise click.UsageError("--baseline requires --seed")
    from .dataio import read_symbol_table

    table = read_symbol_table(corpus_dir / "symbols.json")
    records = read_jsonl(corpus_dir / "corpus.jsonl")
    # sidecars carry no vocabulary; recover it from the observed inputs so
    # shorthand transitions expand over the full task alphabet
    observed = {}
    for rec in records:
        observed.setdefault(rec["task_id"], set()).update(table.encode(rec["input"]))
    fsts = {rec["task_id"]: fst_from_sidecar(rec, observed.get(rec["task_id"]))
            for rec in read_jsonl(corpus_dir / "fsts.jsonl")}
    out_dir.mkdir(parents=True, exist_ok=True)
    augmented = []
    golds, fst_of = [], []
    for rec in records:
        fst = fsts[rec["task_id"]]
        seq = state_sequence(fst, table.encode(rec["input"]), table)
        if seq is None:
            raise click.ClickException(
                f"task {rec['task_id']}: input {rec['input']!r} has no accepting run")
        augmented.append({**rec, "states": seq})
        golds.append(seq)
        fst_of.append(fst)
    states_path = out_dir / "corpus_states.jsonl"
    write_jsonl(states_path, augmented)
    outputs = [states_path]
    if baseline:
        rng = task_rng(seed, 0)
        preds = [heuristic_probe_baseline(fst, table.encode(rec["input"]), rng, table)
                 for fst, rec in zip(fst_of, records)]
        token_total = sum(len(g) for g in golds)
        token_correct = sum(p == g for pred, gold in zip(preds, golds)
                            for p, g in zip(pred, gold))
        whole_correct = sum(p == g for p, g in zip(preds, golds))
        report = {"token_accuracy": token_correct / token_total,
                  "whole_sequence_accuracy": whole_correct / len(golds),
                  "num_sequences": len(golds)}
        report_path = out_dir / "baseline_report.json"
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
        outputs.append(report_path)
        click.echo(json.dumps(report, indent=2))
    write_manifest(out_dir, "probe-oracle", {"baseline": baseline}, seed, outputs)


@main.command("prefix-sim")
@click.argument("prefix_files", nargs=-1, type=click.Path(exists=True))
@click.option("--method", type=click.Choice(["exact", "sinkhorn"]), default="exact",
              show_default=True)
@click.option("--temperature", default=DEFAULT_TEMPERATURE, show_default=True)
@click.option("--iters", default=DEFAULT_ITERS, show_default=True)
@click.option("--gold-sidecar", type=click.Path(exists=True),
              help="Gold FST sidecar JSONL for distractor discrimination.")
@click.option("--distractors", "distractor_path", type=click.Path(exists=True),
              help="Distractor FST sidecar JSONL.")
@click.option("--embed-dim", default=32, show_default=True)
@click.option("--embed-seed", default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="CSV output path (default: stdout).")
def cmd_prefix_sim(prefix_files, method, temperature, iters, gold_sidecar,
                   distractor_path, embed_dim, embed_seed, out_path):
    """Pairwise prefix similarities, or gold-vs-distractor discrimination."""
    if not prefix_files:
        raise click.UsageError("provide at least one prefix file")
    prefixes = [load_prefix(p) for p in prefix_files]
    kwargs = {} if method == "exact" else {"temperature": temperature, "iters": iters}
    sim = prefix_similarity_exact if method == "exact" else prefix_similarity_sinkhorn

    rows = []
    if gold_sidecar:
        if not distractor_path:
            raise click.UsageError("--gold-sidecar requires --distractors")
        from .dataio import read_jsonl as _read

        golds = [fst_from_sidecar(r) for r in _read(gold_sidecar)]
        distractors = [fst_from_sidecar(r) for r in _read(distractor_path)]
        from .encoding import encode_fst

        embed = row_embedding(embed_dim, embed_seed)
        header = ["prefix", "gold_score", "best_distractor_score", "gold_wins"]
        for path, prefix, gold in zip(prefix_files, prefixes, golds):
            rep = distractor_discrimination(prefix, encode_fst(gold),
                                            [encode_fst(d) for d in distractors],
                                            embed, method=method, **kwargs)
            rows.append([path, f"{rep.gold_score:.6f}",
                         f"{rep.best_distractor_score:.6f}", str(rep.gold_wins)])
    else:
        header = ["prefix_a", "prefix_b", "score"]
        for i, (pa, a) in enumerate(zip(prefix_files, prefixes)):
            for pb, b in zip(prefix_files[i:], prefixes[i:]):
                n = min(len(a), len(b))
                score, _ = sim(a.truncated(n), b.truncated(n), **kwargs)
                rows.append([pa, pb, f"{score:.6f}"])
    sink = open(out_path, "w", newline="", encoding="utf-8") if out_path else sys.stdout
    try:
        writer = csv.writer(sink)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if out_path:
            sink.close()


if __name__ == "__main__":
    main()
