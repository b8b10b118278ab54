"""Replays split invariants against emitted dataset files."""

from __future__ import annotations

from pathlib import Path

from .dataio import fst_from_sidecar, read_jsonl, read_manifest, read_symbol_table
from .fst import Transition, transduce
from .splits import WithheldPair, build_train_fst, iteration_count, uses_withheld_combination


def pairs_from_manifest(manifest: dict) -> list:
    return [WithheldPair(Transition(*a), Transition(*b))
            for a, b in manifest["split"]["withheld_pairs"]]


def verify_split_dir(out_dir) -> list:
    """All violated invariants, as human-readable strings; empty means pass."""
    out_dir = Path(out_dir)
    manifest = read_manifest(out_dir)
    table = read_symbol_table(out_dir / "symbols.json")
    split = manifest["split"]
    mode = split["mode"]
    (fst_rec,) = read_jsonl(out_dir / "task_fst.jsonl")
    train = read_jsonl(out_dir / "train.jsonl")
    test = read_jsonl(out_dir / "test.jsonl")
    # sidecars carry no vocabulary; recover it from the observed inputs so
    # shorthand transitions expand over the full task alphabet
    observed = set()
    for rec in train + test:
        observed.update(table.encode(rec["input"]))
    fst = fst_from_sidecar(fst_rec, observed)

    violations = []

    def check_outputs(records, name):
        for i, rec in enumerate(records):
            inp = table.encode(rec["input"])
            got = transduce(fst, inp, table)
            if got is None:
                violations.append(f"{name}[{i}]: input not in the task FST's domain")
            elif table.decode(got) != rec["output"]:
                violations.append(f"{name}[{i}]: output does not match the task FST")

    check_outputs(train, "train")
    check_outputs(test, "test")

    train_inputs = {rec["input"] for rec in train}
    overlap = train_inputs & {rec["input"] for rec in test}
    if overlap:
        violations.append(f"train/test inputs overlap on {len(overlap)} strings")

    if mode == "iteration":
        cfg = split["config"]
        for i, rec in enumerate(train):
            c = iteration_count(fst, table.encode(rec["input"]), table)
            if c > cfg["train_max_iter"]:
                violations.append(f"train[{i}]: iteration count {c} > {cfg['train_max_iter']}")
        for i, rec in enumerate(test):
            c = iteration_count(fst, table.encode(rec["input"]), table)
            if c < cfg["test_min_iter"]:
                violations.append(f"test[{i}]: iteration count {c} < {cfg['test_min_iter']}")
            if len(rec["input"]) > cfg["test_max_len"]:
                violations.append(f"test[{i}]: length {len(rec['input'])} > {cfg['test_max_len']}")
    elif mode == "uc":
        pairs = pairs_from_manifest(manifest)
        f_train = build_train_fst(fst, pairs)
        for i, rec in enumerate(train):
            inp = table.encode(rec["input"])
            if uses_withheld_combination(fst, pairs, inp, table):
                violations.append(f"train[{i}]: uses a withheld combination")
            got = transduce(f_train, inp, table)
            if got is None or table.decode(got) != rec["output"]:
                violations.append(f"train[{i}]: f_train disagrees with f")
        for i, rec in enumerate(test):
            inp = table.encode(rec["input"])
            if transduce(f_train, inp, table) is not None:
                violations.append(f"test[{i}]: inside the withheld-combination training domain")
            if not uses_withheld_combination(fst, pairs, inp, table):
                violations.append(f"test[{i}]: does not use a withheld combination")
    elif mode == "length":
        cfg = split["config"]
        lo, hi = cfg["test_len_range"]
        for i, rec in enumerate(train):
            if len(rec["input"]) > cfg["train_max_len"]:
                violations.append(f"train[{i}]: length {len(rec['input'])} > {cfg['train_max_len']}")
        for i, rec in enumerate(test):
            if not lo <= len(rec["input"]) <= hi:
                violations.append(f"test[{i}]: length {len(rec['input'])} outside [{lo}, {hi}]")
    else:
        violations.append(f"unknown split mode {mode!r}")
    return violations
