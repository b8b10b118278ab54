"""File formats: dataset JSONL, FST sidecars, symbol tables, manifests, TSV.

All files are UTF-8.  JSONL keys are written in a fixed order so that a
read-then-write round trip is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .encoding import PrefixEncoding, decode_fst, encode_fst
from .fst import Fst
from .symbols import SymbolTable


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def record_from_example(task_id: int, inp, out, table: SymbolTable, states=None) -> dict:
    rec = {"task_id": task_id, "input": table.decode(inp), "output": table.decode(out)}
    if states is not None:
        rec["states"] = list(states)
    return rec


def write_jsonl(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            ordered = {k: rec[k] for k in ("task_id", "input", "output") if k in rec}
            for k in rec:
                if k not in ordered:
                    ordered[k] = rec[k]
            fh.write(_dumps(ordered) + "\n")


def read_jsonl(path) -> list:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def sidecar_from_fst(task_id: int, fst: Fst) -> dict:
    return {
        "task_id": task_id,
        "num_states": fst.num_states,
        "finals": sorted(fst.finals),
        "rows": [list(r) for r in encode_fst(fst).rows],
    }


def fst_from_sidecar(rec: dict, vocab=None) -> Fst:
    enc = PrefixEncoding(tuple(tuple(r) for r in rec["rows"]))
    return decode_fst(enc, rec["num_states"], frozenset(rec["finals"]), vocab)


def write_sidecars(path, sidecars) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in sidecars:
            ordered = {k: rec[k] for k in ("task_id", "num_states", "finals", "rows")}
            fh.write(_dumps(ordered) + "\n")


def write_symbol_table(path, table: SymbolTable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dumps({"symbols": table.to_mapping()}) + "\n")


def read_symbol_table(path) -> SymbolTable:
    with open(path, encoding="utf-8") as fh:
        return SymbolTable.from_mapping(json.load(fh)["symbols"])


def read_tsv_pairs(path) -> list:
    """Pre-extracted natural-data pairs, one ``input<TAB>output`` per line."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 2 tab-separated fields")
            pairs.append((parts[0], parts[1]))
    return pairs


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, command: str, config: dict, seed, outputs,
                   extra: dict | None = None) -> Path:
    from . import __version__

    out_dir = Path(out_dir)
    manifest = {
        "tool": "sip-forge",
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": config,
        "outputs": {Path(p).name: file_digest(p) for p in outputs},
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_manifest(out_dir) -> dict:
    with open(Path(out_dir) / "manifest.json", encoding="utf-8") as fh:
        return json.load(fh)
