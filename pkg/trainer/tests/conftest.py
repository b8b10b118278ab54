import subprocess
import sys

import pytest


def run_forge(*args):
    proc = subprocess.run([sys.executable, "-m", "sip_forge.cli", *map(str, args)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr + proc.stdout
    return proc


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    run_forge("gen-pretrain", "--out", out, "--tasks", "24", "--seed", "11",
              "--max-len", "12", "--vocab-min", "3", "--vocab-max", "6",
              "--ascii-only")
    return out


@pytest.fixture(scope="session")
def tiny_states_corpus(tmp_path_factory, tiny_corpus):
    out = tmp_path_factory.mktemp("states")
    run_forge("probe-oracle", "--corpus", tiny_corpus, "--out", out)
    # probing reads the corpus layout: sidecars and symbols live alongside
    for name in ("fsts.jsonl", "symbols.json"):
        (out / name).write_bytes((tiny_corpus / name).read_bytes())
    return out
