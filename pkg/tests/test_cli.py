import json

import numpy as np
import pytest
from click.testing import CliRunner

from sip_forge.cli import EXIT_QUOTA, EXIT_VERIFY, main
from sip_forge.dataio import read_jsonl, read_manifest
from sip_forge.prefix_analysis import Prefix, save_prefix
from sip_forge.verify import verify_split_dir


@pytest.fixture
def runner():
    return CliRunner()


def run(runner, *args):
    return runner.invoke(main, [str(a) for a in args])


def gen_small_corpus(runner, out, seed=7, tasks=6, **extra):
    args = ["gen-pretrain", "--out", out, "--tasks", tasks, "--seed", seed]
    for k, v in extra.items():
        args += [f"--{k.replace('_', '-')}", v]
    res = run(runner, *args)
    assert res.exit_code == 0, res.output
    return res


def gen_split(runner, out, mode, seed, train=40, test=10, **extra):
    args = ["gen-split", "--out", out, "--mode", mode, "--seed", seed,
            "--train", train, "--test", test]
    for k, v in extra.items():
        args += [f"--{k.replace('_', '-')}", v]
    return run(runner, *args)


def gen_split_retrying(runner, out, mode, train=40, test=10, **extra):
    for seed in range(10):
        res = gen_split(runner, out, mode, seed, train, test, **extra)
        if res.exit_code == 0:
            return res
        assert res.exit_code == EXIT_QUOTA, res.output
    pytest.fail(f"no seed produced a {mode} split")


class TestGenPretrain:
    def test_outputs_and_manifest(self, runner, tmp_path):
        out = tmp_path / "corpus"
        gen_small_corpus(runner, out)
        records = read_jsonl(out / "corpus.jsonl")
        assert len(records) == 6 * 5
        assert {r["task_id"] for r in records} == set(range(6))
        sidecars = read_jsonl(out / "fsts.jsonl")
        assert len(sidecars) == 6
        m = read_manifest(out)
        assert m["command"] == "gen-pretrain"
        assert set(m["outputs"]) == {"corpus.jsonl", "fsts.jsonl", "symbols.json"}

    def test_reproducible(self, runner, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        gen_small_corpus(runner, a)
        gen_small_corpus(runner, b)
        assert (a / "corpus.jsonl").read_bytes() == (b / "corpus.jsonl").read_bytes()
        assert (a / "fsts.jsonl").read_bytes() == (b / "fsts.jsonl").read_bytes()

    def test_worker_count_does_not_change_output(self, runner, tmp_path, monkeypatch):
        a, b = tmp_path / "a", tmp_path / "b"
        gen_small_corpus(runner, a)
        monkeypatch.setenv("SIP_FORGE_THREADS", "2")
        gen_small_corpus(runner, b)
        assert (a / "corpus.jsonl").read_bytes() == (b / "corpus.jsonl").read_bytes()

    def test_seed_required(self, runner, tmp_path):
        res = run(runner, "gen-pretrain", "--out", tmp_path / "x", "--tasks", 1)
        assert res.exit_code == 2

    def test_bimachine_mode(self, runner, tmp_path):
        out = tmp_path / "bm"
        gen_small_corpus(runner, out, tasks=3, mode="bimachine")
        assert len(read_jsonl(out / "corpus.jsonl")) == 15

    def test_bad_probability_exits_2(self, runner, tmp_path):
        res = run(runner, "gen-pretrain", "--out", tmp_path / "x", "--tasks", 1,
                  "--seed", 1, "--p-drop", 1.5)
        assert res.exit_code == 2


class TestGenSplitAndVerify:
    @pytest.mark.parametrize("mode,extra", [
        ("iteration", {}),
        ("uc", {}),
        ("length", {"test_min_len": 20, "test_max_len": 30}),
    ])
    def test_split_verifies(self, runner, tmp_path, mode, extra):
        out = tmp_path / mode
        gen_split_retrying(runner, out, mode, **extra)
        assert verify_split_dir(out) == []
        res = run(runner, "verify", out)
        assert res.exit_code == 0, res.output
        assert "ok" in res.output

    def test_verify_catches_corruption(self, runner, tmp_path):
        out = tmp_path / "len"
        gen_split_retrying(runner, out, "length",
                           test_min_len=20, test_max_len=30)
        path = out / "test.jsonl"
        recs = read_jsonl(path)
        recs[0]["output"] = recs[0]["output"] + "!!!"
        with open(path, "w", encoding="utf-8") as fh:
            for r in recs:
                fh.write(json.dumps(r) + "\n")
        res = run(runner, "verify", out)
        assert res.exit_code == EXIT_VERIFY

    def test_uc_manifest_lists_withheld_pairs(self, runner, tmp_path):
        out = tmp_path / "uc"
        gen_split_retrying(runner, out, "uc")
        m = read_manifest(out)
        pairs = m["split"]["withheld_pairs"]
        assert pairs
        for a, b in pairs:
            assert len(a) == 4 and len(b) == 4
            assert a[3] == b[0]  # adjacency: a ends where b starts


class TestEval:
    def test_report(self, runner, tmp_path):
        gold = tmp_path / "gold.jsonl"
        with open(gold, "w", encoding="utf-8") as fh:
            for out in ("ab", "c"):
                fh.write(json.dumps({"task_id": 0, "input": "x", "output": out}) + "\n")
        pred = tmp_path / "pred.txt"
        pred.write_text("ab\nd\n", encoding="utf-8")
        res = run(runner, "eval", "--pred", pred, "--gold", gold)
        assert res.exit_code == 0, res.output
        report = json.loads(res.output)
        assert report["seq_accuracy"] == 0.5
        assert report["mean_edit_distance"] == 0.5

    def test_count_mismatch(self, runner, tmp_path):
        gold = tmp_path / "gold.jsonl"
        gold.write_text(json.dumps({"task_id": 0, "input": "x", "output": "y"}) + "\n")
        pred = tmp_path / "pred.txt"
        pred.write_text("a\nb\n", encoding="utf-8")
        res = run(runner, "eval", "--pred", pred, "--gold", gold)
        assert res.exit_code == 2


class TestProbeOracle:
    def test_states_and_baseline(self, runner, tmp_path):
        corpus = tmp_path / "corpus"
        gen_small_corpus(runner, corpus)
        out = tmp_path / "probe"
        res = run(runner, "probe-oracle", "--corpus", corpus, "--out", out,
                  "--baseline", "--seed", 3)
        assert res.exit_code == 0, res.output
        aug = read_jsonl(out / "corpus_states.jsonl")
        assert all(len(r["states"]) == len(r["input"]) + 1 for r in aug)
        report = json.loads((out / "baseline_report.json").read_text())
        assert 0.0 <= report["token_accuracy"] <= 1.0

    def test_baseline_requires_seed(self, runner, tmp_path):
        corpus = tmp_path / "corpus"
        gen_small_corpus(runner, corpus)
        res = run(runner, "probe-oracle", "--corpus", corpus,
                  "--out", tmp_path / "p", "--baseline")
        assert res.exit_code == 2


class TestPrefixSim:
    def test_pairwise_csv(self, runner, tmp_path):
        rng = np.random.default_rng(0)
        paths = []
        for i in range(2):
            p = tmp_path / f"p{i}.json"
            save_prefix(p, Prefix(rng.normal(size=(4, 8))))
            paths.append(p)
        res = run(runner, "prefix-sim", *paths)
        assert res.exit_code == 0, res.output
        lines = res.output.strip().splitlines()
        assert lines[0].split(",")[:3] == ["prefix_a", "prefix_b", "score"]
        # unordered pairs including self-similarities on the diagonal
        assert len(lines) == 1 + 3
        self_rows = [l for l in lines[1:] if l.split(",")[0] == l.split(",")[1]]
        assert all(float(l.split(",")[2]) == pytest.approx(1.0) for l in self_rows)

    def test_requires_files(self, runner):
        res = run(runner, "prefix-sim")
        assert res.exit_code == 2
