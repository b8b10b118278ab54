"""Pre-training on FST simulation and prefix-based fine-tuning."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .data import PAD, Example, load_corpus, make_batch, pad_rows
from .model import ModelConfig, SipModel


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    lr: float = 3e-4
    min_lr: float | None = None  # cosine-anneal to this when set
    seed: int = 0
    device: str = "cpu"
    max_grad_norm: float = 1.0


@dataclass(frozen=True)
class FinetuneConfig:
    prefix_len: int = 50
    prefix_lr: float = 1.0
    model_lr: float = 3e-4
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    device: str = "cpu"
    max_grad_norm: float = 1.0

    def __post_init__(self):
        if self.prefix_lr <= self.model_lr:
            raise ValueError("prefix learning rate must exceed the model's")


MODES = ("sip", "te", "naive", "no-prefix")


def batch_loss(model: SipModel, batch, prefix=None) -> torch.Tensor:
    logits = model(batch, prefix)
    return nn.functional.cross_entropy(
        logits.reshape(-1, logits.shape[-1]), batch.y_out.reshape(-1),
        ignore_index=PAD)


def _epochs(examples, cfg, rng):
    for _ in range(cfg.epochs):
        order = rng.permutation(len(examples))
        for lo in range(0, len(order), cfg.batch_size):
            chunk = [examples[i] for i in order[lo:lo + cfg.batch_size]]
            yield make_batch(chunk, cfg.device)


def _step(loss, opt, model, max_grad_norm):
    if not math.isfinite(float(loss.detach())):
        raise RuntimeError("training diverged: non-finite loss")
    opt.zero_grad()
    loss.backward()
    torch.nn.utils.clip_grad_norm_(
        [p for g in opt.param_groups for p in g["params"]], max_grad_norm)
    opt.step()


def pretrain(corpus_dir, model_cfg: ModelConfig, cfg: TrainConfig,
             curve_path=None) -> SipModel:
    """Train a fresh model to predict f(x) given the encoded FST and x."""
    examples, _ = load_corpus(corpus_dir)
    torch.manual_seed(cfg.seed)
    model = SipModel(model_cfg).to(cfg.device)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    sched = None
    if cfg.min_lr is not None:
        sched = torch.optim.lr_scheduler.CosineAnnealingLR(
            opt, T_max=cfg.epochs, eta_min=cfg.min_lr)
    rng = np.random.default_rng(cfg.seed)
    curve = []
    for epoch in range(cfg.epochs):
        model.train()
        losses = []
        order = rng.permutation(len(examples))
        for lo in range(0, len(order), cfg.batch_size):
            chunk = [examples[i] for i in order[lo:lo + cfg.batch_size]]
            loss = batch_loss(model, make_batch(chunk, cfg.device))
            _step(loss, opt, model, cfg.max_grad_norm)
            losses.append(float(loss.detach()))
        if sched is not None:
            sched.step()
        curve.append((epoch, float(np.mean(losses))))
    if curve_path is not None:
        with open(curve_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "loss"])
            writer.writerows(curve)
    model.loss_curve = curve
    return model


def average_prefix_init(model: SipModel, row_sets, prefix_len: int = 50) -> torch.Tensor:
    """Prefix initialization: the mean of the given FST encodings, each
    embedded by the model and padded/truncated to the prefix length."""
    with torch.no_grad():
        rows = torch.tensor([pad_rows(r, prefix_len) for r in row_sets])
        return model.embed_rows(rows.to(model.W.weight.device)).mean(dim=0)


def finetune(model: SipModel, train_examples, cfg: FinetuneConfig,
             mode: str, init_rows=None):
    """Fine-tune on input/output pairs only. Modes: sip (tunable prefix
    initialized from averaged encodings), te (randomly initialized prefix),
    naive and no-prefix (no prefix at all)."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    torch.manual_seed(cfg.seed)
    examples = [Example(rows=(), x=e.x, y=e.y) for e in train_examples]
    prefix = None
    if mode == "sip":
        if init_rows is None:
            raise ValueError("sip mode needs encodings for the prefix init")
        init = average_prefix_init(model, init_rows, cfg.prefix_len)
        prefix = nn.Parameter(init.clone())
    elif mode == "te":
        prefix = nn.Parameter(torch.randn(
            cfg.prefix_len, model.cfg.d_model,
            dtype=model.W.weight.dtype) * 0.02)
    groups = [{"params": list(model.parameters()), "lr": cfg.model_lr}]
    if prefix is not None:
        prefix.data = prefix.data.to(cfg.device)
        groups.append({"params": [prefix], "lr": cfg.prefix_lr})
    opt = torch.optim.Adam(groups)
    rng = np.random.default_rng(cfg.seed)
    model.train()
    for batch in _epochs(examples, cfg, rng):
        loss = batch_loss(model, batch, prefix)
        _step(loss, opt, model, cfg.max_grad_norm)
    return model, (prefix.detach() if prefix is not None else None)


def sequence_accuracy(model: SipModel, examples, prefix=None,
                      batch_size: int = 64, device: str = "cpu") -> float:
    """Exact-match accuracy of greedy decoding."""
    correct = 0
    for lo in range(0, len(examples), batch_size):
        chunk = examples[lo:lo + batch_size]
        preds = model.greedy_decode(make_batch(chunk, device), prefix)
        correct += sum(p == e.y for p, e in zip(preds, chunk))
    return correct / len(examples)
