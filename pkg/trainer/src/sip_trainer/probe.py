"""Linear probing of encoder activations for FST state identity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .data import make_batch
from .model import SipModel


class LinearProbe(nn.Module):
    """Linear-softmax readout from top-layer encoder states to state ids."""

    def __init__(self, d_model: int, max_states: int):
        super().__init__()
        self.proj = nn.Linear(d_model, max_states)

    def forward(self, activations: torch.Tensor) -> torch.Tensor:
        return self.proj(activations)


@dataclass(frozen=True)
class ProbeConfig:
    epochs: int = 1
    batch_size: int = 32
    lr: float = 1e-2
    seed: int = 0
    device: str = "cpu"


def _activation_targets(model, chunk, device):
    """Per-position (activation, gold state) pairs over |x|+1 positions."""
    batch = make_batch(chunk, device)
    with torch.no_grad():
        acts = model.encoder_activations(batch)
    feats, targets = [], []
    for i, e in enumerate(chunk):
        n = len(e.x) + 1
        if len(e.states) != n:
            raise ValueError("gold state sequence must cover |x|+1 positions")
        feats.append(acts[i, :n])
        targets.extend(e.states)
    return torch.cat(feats), torch.tensor(targets, device=device)


def train_probe(model: SipModel, examples, cfg: ProbeConfig = ProbeConfig()) -> LinearProbe:
    """Fit the probe on frozen-model activations; gold states required."""
    torch.manual_seed(cfg.seed)
    probe = LinearProbe(model.cfg.d_model, model.cfg.max_states).to(cfg.device)
    probe = probe.to(model.W.weight.dtype)
    opt = torch.optim.Adam(probe.parameters(), lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    model.eval()
    for _ in range(cfg.epochs):
        order = rng.permutation(len(examples))
        for lo in range(0, len(order), cfg.batch_size):
            chunk = [examples[i] for i in order[lo:lo + cfg.batch_size]]
            feats, targets = _activation_targets(model, chunk, cfg.device)
            loss = nn.functional.cross_entropy(probe(feats), targets)
            opt.zero_grad()
            loss.backward()
            opt.step()
    return probe


def predict_states(model: SipModel, probe: LinearProbe, example,
                   device: str = "cpu") -> list:
    """Predicted state sequence of length |x|+1 for one example."""
    batch = make_batch([example], device)
    with torch.no_grad():
        acts = model.encoder_activations(batch)[0, :len(example.x) + 1]
        return probe(acts).argmax(dim=-1).tolist()


def probe_token_accuracy(model: SipModel, probe: LinearProbe, examples,
                         batch_size: int = 64, device: str = "cpu") -> float:
    correct = total = 0
    model.eval()
    for lo in range(0, len(examples), batch_size):
        chunk = examples[lo:lo + batch_size]
        feats, targets = _activation_targets(model, chunk, device)
        with torch.no_grad():
            preds = probe(feats).argmax(dim=-1)
        correct += int(preds.eq(targets).sum())
        total += len(targets)
    return correct / total
