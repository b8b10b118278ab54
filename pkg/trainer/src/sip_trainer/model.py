"""Toy encoder-decoder that simulates FSTs from a prefix-encoded description.

The encoder reads [FST prefix rows][input symbols][EOS]; the decoder emits
the transduced output. Each prefix row (src, in, out, dst, final) becomes
one encoder position via h = W[emb(src); emb(dst); emb(in); emb(out);
emb(final)]. At fine-tuning time the rows can be replaced by a trainable
dense prefix of the same width.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .data import BOS, EOS, PAD

STATE_DIM = 64
SYMBOL_DIM = 256
FINAL_DIM = 16


def _causal_mask(n: int, device) -> torch.Tensor:
    return torch.ones(n, n, dtype=torch.bool, device=device).triu(1)


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 128
    heads: int = 4
    enc_layers: int = 2
    dec_layers: int = 2
    ffn: int = 256
    dropout: float = 0.0
    num_symbols: int = 256
    max_states: int = 64
    max_prefix: int = 256
    max_len: int = 64


class SipModel(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.d_model
        # index 0 is the padding-row state (stored id -1, shifted by one)
        self.state_emb = nn.Embedding(cfg.max_states + 1, STATE_DIM)
        self.symbol_emb = nn.Embedding(cfg.num_symbols, SYMBOL_DIM)
        self.final_emb = nn.Embedding(3, FINAL_DIM)
        self.W = nn.Linear(2 * STATE_DIM + 2 * SYMBOL_DIM + FINAL_DIM, d)
        self.token_emb = nn.Embedding(cfg.num_symbols, d)
        self.prefix_pos = nn.Embedding(cfg.max_prefix, d)
        self.input_pos = nn.Embedding(cfg.max_len + 1, d)
        self.output_pos = nn.Embedding(cfg.max_len + 1, d)
        enc_layer = nn.TransformerEncoderLayer(
            d, cfg.heads, cfg.ffn, cfg.dropout, batch_first=True,
            norm_first=True)
        dec_layer = nn.TransformerDecoderLayer(
            d, cfg.heads, cfg.ffn, cfg.dropout, batch_first=True,
            norm_first=True)
        self.encoder = nn.TransformerEncoder(enc_layer, cfg.enc_layers,
                                             enable_nested_tensor=False)
        self.decoder = nn.TransformerDecoder(dec_layer, cfg.dec_layers)
        self.out_proj = nn.Linear(d, cfg.num_symbols)

    def embed_rows(self, rows: torch.Tensor) -> torch.Tensor:
        """(B, K, 5) integer rows to (B, K, d); padding rows map through
        reserved indices (state -1 -> 0, final flag 2)."""
        src = self.state_emb(rows[:, :, 0] + 1)
        dst = self.state_emb(rows[:, :, 3] + 1)
        inp = self.symbol_emb(rows[:, :, 1])
        out = self.symbol_emb(rows[:, :, 2])
        fin = self.final_emb(rows[:, :, 4])
        return self.W(torch.cat([src, dst, inp, out, fin], dim=-1))

    def encode(self, batch, prefix: torch.Tensor | None = None):
        """Returns (memory, memory_mask, input_start) where input_start is
        the offset of the first input-token position."""
        b = batch.x.shape[0]
        if prefix is not None:
            if prefix.dim() == 2:
                prefix = prefix.unsqueeze(0).expand(b, -1, -1)
            pre = prefix + self.prefix_pos.weight[:prefix.shape[1]]
            pre_mask = torch.zeros(pre.shape[:2], dtype=torch.bool,
                                   device=pre.device)
        elif batch.rows.shape[1] > 0:
            pre = self.embed_rows(batch.rows)
            pre = pre + self.prefix_pos.weight[:pre.shape[1]]
            pre_mask = batch.row_mask
        else:
            pre = batch.x.new_zeros((b, 0, self.cfg.d_model), dtype=torch.float)
            pre = pre.to(self.W.weight.dtype)
            pre_mask = batch.row_mask
        toks = self.token_emb(batch.x) + self.input_pos.weight[:batch.x.shape[1]]
        seq = torch.cat([pre, toks], dim=1)
        mask = torch.cat([pre_mask, batch.x_mask], dim=1)
        memory = self.encoder(seq, src_key_padding_mask=mask)
        return memory, mask, pre.shape[1]

    def forward(self, batch, prefix: torch.Tensor | None = None) -> torch.Tensor:
        memory, mem_mask, _ = self.encode(batch, prefix)
        tgt = self.token_emb(batch.y_in) + self.output_pos.weight[:batch.y_in.shape[1]]
        causal = _causal_mask(tgt.shape[1], tgt.device)
        hidden = self.decoder(tgt, memory, tgt_mask=causal,
                              tgt_key_padding_mask=batch.y_mask,
                              memory_key_padding_mask=mem_mask)
        return self.out_proj(hidden)

    def encoder_activations(self, batch, prefix: torch.Tensor | None = None):
        """Top-layer encoder states at the |x|+1 input positions (the input
        tokens and the EOS), for probing."""
        memory, _, start = self.encode(batch, prefix)
        return memory[:, start:, :]

    @torch.no_grad()
    def greedy_decode(self, batch, prefix: torch.Tensor | None = None,
                      max_len: int | None = None) -> list:
        self.eval()
        max_len = max_len or self.cfg.max_len
        memory, mem_mask, _ = self.encode(batch, prefix)
        b = batch.x.shape[0]
        ys = torch.full((b, 1), BOS, dtype=torch.long, device=batch.x.device)
        done = torch.zeros(b, dtype=torch.bool, device=batch.x.device)
        for _ in range(max_len):
            tgt = self.token_emb(ys) + self.output_pos.weight[:ys.shape[1]]
            causal = _causal_mask(ys.shape[1], tgt.device)
            hidden = self.decoder(tgt, memory, tgt_mask=causal,
                                  memory_key_padding_mask=mem_mask)
            nxt = self.out_proj(hidden[:, -1]).argmax(dim=-1)
            nxt = torch.where(done, torch.full_like(nxt, PAD), nxt)
            done |= nxt.eq(EOS)
            ys = torch.cat([ys, nxt.unsqueeze(1)], dim=1)
            if bool(done.all()):
                break
        outs = []
        for row in ys[:, 1:].tolist():
            out = []
            for t in row:
                if t in (EOS, PAD):
                    break
                out.append(t)
            outs.append(tuple(out))
        return outs


def num_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
