import torch

from sip_trainer import Example, ModelConfig, SipModel, make_batch, num_parameters
from sip_trainer.data import PAD_ROW
from sip_trainer.training import average_prefix_init

TINY = ModelConfig(d_model=32, heads=2, enc_layers=1, dec_layers=1, ffn=64,
                   num_symbols=32, max_states=8, max_prefix=16, max_len=16)


def tiny_model(seed=0, dtype=torch.float64):
    torch.manual_seed(seed)
    return SipModel(TINY).to(dtype)


class TestCapacity:
    def test_default_model_is_toy_scale(self):
        assert num_parameters(SipModel(ModelConfig())) < 5_000_000


class TestMasking:
    def test_padding_rows_never_change_outputs(self):
        model = tiny_model()
        ex = Example(rows=((0, 5, 6, 1, 1), (1, 6, 5, 0, 0)), x=(5, 6, 5), y=(6, 5))
        padded = Example(rows=ex.rows + (PAD_ROW,) * 5, x=ex.x, y=ex.y)
        with torch.no_grad():
            a = model(make_batch([ex]))
            b = model(make_batch([padded]))
        assert torch.allclose(a, b, atol=1e-10)

    def test_input_padding_never_changes_other_activations(self):
        model = tiny_model()
        short = Example(rows=((0, 5, 5, 0, 1),), x=(5, 5), y=(5, 5))
        long = Example(rows=((0, 5, 5, 0, 1),), x=(5,) * 6, y=(5,) * 6)
        with torch.no_grad():
            alone = model.encoder_activations(make_batch([short]))
            together = model.encoder_activations(make_batch([short, long]))
        n = len(short.x) + 1
        assert torch.allclose(alone[0, :n], together[0, :n], atol=1e-10)


class TestActivations:
    def test_probe_positions_cover_input_plus_one(self):
        model = tiny_model()
        ex = Example(rows=((0, 5, 6, 0, 1),), x=(5, 6, 5, 6), y=(6,))
        acts = model.encoder_activations(make_batch([ex]))
        assert acts.shape == (1, len(ex.x) + 1, TINY.d_model)

    def test_prefix_replaces_rows(self):
        model = tiny_model()
        ex = Example(rows=(), x=(5, 6), y=(6,))
        prefix = torch.zeros(4, TINY.d_model, dtype=torch.float64)
        acts = model.encoder_activations(make_batch([ex]), prefix)
        assert acts.shape == (1, 3, TINY.d_model)


class TestGreedyDecode:
    def test_deterministic_and_terminated(self):
        model = tiny_model()
        ex = Example(rows=((0, 5, 6, 0, 1),), x=(5, 5), y=(6, 6))
        batch = make_batch([ex])
        a = model.greedy_decode(batch)
        b = model.greedy_decode(batch)
        assert a == b
        assert all(len(seq) <= TINY.max_len for seq in a)


class TestPrefixInit:
    def test_average_of_encodings(self):
        model = tiny_model()
        rows_a = ((0, 5, 6, 0, 1),)
        rows_b = ((0, 6, 5, 0, 1), (0, 5, 5, 0, 1))
        init = average_prefix_init(model, [rows_a, rows_b], prefix_len=4)
        assert init.shape == (4, TINY.d_model)
        with torch.no_grad():
            stacked = model.embed_rows(torch.tensor([
                rows_a + (PAD_ROW,) * 3, rows_b + (PAD_ROW,) * 2]))
        assert torch.allclose(init, stacked.mean(dim=0), atol=1e-12)

    def test_truncates_to_prefix_len(self):
        model = tiny_model()
        rows = tuple((0, 5, 6, 0, 1) for _ in range(9))
        assert average_prefix_init(model, [rows], prefix_len=4).shape == (4, TINY.d_model)
