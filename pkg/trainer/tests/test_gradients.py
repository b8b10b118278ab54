import torch

from sip_trainer import Example, make_batch
from sip_trainer.training import batch_loss

from test_model import tiny_model

EXAMPLES = [
    Example(rows=((0, 5, 6, 1, 1), (1, 6, 5, 0, 0)), x=(5, 6, 5), y=(6, 5, 6)),
    Example(rows=((0, 5, 5, 0, 1),), x=(5, 5), y=(5, 5)),
]


def finite_difference(model, batch, param, idx, eps=1e-6):
    with torch.no_grad():
        orig = param[idx].item()
        param[idx] = orig + eps
        hi = float(batch_loss(model, batch))
        param[idx] = orig - eps
        lo = float(batch_loss(model, batch))
        param[idx] = orig
    return (hi - lo) / (2 * eps)


def check_param(model, batch, param, coords):
    model.zero_grad()
    batch_loss(model, batch).backward()
    grad = param.grad
    for idx in coords:
        numeric = finite_difference(model, batch, param.data, idx)
        analytic = float(grad[idx])
        denom = max(abs(numeric), abs(analytic), 1e-8)
        rel = abs(numeric - analytic) / denom
        assert rel < 1e-3, f"{idx}: analytic {analytic}, numeric {numeric}"


class TestGradients:
    def test_projection_and_embeddings(self):
        """Analytic gradients of W and the embedding tables match central
        finite differences in double precision."""
        model = tiny_model(seed=3)
        model.train()
        batch = make_batch(EXAMPLES)
        check_param(model, batch, model.W.weight,
                    [(0, 0), (5, 17), (31, 100), (16, 400)])
        check_param(model, batch, model.W.bias, [(0,), (31,)])
        check_param(model, batch, model.state_emb.weight, [(1, 0), (2, 33)])
        check_param(model, batch, model.symbol_emb.weight, [(5, 0), (6, 123)])
        check_param(model, batch, model.final_emb.weight, [(0, 0), (1, 7)])
        check_param(model, batch, model.token_emb.weight, [(5, 0), (1, 3)])

    def test_prefix_gradient(self):
        model = tiny_model(seed=4)
        model.train()
        ex = Example(rows=(), x=(5, 6), y=(6, 5))
        batch = make_batch([ex])
        prefix = torch.randn(4, model.cfg.d_model, dtype=torch.float64,
                             requires_grad=True)
        batch_loss(model, batch, prefix).backward()
        grad = prefix.grad
        for idx in [(0, 0), (3, 17)]:
            numeric = finite_difference_prefix(model, batch, prefix.data, idx)
            analytic = float(grad[idx])
            denom = max(abs(numeric), abs(analytic), 1e-8)
            assert abs(numeric - analytic) / denom < 1e-3


def finite_difference_prefix(model, batch, prefix, idx, eps=1e-6):
    with torch.no_grad():
        orig = prefix[idx].item()
        prefix[idx] = orig + eps
        hi = float(batch_loss(model, batch, prefix))
        prefix[idx] = orig - eps
        lo = float(batch_loss(model, batch, prefix))
        prefix[idx] = orig
    return (hi - lo) / (2 * eps)
