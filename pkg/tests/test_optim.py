import math

import numpy as np
import pytest

from lifelens import tensor as T
from lifelens.optim import Adam, adam_step


def scalar(name="x", value=0.0):
    return T.Parameter(name, np.array(value), dtype=np.float64)


def reference_adam(grads, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
    """Textbook Adam written out step by step for a scalar."""
    x, m, v = 0.0, 0.0, 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        x -= lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)
    return x


def test_zero_gradient_leaves_parameter():
    p = T.Parameter("w", np.arange(4.0), dtype=np.float64)
    opt = Adam([p])
    p.grad = np.zeros(4)
    opt.step()
    assert np.array_equal(p.data, np.arange(4.0))
    assert p.grad is None


def test_first_step_is_lr():
    p = scalar()
    opt = Adam([p], lr=0.1)
    p.grad = np.array(1.0)
    opt.step()
    assert p.data == pytest.approx(-0.1, rel=1e-6)


def test_matches_reference_sequence():
    grads = [1.0, -0.5, 2.0, 0.25, 0.0, -3.0]
    p = scalar()
    opt = Adam([p], lr=0.01)
    for g in grads:
        p.grad = np.array(g)
        adam_step([p], opt)
    assert p.data == pytest.approx(reference_adam(grads, lr=0.01), rel=1e-12)


def test_converges_on_quadratic():
    with T.precision(np.float64):
        x = scalar()
        opt = Adam([x], lr=0.01)
        for _ in range(2000):
            T.backward(T.mse_loss(x, T.Tensor(5.0)))
            opt.step()
    assert abs(x.item() - 5.0) < 0.01


def test_missing_grad_is_an_error():
    opt = Adam([scalar("a"), scalar("b")])
    opt.params[0].grad = np.array(1.0)
    with pytest.raises(RuntimeError, match="b"):
        opt.step()


def test_duplicate_names_rejected():
    with pytest.raises(ValueError):
        Adam([scalar("a"), scalar("a")])


def test_state_round_trip():
    p = T.Parameter("w", np.ones(3), dtype=np.float64)
    opt = Adam([p])
    p.grad = np.array([1.0, 2.0, 3.0])
    opt.step()
    q = T.Parameter("w", p.data.copy(), dtype=np.float64)
    other = Adam([q])
    other.load_state_arrays(opt.state_arrays(), opt.t)
    p.grad = q.grad = np.array([0.5, 0.5, 0.5])
    opt.step()
    other.step()
    assert np.array_equal(p.data, q.data)
    assert all(opt.m[k].shape == p.shape for k in opt.m)
