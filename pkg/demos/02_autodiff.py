"""The numpy autodiff engine on its own: a circular convolution, a loss and a
finite-difference check, then Adam fitting a 3x3 kernel to the neighbour count.

Run:  python3 demos/02_autodiff.py
"""
import numpy as np

from lifelens import tensor as T
from lifelens.optim import Adam

rng = np.random.default_rng(0)

with T.precision(np.float64):
    x = T.Tensor(rng.standard_normal((2, 3, 6, 6)), requires_grad=True)
    k = T.Parameter("k", rng.standard_normal((4, 3, 3, 3)))
    b = T.Parameter("b", rng.standard_normal(4))
    target = T.Tensor(rng.standard_normal((2, 4, 6, 6)))

    def loss():
        return T.mse_loss(T.sigmoid(T.conv2d_circular(x, k, b)), target)

    T.backward(loss())
    for leaf, name in [(x, "input"), (k, "kernel"), (b, "bias")]:
        num = T.numeric_grad(lambda: loss().item(), leaf.data)
        print(f"{name:>6}: relative error {T.relative_error(leaf.grad, num):.2e}")

# Learn the Moore-neighbour stencil from examples. Float32 is the default.
grids = (rng.random((64, 1, 12, 12)) < 0.4).astype(np.float32)
counts = sum(np.roll(grids, (dy, dx), axis=(2, 3))
             for dy in (-1, 0, 1) for dx in (-1, 0, 1) if dy or dx)
w = T.Parameter("w", rng.standard_normal((1, 1, 3, 3)) * 0.1)
c = T.Parameter("c", np.zeros(1))
opt = Adam([w, c], lr=0.05)
for step in range(400):
    loss = T.mse_loss(T.conv2d_circular(T.Tensor(grids), w, c), T.Tensor(counts))
    T.backward(loss)
    opt.step()
print(f"\nfinal loss {loss.item():.2e}; learned kernel:")
print(np.round(w.data[0, 0], 3))
