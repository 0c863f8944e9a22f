"""A small reverse-mode autodiff engine over numpy arrays.

Every operation that touches a tensor with ``requires_grad`` records a
closure on the output tensor; :func:`backward` walks that tape in reverse
topological order. Graphs are built per forward pass and dropped once the
output goes out of scope.

Images use the ``[batch, channels, height, width]`` layout throughout.
"""

from __future__ import annotations

import contextlib
import math

import numpy as np

_state = {"dtype": np.dtype(np.float32), "grad": True}

BCE_EPS = 1e-7


def default_dtype() -> np.dtype:
    return _state["dtype"]


def set_default_dtype(dtype) -> None:
    dtype = np.dtype(dtype)
    if dtype not in (np.float32, np.float64):
        raise ValueError(f"unsupported dtype {dtype}")
    _state["dtype"] = dtype


@contextlib.contextmanager
def precision(dtype):
    """Temporarily switch the dtype used for new tensors (e.g. float64 for grad checks)."""
    old = _state["dtype"]
    set_default_dtype(dtype)
    try:
        yield
    finally:
        _state["dtype"] = old


@contextlib.contextmanager
def no_grad():
    old = _state["grad"]
    _state["grad"] = False
    try:
        yield
    finally:
        _state["grad"] = old


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data = np.array(data, dtype=dtype or default_dtype())
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.data.dtype)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __mul__(self, c):
        return scale(self, c)

    __rmul__ = __mul__


class Parameter(Tensor):
    """A named leaf tensor that always requires grad."""

    __slots__ = ("name",)

    def __init__(self, name: str, data, dtype=None):
        super().__init__(data, requires_grad=True, dtype=dtype)
        self.name = name

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape}, dtype={self.dtype})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data: np.ndarray, parents: tuple, backward_fn) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out._parents = ()
    out._backward = None
    out.requires_grad = False
    if _state["grad"] and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    return out


def _check_same_shape(a: Tensor, b: Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


# -- elementwise and reductions -------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape(a, b, "add")

    def back(g):
        return g, g

    return _result(a.data + b.data, (a, b), back)


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)

    def back(g):
        return (g * c,)

    return _result(a.data * a.data.dtype.type(c), (a,), back)


def mean(a) -> Tensor:
    a = as_tensor(a)
    n = a.size

    def back(g):
        return (np.full(a.shape, g / n, dtype=a.dtype),)

    return _result(np.asarray(a.data.mean(), dtype=a.dtype), (a,), back)


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0

    def back(g):
        return (g * mask,)

    return _result(x.data * mask, (x,), back)


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    # split by sign so exp never overflows
    d = x.data
    e = np.exp(-np.abs(d))
    y = np.where(d >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(d.dtype)

    def back(g):
        return (g * y * (1.0 - y),)

    return _result(y, (x,), back)


def log(x) -> Tensor:
    x = as_tensor(x)
    if np.any(x.data <= 0):
        raise ValueError("log of non-positive value")

    def back(g):
        return (g / x.data,)

    return _result(np.log(x.data), (x,), back)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def back(g):
        return tuple(np.split(g, splits, axis=axis))

    return _result(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), back)


# -- losses ---------------------------------------------------------------------


def mse_loss(pred, target) -> Tensor:
    """Mean of squared differences over all elements."""
    pred, target = as_tensor(pred), as_tensor(target)
    _check_same_shape(pred, target, "mse_loss")
    diff = pred.data - target.data
    n = diff.size

    def back(g):
        d = (2.0 / n) * g * diff
        return d, -d

    return _result(np.asarray(np.mean(diff * diff), dtype=diff.dtype), (pred, target), back)


def bce_loss(prob, label) -> Tensor:
    """Mean binary cross-entropy; probabilities are clamped to [eps, 1 - eps]."""
    prob, label = as_tensor(prob), as_tensor(label)
    _check_same_shape(prob, label, "bce_loss")
    p = np.clip(prob.data, BCE_EPS, 1.0 - BCE_EPS)
    y = label.data
    n = p.size
    loss = -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    inside = (prob.data > BCE_EPS) & (prob.data < 1.0 - BCE_EPS)

    def back(g):
        dp = g * (p - y) / (p * (1.0 - p)) / n
        return dp * inside, g * (np.log(1.0 - p) - np.log(p)) / n

    return _result(np.asarray(loss, dtype=p.dtype), (prob, label), back)


# -- layers ---------------------------------------------------------------------


def dense(x, weight, bias) -> Tensor:
    """``x @ weight.T + bias`` for ``x`` [B, F], ``weight`` [O, F], ``bias`` [O]."""
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    if x.data.ndim != 2 or weight.data.ndim != 2 or bias.data.ndim != 1:
        raise ValueError("dense expects x [B,F], weight [O,F], bias [O]")
    if x.shape[1] != weight.shape[1] or weight.shape[0] != bias.shape[0]:
        raise ValueError(f"dense: shapes {x.shape}, {weight.shape}, {bias.shape} do not conform")

    def back(g):
        return g @ weight.data, g.T @ x.data, g.sum(axis=0)

    return _result(x.data @ weight.data.T + bias.data, (x, weight, bias), back)


def global_mean_pool(x) -> Tensor:
    """Average over the spatial axes: [B, C, H, W] -> [B, C]."""
    x = as_tensor(x)
    if x.data.ndim != 4:
        raise ValueError(f"global_mean_pool expects [B,C,H,W], got {x.shape}")
    hw = x.shape[2] * x.shape[3]

    def back(g):
        return (np.broadcast_to(g[:, :, None, None] / hw, x.shape).copy(),)

    return _result(x.data.mean(axis=(2, 3)), (x,), back)


def conv2d_circular(x, kernel, bias) -> Tensor:
    """Stride-1 cross-correlation with wrap-around padding; keeps H and W.

    ``x`` [B, Cin, H, W], ``kernel`` [Cout, Cin, k, k] with odd k, ``bias`` [Cout].
    """
    x, kernel, bias = as_tensor(x), as_tensor(kernel), as_tensor(bias)
    if x.data.ndim != 4 or kernel.data.ndim != 4 or bias.data.ndim != 1:
        raise ValueError("conv2d_circular expects x [B,C,H,W], kernel [O,C,k,k], bias [O]")
    B, C, H, W = x.shape
    O, Ck, k, k2 = kernel.shape
    if Ck != C:
        raise ValueError(f"conv2d_circular: input has {C} channels, kernel expects {Ck}")
    if k != k2 or k % 2 == 0:
        raise ValueError(f"conv2d_circular: kernel must be square with odd size, got {k}x{k2}")
    if bias.shape[0] != O:
        raise ValueError(f"conv2d_circular: bias has {bias.shape[0]} entries, expected {O}")
    p = (k - 1) // 2
    if p > H or p > W:
        raise ValueError("conv2d_circular: kernel larger than the wrapped grid")

    # work channel-major, [C, B, H, W], so each column slab is one slice copy
    xp = np.pad(x.data.transpose(1, 0, 2, 3), ((0, 0), (0, 0), (p, p), (p, p)), mode="wrap")
    cols = np.empty((C, k, k, B, H, W), dtype=xp.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, i, j] = xp[:, :, i:i + H, j:j + W]
    cols = cols.reshape(C * k * k, B * H * W)
    wmat = kernel.data.reshape(O, C * k * k)
    out = wmat @ cols
    out += bias.data[:, None]
    # [O, B, H, W] memory viewed as [B, O, H, W]
    out = out.reshape(O, B, H, W).transpose(1, 0, 2, 3)

    def back(g):
        gm = g.transpose(1, 0, 2, 3).reshape(O, B * H * W)
        dk = (gm @ cols.T).reshape(O, C, k, k)
        db = gm.sum(axis=1)
        dx = None
        if x.requires_grad:
            dcols = (wmat.T @ gm).reshape(C, k, k, B, H, W)
            dxp = np.zeros((C, B, H + 2 * p, W + 2 * p), dtype=dcols.dtype)
            for i in range(k):
                for j in range(k):
                    dxp[:, :, i:i + H, j:j + W] += dcols[:, i, j]
            dx = _fold_wrap(dxp, p).transpose(1, 0, 2, 3)
        return dx, dk, db

    return _result(out, (x, kernel, bias), back)


def _fold_wrap(dxp: np.ndarray, p: int) -> np.ndarray:
    """Add the gradient that landed in wrap-around padding back onto the cells it copies."""
    if p == 0:
        return dxp
    dxp[..., -2 * p:-p, :] += dxp[..., :p, :]
    dxp[..., p:2 * p, :] += dxp[..., -p:, :]
    dxp = dxp[..., p:-p, :]
    dxp[..., -2 * p:-p] += dxp[..., :p]
    dxp[..., p:2 * p] += dxp[..., -p:]
    return dxp[..., p:-p]


# -- backward pass ----------------------------------------------------------------


def _topo_order(root: Tensor) -> list[Tensor]:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every reachable leaf that requires grad."""
    if not isinstance(loss, Tensor) or loss.data.ndim != 0:
        raise ValueError("backward needs a scalar tensor")
    if not loss.requires_grad:
        raise ValueError("loss does not depend on any tensor that requires grad")
    grads = {id(loss): np.ones((), dtype=loss.dtype)}
    for node in reversed(_topo_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient reached {node!r}")
            node.grad = g.astype(node.dtype, copy=True) if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = pg if key not in grads else grads[key] + pg


def numeric_grad(f, arr: np.ndarray, h: float = 1e-5, indices=None) -> np.ndarray:
    """Central finite differences of scalar ``f()`` w.r.t. entries of ``arr`` (in place perturbation).

    ``indices`` restricts the check to a subset of flat positions; others stay 0.
    """
    out = np.zeros_like(arr, dtype=np.float64)
    flat = arr.reshape(-1)
    idx = range(flat.size) if indices is None else indices
    for i in idx:
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        out.reshape(-1)[i] = (fp - fm) / (2 * h)
    return out


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max absolute deviation scaled by the larger gradient magnitude of the two."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    scale_ = max(np.abs(a).max(initial=0.0), np.abs(n).max(initial=0.0))
    if scale_ == 0.0:
        return 0.0
    return float(np.abs(a - n).max() / scale_)


def fan_in_normal(rng: np.random.Generator, shape: tuple) -> np.ndarray:
    fan_in = int(np.prod(shape[1:]))
    return rng.standard_normal(shape) * math.sqrt(2.0 / fan_in)
