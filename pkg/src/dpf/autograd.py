"""Reverse-mode automatic differentiation on dense numpy arrays.

A forward pass builds a tape of ``Tensor`` nodes; ``backward`` walks the
tape in reverse topological order and accumulates gradients into every
contributing tensor (parameters keep accumulating across calls until
zeroed).  float32 is the working dtype for models; every op also runs in
float64, which the gradient checker uses to keep finite differences sharp.

Inference code wraps calls in :func:`no_grad` to skip tape construction.
"""

from __future__ import annotations

import contextlib

import numpy as np

from .errors import ContractError
from .kernels import active_backend

_FLOAT_DTYPES = (np.float32, np.float64)
_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable tape construction inside the block."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _as_array(value, dtype) -> np.ndarray:
    arr = np.asarray(value, dtype=dtype)
    return arr


class Tensor:
    """A node in the computation graph."""

    __slots__ = ("data", "grad", "requires_grad", "_prev", "_backward")

    def __init__(self, data, requires_grad: bool = False, _prev=(), _backward=None):
        data = np.asarray(data)
        if data.dtype.type not in _FLOAT_DTYPES:
            data = data.astype(np.float32)
        self.data = data
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad and _grad_enabled
        self._prev = _prev if self.requires_grad else ()
        self._backward = _backward if self.requires_grad else None

    # -- basic introspection -------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, grad={self.requires_grad})"

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() on tensor of size {self.data.size}")
        return float(self.data.reshape(()))

    # -- autograd machinery ---------------------------------------------------
    def _accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        """Accumulate d(self)/d(leaf) into every requiring tensor's ``grad``."""
        if self.data.size != 1:
            raise ContractError("backward() requires a scalar loss")
        if not self.requires_grad:
            return
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for child in node._prev:
                if child.requires_grad and id(child) not in visited:
                    stack.append((child, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    # -- operator plumbing ----------------------------------------------------
    def _coerce(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            if other.dtype != self.dtype:
                raise ContractError(f"dtype mismatch: {self.dtype} vs {other.dtype}")
            return other
        return Tensor(_as_array(other, self.dtype))

    def __add__(self, other):
        other = self._coerce(other)
        out = Tensor(self.data + other.data,
                     requires_grad=self.requires_grad or other.requires_grad,
                     _prev=(self, other))

        def _bw():
            if self.requires_grad:
                self._accumulate(_unbroadcast(out.grad, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(out.grad, other.shape))
        out._backward = _bw
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor(-self.data, requires_grad=self.requires_grad, _prev=(self,))

        def _bw():
            if self.requires_grad:
                self._accumulate(-out.grad)
        out._backward = _bw
        return out

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        out = Tensor(self.data * other.data,
                     requires_grad=self.requires_grad or other.requires_grad,
                     _prev=(self, other))

        def _bw():
            if self.requires_grad:
                self._accumulate(_unbroadcast(out.grad * other.data, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(out.grad * self.data, other.shape))
        out._backward = _bw
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        out = Tensor(self.data / other.data,
                     requires_grad=self.requires_grad or other.requires_grad,
                     _prev=(self, other))

        def _bw():
            if self.requires_grad:
                self._accumulate(_unbroadcast(out.grad / other.data, self.shape))
            if other.requires_grad:
                g = -out.grad * self.data / (other.data * other.data)
                other._accumulate(_unbroadcast(g, other.shape))
        out._backward = _bw
        return out

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __matmul__(self, other):
        other = self._coerce(other)
        if self.data.ndim != 2 or other.data.ndim != 2:
            raise ContractError("matmul expects 2-D operands")
        out = Tensor(self.data @ other.data,
                     requires_grad=self.requires_grad or other.requires_grad,
                     _prev=(self, other))

        def _bw():
            if self.requires_grad:
                self._accumulate(out.grad @ other.data.T)
            if other.requires_grad:
                other._accumulate(self.data.T @ out.grad)
        out._backward = _bw
        return out

    # -- elementwise nonlinearities -------------------------------------------
    def relu(self):
        out = Tensor(np.maximum(self.data, 0), requires_grad=self.requires_grad, _prev=(self,))

        def _bw():
            if self.requires_grad:
                # subgradient 0 at the kink
                self._accumulate(out.grad * (self.data > 0))
        out._backward = _bw
        return out

    def exp(self):
        out = Tensor(np.exp(self.data), requires_grad=self.requires_grad, _prev=(self,))

        def _bw():
            if self.requires_grad:
                self._accumulate(out.grad * out.data)
        out._backward = _bw
        return out

    def log(self):
        out = Tensor(np.log(self.data), requires_grad=self.requires_grad, _prev=(self,))

        def _bw():
            if self.requires_grad:
                self._accumulate(out.grad / self.data)
        out._backward = _bw
        return out

    def sigmoid(self):
        s = 1.0 / (1.0 + np.exp(-self.data))
        out = Tensor(s, requires_grad=self.requires_grad, _prev=(self,))

        def _bw():
            if self.requires_grad:
                self._accumulate(out.grad * s * (1.0 - s))
        out._backward = _bw
        return out

    # -- reductions and shape ops ----------------------------------------------
    def sum(self, axis=None, keepdims: bool = False):
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims),
                     requires_grad=self.requires_grad, _prev=(self,))

        def _bw():
            if self.requires_grad:
                g = out.grad
                if not keepdims and axis is not None:
                    axes = (axis,) if isinstance(axis, int) else tuple(axis)
                    for ax in sorted(a % self.data.ndim for a in axes):
                        g = np.expand_dims(g, ax)
                self._accumulate(np.broadcast_to(g, self.shape).copy()
                                 if g.shape != self.shape else g)
        out._backward = _bw
        return out

    def mean(self, axis=None, keepdims: bool = False):
        count = self.data.size if axis is None else np.prod(
            [self.data.shape[a] for a in ((axis,) if isinstance(axis, int) else axis)])
        return self.sum(axis=axis, keepdims=keepdims) * float(1.0 / count)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = Tensor(self.data.reshape(shape), requires_grad=self.requires_grad, _prev=(self,))

        def _bw():
            if self.requires_grad:
                self._accumulate(out.grad.reshape(self.shape))
        out._backward = _bw
        return out

    def permute(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inv = np.argsort(axes)
        out = Tensor(self.data.transpose(axes).copy(),
                     requires_grad=self.requires_grad, _prev=(self,))

        def _bw():
            if self.requires_grad:
                self._accumulate(out.grad.transpose(inv))
        out._backward = _bw
        return out

    def __getitem__(self, key):
        out = Tensor(self.data[key].copy() if isinstance(self.data[key], np.ndarray)
                     else self.data[key],
                     requires_grad=self.requires_grad, _prev=(self,))

        def _bw():
            if self.requires_grad:
                g = np.zeros_like(self.data)
                g[key] += out.grad
                self._accumulate(g)
        out._backward = _bw
        return out


class Parameter(Tensor):
    """A named leaf tensor with persistent gradient storage."""

    __slots__ = ("name",)

    def __init__(self, data, name: str):
        super().__init__(np.asarray(data), requires_grad=True)
        # Parameters stay differentiable even when created under no_grad.
        self.requires_grad = True
        self.name = name
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Parameter({self.name}, shape={self.data.shape})"


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient over axes that were broadcast in the forward op."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# -- free functions -------------------------------------------------------------

def maximum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise max; ties route the gradient to ``a``."""
    b = a._coerce(b)
    out = Tensor(np.maximum(a.data, b.data),
                 requires_grad=a.requires_grad or b.requires_grad, _prev=(a, b))

    def _bw():
        pick_a = a.data >= b.data
        if a.requires_grad:
            a._accumulate(_unbroadcast(out.grad * pick_a, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(out.grad * ~pick_a, b.shape))
    out._backward = _bw
    return out


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    datas = [t.data for t in tensors]
    out = Tensor(np.concatenate(datas, axis=axis),
                 requires_grad=any(t.requires_grad for t in tensors),
                 _prev=tuple(tensors))
    sizes = [d.shape[axis] for d in datas]
    offsets = np.cumsum([0] + sizes)

    def _bw():
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * out.grad.ndim
                idx[axis] = slice(lo, hi)
                t._accumulate(out.grad[tuple(idx)])
    out._backward = _bw
    return out


def gather_rows(t: Tensor, idx: np.ndarray) -> Tensor:
    """Select rows of a 2-D tensor; duplicate indices accumulate on backward."""
    if t.data.ndim != 2:
        raise ContractError("gather_rows expects a 2-D tensor")
    idx = np.asarray(idx, dtype=np.int64)
    out = Tensor(t.data[idx], requires_grad=t.requires_grad, _prev=(t,))

    def _bw():
        if t.requires_grad:
            g = np.zeros_like(t.data)
            np.add.at(g, idx, out.grad)
            t._accumulate(g)
    out._backward = _bw
    return out


def gather_cols(t: Tensor, idx: np.ndarray) -> Tensor:
    """Per-row column pick from a 2-D tensor: out[i] = t[i, idx[i]]."""
    if t.data.ndim != 2:
        raise ContractError("gather_cols expects a 2-D tensor")
    idx = np.asarray(idx, dtype=np.int64)
    rows = np.arange(t.data.shape[0])
    out = Tensor(t.data[rows, idx], requires_grad=t.requires_grad, _prev=(t,))

    def _bw():
        if t.requires_grad:
            g = np.zeros_like(t.data)
            g[rows, idx] += out.grad
            t._accumulate(g)
    out._backward = _bw
    return out


def softmax(t: Tensor, axis: int = -1) -> Tensor:
    """Shift-invariant softmax built from primitive ops."""
    shift = Tensor(np.max(t.data, axis=axis, keepdims=True))
    e = (t - shift).exp()
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(t: Tensor, axis: int = -1) -> Tensor:
    shift = Tensor(np.max(t.data, axis=axis, keepdims=True))
    z = t - shift
    return z - z.exp().sum(axis=axis, keepdims=True).log()


def conv2d(x: Tensor, w: Tensor, b: Tensor, stride: int = 1, pad: int = 1) -> Tensor:
    """2-D convolution, NCHW layout; runs on the selected kernel backend."""
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ContractError("conv2d expects (B,C,H,W) input and (O,C,kh,kw) weight")
    if x.data.shape[1] != w.data.shape[1]:
        raise ContractError(f"conv2d channel mismatch: {x.data.shape[1]} vs {w.data.shape[1]}")
    backend = active_backend()
    out_data = backend.conv2d_forward(x.data, w.data, b.data, stride, pad)
    out = Tensor(out_data,
                 requires_grad=x.requires_grad or w.requires_grad or b.requires_grad,
                 _prev=(x, w, b))

    def _bw():
        gx, gw, gb = backend.conv2d_backward(x.data, w.data, stride, pad, out.grad)
        if x.requires_grad:
            x._accumulate(gx)
        if w.requires_grad:
            w._accumulate(gw)
        if b.requires_grad:
            b._accumulate(gb)
    out._backward = _bw
    return out


def bilinear_sample(maps: Tensor, scene: np.ndarray, fy: np.ndarray, fx: np.ndarray) -> Tensor:
    """Sample (B,C,H,W) feature maps at fractional indices -> (N,C).

    ``scene`` selects the map per sample point; indices clamp at borders the
    same way :func:`dpf.geometry.neighbors_batch` does.  Coordinates are data
    (no gradient); gradients flow into the maps.
    """
    if maps.data.ndim != 4:
        raise ContractError("bilinear_sample expects (B,C,H,W) maps")
    scene = np.ascontiguousarray(scene, dtype=np.int64)
    fy = np.ascontiguousarray(fy, dtype=np.float64)
    fx = np.ascontiguousarray(fx, dtype=np.float64)
    backend = active_backend()
    out_data = backend.bilinear_forward(maps.data, scene, fy, fx)
    out = Tensor(out_data, requires_grad=maps.requires_grad, _prev=(maps,))

    def _bw():
        if maps.requires_grad:
            maps._accumulate(backend.bilinear_backward(maps.data.shape, scene, fy, fx,
                                                       out.grad, maps.data.dtype))
    out._backward = _bw
    return out


def assert_finite(t: Tensor, context: str):
    from .errors import NumericsError
    if not np.all(np.isfinite(t.data)):
        raise NumericsError(f"non-finite values in {context}")
