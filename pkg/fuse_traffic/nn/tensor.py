"""
Плотное матричное ядро с обратным режимом дифференцирования.

Каждая операция строит узел графа и замыкание `_backward` с явным правилом
градиента. Операции принимают как одиночные матрицы (rows, cols), так и
стопки матриц (batch, rows, cols) через numpy broadcasting; градиенты параметров
сворачиваются по осям broadcasting.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Callable, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from fuse_traffic.core.constants import LAYER_NORM_EPS
from fuse_traffic.core.errors import ShapeError

Matrix = NDArray[np.float64]
ArrayLike = Union["Tensor", Matrix, float, int, Sequence]

# маски сторон излома (relu, abs), пока открыт record_kinks
_kink_log: Optional[List[NDArray[np.bool_]]] = None


@contextmanager
def record_kinks() -> Iterator[List[NDArray[np.bool_]]]:
    """Собирает маски знаков входов relu и abs, вычисленных внутри блока"""
    global _kink_log
    previous, _kink_log = _kink_log, []
    try:
        yield _kink_log
    finally:
        _kink_log = previous


def _note_kink(mask: NDArray[np.bool_]) -> None:
    if _kink_log is not None:
        _kink_log.append(mask)


class Tensor:
    """Узел вычислительного графа"""

    __slots__ = ("data", "_grad", "requires_grad", "_backward", "_prev", "_op")

    def __init__(
        self,
        data: ArrayLike,
        _children: Tuple["Tensor", ...] = (),
        _op: str = "",
        requires_grad: bool = False,
    ):
        self.data: Matrix = np.asarray(data, dtype=np.float64)
        self._grad: Optional[Matrix] = None
        self.requires_grad = requires_grad or any(c.requires_grad for c in _children)
        self._backward: Callable[[], None] = lambda: None
        self._prev = _children
        self._op = _op

    @property
    def grad(self) -> Matrix:
        # выделяется при первом обращении
        if self._grad is None:
            self._grad = np.zeros_like(self.data)
        return self._grad

    @grad.setter
    def grad(self, value: Matrix) -> None:
        self._grad = value

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def backward(self) -> None:
        """Обратный проход от скалярного узла (итеративная топосортировка)"""
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[Tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for child in node._prev:
                if child.requires_grad and id(child) not in visited:
                    stack.append((child, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            node._backward()

    def _accumulate(self, g: Matrix) -> None:
        if self.requires_grad:
            self.grad = self.grad + _unbroadcast(g, self.data.shape)

    def __add__(self, other: ArrayLike) -> "Tensor":
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return add(self, neg(_as_tensor(other)))

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return add(_as_tensor(other), neg(self))

    def __mul__(self, other: ArrayLike) -> "Tensor":
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __matmul__(self, other: ArrayLike) -> "Tensor":
        return matmul(self, other)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op!r})"


class Parameter(Tensor):
    """Обучаемый (или замороженный) параметр. `value` хранит данные, `grad` градиент той же формы."""

    __slots__ = ("name", "trainable")

    def __init__(self, value: ArrayLike, name: str, trainable: bool = True):
        super().__init__(np.array(value, dtype=np.float64), requires_grad=trainable)
        self.name = name
        self.trainable = trainable

    @property
    def value(self) -> Matrix:
        return self.data

    @value.setter
    def value(self, new: Matrix) -> None:
        self.data = np.asarray(new, dtype=np.float64)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape}, trainable={self.trainable})"


def _as_tensor(x: ArrayLike) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: Matrix, shape: Tuple[int, ...]) -> Matrix:
    """Сворачивает градиент обратно к форме операнда после broadcasting"""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _swap(m: Matrix) -> Matrix:
    return np.swapaxes(m, -1, -2)


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data + b.data, (a, b), "+")

    def _backward() -> None:
        a._accumulate(out.grad)
        b._accumulate(out.grad)

    out._backward = _backward
    return out


def neg(a: ArrayLike) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(-a.data, (a,), "neg")

    def _backward() -> None:
        a._accumulate(-out.grad)

    out._backward = _backward
    return out


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    """Поэлементное произведение (с broadcasting)"""
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data * b.data, (a, b), "*")

    def _backward() -> None:
        a._accumulate(out.grad * b.data)
        b._accumulate(out.grad * a.data)

    out._backward = _backward
    return out


def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    if b.data.ndim == 2 and a.data.ndim > 2:
        return _matmul_flat(a, b)
    out = Tensor(np.matmul(a.data, b.data), (a, b), "@")

    def _backward() -> None:
        if a.requires_grad:
            a._accumulate(np.matmul(out.grad, _swap(b.data)))
        if b.requires_grad:
            b._accumulate(np.matmul(_swap(a.data), out.grad))

    out._backward = _backward
    return out


def _matmul_flat(a: Tensor, b: Tensor) -> Tensor:
    """Стопка (..., rows, k) @ (k, cols) одним GEMM по сплющенным строкам"""
    lead = a.shape[:-1]
    a2 = a.data.reshape(-1, a.shape[-1])
    out = Tensor((a2 @ b.data).reshape(*lead, b.shape[-1]), (a, b), "@")

    def _backward() -> None:
        g2 = out.grad.reshape(-1, b.shape[-1])
        if a.requires_grad:
            a._accumulate((g2 @ b.data.T).reshape(a.shape))
        if b.requires_grad:
            b._accumulate(a2.T @ g2)

    out._backward = _backward
    return out


def transpose(a: ArrayLike) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(_swap(a.data), (a,), "T")

    def _backward() -> None:
        a._accumulate(_swap(out.grad))

    out._backward = _backward
    return out


def relu(a: ArrayLike) -> Tensor:
    a = _as_tensor(a)
    _note_kink(a.data > 0.0)
    out = Tensor(np.maximum(a.data, 0.0), (a,), "relu")

    def _backward() -> None:
        a._accumulate(out.grad * (a.data > 0.0))

    out._backward = _backward
    return out


def sigmoid(a: ArrayLike) -> Tensor:
    a = _as_tensor(a)
    # устойчивая форма для больших |x|
    s = np.where(
        a.data >= 0,
        1.0 / (1.0 + np.exp(-np.abs(a.data))),
        np.exp(-np.abs(a.data)) / (1.0 + np.exp(-np.abs(a.data))),
    )
    out = Tensor(s, (a,), "sigmoid")

    def _backward() -> None:
        a._accumulate(out.grad * s * (1.0 - s))

    out._backward = _backward
    return out


def absolute(a: ArrayLike) -> Tensor:
    a = _as_tensor(a)
    _note_kink(a.data >= 0.0)
    out = Tensor(np.abs(a.data), (a,), "abs")

    def _backward() -> None:
        a._accumulate(out.grad * np.sign(a.data))

    out._backward = _backward
    return out


def sum_all(a: ArrayLike) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.sum(a.data), (a,), "sum")

    def _backward() -> None:
        a._accumulate(np.broadcast_to(out.grad, a.data.shape))

    out._backward = _backward
    return out


def scale(a: ArrayLike, factor: float) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data * factor, (a,), "scale")

    def _backward() -> None:
        a._accumulate(out.grad * factor)

    out._backward = _backward
    return out


def softmax_rows(m: ArrayLike) -> Tensor:
    """Softmax по последней оси с вычитанием построчного максимума"""
    m = _as_tensor(m)
    shifted = m.data - np.max(m.data, axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / np.sum(e, axis=-1, keepdims=True)
    out = Tensor(s, (m,), "softmax")

    def _backward() -> None:
        g = out.grad
        m._accumulate(s * (g - np.sum(g * s, axis=-1, keepdims=True)))

    out._backward = _backward
    return out


def layer_norm_rows(
    m: ArrayLike, gamma: Tensor, beta: Tensor, eps: float = LAYER_NORM_EPS
) -> Tensor:
    """
    LayerNorm по строкам: (x - mean) / sqrt(var + eps) * gamma + beta.

    Дисперсия популяционная (деление на число столбцов).
    """
    m = _as_tensor(m)
    cols = m.shape[-1]
    if gamma.shape != (1, cols) or beta.shape != (1, cols):
        raise ShapeError(
            f"layer norm expects gamma/beta of shape (1, {cols}), got {gamma.shape} and {beta.shape}"
        )
    if eps <= 0:
        raise ValueError("eps must be positive")
    mean = np.mean(m.data, axis=-1, keepdims=True)
    centered = m.data - mean
    var = np.mean(centered * centered, axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = Tensor(xhat * gamma.data + beta.data, (m, gamma, beta), "layernorm")

    def _backward() -> None:
        g = out.grad
        gamma._accumulate(g * xhat)
        beta._accumulate(g)
        if m.requires_grad:
            dxhat = g * gamma.data
            dx = inv * (
                dxhat
                - np.mean(dxhat, axis=-1, keepdims=True)
                - xhat * np.mean(dxhat * xhat, axis=-1, keepdims=True)
            )
            m._accumulate(dx)

    out._backward = _backward
    return out


def concat_cols(parts: Sequence[ArrayLike]) -> Tensor:
    tensors = [_as_tensor(p) for p in parts]
    widths = [t.shape[-1] for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=-1), tuple(tensors), "concat")

    def _backward() -> None:
        start = 0
        for t, w in zip(tensors, widths):
            t._accumulate(out.grad[..., start : start + w])
            start += w

    out._backward = _backward
    return out


def slice_cols(a: ArrayLike, start: int, stop: int) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data[..., start:stop], (a,), "slice")

    def _backward() -> None:
        if a.requires_grad:
            g = np.zeros_like(a.data)
            g[..., start:stop] = out.grad
            a._accumulate(g)

    out._backward = _backward
    return out


def dropout(a: ArrayLike, rate: float, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout; при rate == 0 или rng is None возвращает вход"""
    a = _as_tensor(a)
    if rng is None or rate <= 0.0:
        return a
    keep = (rng.random(a.shape) >= rate).astype(np.float64) / (1.0 - rate)
    return mul(a, Tensor(keep))


def parameters_zero_grad(params: Iterable[Parameter]) -> None:
    for p in params:
        p.zero_grad()


def shift_axis(a: ArrayLike, axis: int, offset: int) -> Tensor:
    """Причинный сдвиг вдоль оси: out[t] = a[t - offset], первые offset позиций нулевые"""
    a = _as_tensor(a)
    if offset < 0:
        raise ValueError("offset must be non-negative")
    size = a.shape[axis]
    data = np.zeros_like(a.data)
    if offset < size:
        dst = [slice(None)] * a.data.ndim
        src = [slice(None)] * a.data.ndim
        dst[axis] = slice(offset, size)
        src[axis] = slice(0, size - offset)
        data[tuple(dst)] = a.data[tuple(src)]
    out = Tensor(data, (a,), "shift")

    def _backward() -> None:
        if a.requires_grad and offset < size:
            g = np.zeros_like(a.data)
            g[tuple(src)] = out.grad[tuple(dst)]
            a._accumulate(g)

    out._backward = _backward
    return out


def select_axis(a: ArrayLike, axis: int, index: int) -> Tensor:
    """Срез одного индекса вдоль оси (ось удаляется)"""
    a = _as_tensor(a)
    out = Tensor(np.take(a.data, index, axis=axis), (a,), "select")

    def _backward() -> None:
        if a.requires_grad:
            g = np.zeros_like(a.data)
            where = [slice(None)] * a.data.ndim
            where[axis] = index
            g[tuple(where)] = out.grad
            a._accumulate(g)

    out._backward = _backward
    return out


def mean_axis(a: ArrayLike, axis: int) -> Tensor:
    a = _as_tensor(a)
    size = a.shape[axis]
    out = Tensor(np.mean(a.data, axis=axis), (a,), "mean")

    def _backward() -> None:
        g = np.expand_dims(out.grad, axis) / size
        a._accumulate(np.broadcast_to(g, a.data.shape))

    out._backward = _backward
    return out
