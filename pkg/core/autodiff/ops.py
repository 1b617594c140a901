# core/autodiff/ops.py
"""
Operaciones hacia adelante registradas en la cinta
Sólo el conjunto que necesita el zoológico de modelos; sin broadcasting general
"""
from typing import Sequence, Tuple

import numpy as np

from core.autodiff.tensor import Tensor
from core.errors import DivergenceError, GraphError, ShapeError


def _as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _emit(op: str, data: np.ndarray, parents: Tuple[Tensor, ...], backward_fn) -> Tensor:
    """
    Crear el nodo de salida y registrarlo si algún operando está en una cinta
    """
    if not np.all(np.isfinite(data)):
        raise DivergenceError(f"{op}: valores no finitos en la salida")

    tapes = {id(p.tape): p.tape for p in parents if p.tape is not None}
    if len(tapes) > 1:
        raise GraphError(f"{op}: operandos de cintas distintas")
    if not tapes:
        return Tensor(data, op=op)

    tape = next(iter(tapes.values()))
    out = Tensor(data, parents=parents, backward_fn=backward_fn, op=op)
    return tape.record(out)


def _same_shape(op: str, a: Tensor, b: Tensor):
    if a.shape != b.shape:
        raise ShapeError(op, a.shape, b.shape)


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _same_shape('add', a, b)
    return _emit('add', a.data + b.data, (a, b), lambda g: (g, g))


def mul(a, b) -> Tensor:
    """Producto elemento a elemento"""
    a, b = _as_tensor(a), _as_tensor(b)
    _same_shape('mul', a, b)
    a_data, b_data = a.data, b.data
    return _emit('mul', a_data * b_data, (a, b), lambda g: (g * b_data, g * a_data))


def scale(a, factor: float) -> Tensor:
    a = _as_tensor(a)
    factor = float(factor)
    return _emit('scale', a.data * factor, (a,), lambda g: (g * factor,))


def matmul(a, b) -> Tensor:
    """
    Producto matricial (n, k) @ (k, m)
    """
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError('matmul', a.shape, b.shape)
    a_data, b_data = a.data, b.data

    def backward(g):
        return g @ b_data.T, a_data.T @ g

    return _emit('matmul', a_data @ b_data, (a, b), backward)


def bias_add(x, bias) -> Tensor:
    """
    Sumar sesgo por columna (N, F) o por canal (N, C, H, W)
    """
    x, bias = _as_tensor(x), _as_tensor(bias)
    if bias.data.ndim != 1 or x.data.ndim not in (2, 4) or x.shape[1] != bias.shape[0]:
        raise ShapeError('bias_add', x.shape, bias.shape)

    if x.data.ndim == 2:
        data = x.data + bias.data[None, :]
        reduce_axes = (0,)
    else:
        data = x.data + bias.data[None, :, None, None]
        reduce_axes = (0, 2, 3)

    return _emit('bias_add', data, (x, bias), lambda g: (g, g.sum(axis=reduce_axes)))


def conv2d(x, weight) -> Tensor:
    """
    Convolución 2D directa, paso 1, relleno con ceros 'same'

    Args:
        x: Entrada (N, C, H, W)
        weight: Núcleos (O, C, k, k) con k impar

    Returns:
        Tensor: (N, O, H, W)
    """
    x, weight = _as_tensor(x), _as_tensor(weight)
    if (x.data.ndim != 4 or weight.data.ndim != 4 or x.shape[1] != weight.shape[1]
            or weight.shape[2] != weight.shape[3] or weight.shape[2] % 2 == 0):
        raise ShapeError('conv2d', x.shape, weight.shape)

    n, _, h, w = x.shape
    out_ch, _, k, _ = weight.shape
    pad = k // 2
    x_pad = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    w_data = weight.data

    out = np.zeros((n, out_ch, h, w))
    for di in range(k):
        for dj in range(k):
            window = x_pad[:, :, di:di + h, dj:dj + w]
            out += np.tensordot(window, w_data[:, :, di, dj], axes=([1], [1])).transpose(0, 3, 1, 2)

    def backward(g):
        grad_x_pad = np.zeros_like(x_pad)
        grad_w = np.zeros_like(w_data)
        for di in range(k):
            for dj in range(k):
                window = x_pad[:, :, di:di + h, dj:dj + w]
                grad_w[:, :, di, dj] = np.tensordot(g, window, axes=([0, 2, 3], [0, 2, 3]))
                grad_x_pad[:, :, di:di + h, dj:dj + w] += (
                    np.tensordot(g, w_data[:, :, di, dj], axes=([1], [0])).transpose(0, 3, 1, 2))
        return grad_x_pad[:, :, pad:pad + h, pad:pad + w], grad_w

    return _emit('conv2d', out, (x, weight), backward)


def relu(x) -> Tensor:
    x = _as_tensor(x)
    mask = x.data > 0
    return _emit('relu', np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def maxpool2x2(x) -> Tensor:
    """
    Max-pooling 2x2 con paso 2; H y W deben ser pares
    """
    x = _as_tensor(x)
    if x.data.ndim != 4 or x.shape[2] % 2 or x.shape[3] % 2:
        raise ShapeError('maxpool2x2', x.shape, (2, 2), "se requieren H y W pares")

    n, c, h, w = x.shape
    blocks = (x.data.reshape(n, c, h // 2, 2, w // 2, 2)
              .transpose(0, 1, 2, 4, 3, 5)
              .reshape(n, c, h // 2, w // 2, 4))
    # Primer máximo en caso de empate
    winner = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, winner[..., None], axis=-1)[..., 0]

    def backward(g):
        grad_blocks = np.zeros_like(blocks)
        np.put_along_axis(grad_blocks, winner[..., None], g[..., None], axis=-1)
        grad_x = (grad_blocks.reshape(n, c, h // 2, w // 2, 2, 2)
                  .transpose(0, 1, 2, 4, 3, 5)
                  .reshape(n, c, h, w))
        return (grad_x,)

    return _emit('maxpool2x2', out, (x,), backward)


def reshape(x, shape: Sequence[int]) -> Tensor:
    x = _as_tensor(x)
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != x.size:
        raise ShapeError('reshape', x.shape, shape)
    original = x.shape
    return _emit('reshape', x.data.reshape(shape), (x,), lambda g: (g.reshape(original),))


def flatten(x) -> Tensor:
    """(N, ...) -> (N, resto)"""
    x = _as_tensor(x)
    return reshape(x, (x.shape[0], int(np.prod(x.shape[1:]))))


def block(flat, offset: int, shape: Sequence[int]) -> Tensor:
    """
    Vista de un bloque contiguo del vector plano de parámetros
    """
    flat = _as_tensor(flat)
    shape = tuple(int(s) for s in shape)
    count = int(np.prod(shape))
    if flat.data.ndim != 1 or offset < 0 or offset + count > flat.size:
        raise ShapeError('block', flat.shape, shape, f"offset {offset}")
    total = flat.size

    def backward(g):
        grad = np.zeros(total)
        grad[offset:offset + count] = g.reshape(-1)
        return (grad,)

    return _emit('block', flat.data[offset:offset + count].reshape(shape), (flat,), backward)


def total_sum(x) -> Tensor:
    x = _as_tensor(x)
    original = x.shape
    return _emit('sum', np.asarray(x.data.sum()), (x,), lambda g: (np.full(original, float(g)),))


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """log-softmax estable por filas (numpy puro, fuera de la cinta)"""
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def softmax_cross_entropy(logits, labels) -> Tensor:
    """
    Entropía cruzada softmax promediada sobre el lote

    Args:
        logits: (N, c)
        labels: N enteros en [0, c)

    Returns:
        Tensor: escalar
    """
    logits = _as_tensor(logits)
    labels = np.asarray(labels)
    if logits.data.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError('softmax_xent', logits.shape, labels.shape)
    if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[1]):
        raise ShapeError('softmax_xent', logits.shape, labels.shape,
                         f"etiquetas fuera de [0, {logits.shape[1]})")

    labels = labels.astype(np.int64)
    n = logits.shape[0]
    log_probs = log_softmax(logits.data)
    loss = -log_probs[np.arange(n), labels].mean()

    def backward(g):
        grad = np.exp(log_probs)
        grad[np.arange(n), labels] -= 1.0
        return (grad * (float(g) / n),)

    return _emit('softmax_xent', np.asarray(loss), (logits,), backward)


__all__ = [
    'add', 'mul', 'scale', 'matmul', 'bias_add', 'conv2d', 'relu', 'maxpool2x2',
    'reshape', 'flatten', 'block', 'total_sum', 'softmax', 'log_softmax',
    'softmax_cross_entropy'
]
