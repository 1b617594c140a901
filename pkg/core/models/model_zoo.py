# core/models/model_zoo.py
"""
Zoológico de modelos: (ModelSpec, ParamVector) -> clasificador
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, NamedTuple, Tuple

import numpy as np

from core.autodiff import Tape, Tensor, grad_wrt_input, grad_wrt_params, ops
from core.errors import ShapeError
from core.models.model_types import LayerKind, ModelSpec
from utils.seed_generator import SeedGenerator


@dataclass
class ParamVector:
    """
    Vector plano float64 de parámetros y el id de la especificación dueña
    """
    values: np.ndarray
    spec_id: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)

    def __len__(self):
        return int(self.values.size)

    def copy(self) -> 'ParamVector':
        return ParamVector(self.values.copy(), self.spec_id)

    def with_values(self, values: np.ndarray) -> 'ParamVector':
        return ParamVector(values, self.spec_id)


class LossGraph(NamedTuple):
    tape: Tape
    params: Tensor
    inputs: Tensor
    loss: Tensor


def check_params(spec: ModelSpec, params) -> np.ndarray:
    """Valores del vector validados contra la especificación"""
    values = params.values if isinstance(params, ParamVector) else np.asarray(params, dtype=np.float64)
    if isinstance(params, ParamVector) and params.spec_id != spec.id:
        raise ShapeError(f"params[{params.spec_id}]", values.shape, (spec.parameter_count,),
                         f"el vector pertenece a otra especificación, se esperaba '{spec.id}'")
    if values.ndim != 1 or values.size != spec.parameter_count:
        raise ShapeError(f"params[{spec.id}]", values.shape, (spec.parameter_count,))
    return values


def check_inputs(spec: ModelSpec, x) -> np.ndarray:
    data = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    if data.ndim != 1 + len(spec.input_shape) or tuple(data.shape[1:]) != tuple(spec.input_shape):
        raise ShapeError(f"input[{spec.id}]", data.shape, (-1,) + tuple(spec.input_shape))
    return data


# =======================================================
# PARÁMETROS
# =======================================================

def init_params(spec: ModelSpec, seed: int) -> ParamVector:
    """
    Inicialización Kaiming-uniforme para pesos densos/conv y sesgos en cero

    Args:
        spec: Especificación válida
        seed: Semilla de inicialización

    Returns:
        ParamVector: reproducible a partir de (spec, seed)
    """
    rng = SeedGenerator.rng_for(seed, SeedGenerator.STREAM_TRAIN, SeedGenerator.text_key(spec.id))
    values = np.zeros(spec.parameter_count)

    for param_block in spec.param_blocks():
        if param_block.name != 'weight':
            continue
        bound = np.sqrt(6.0 / spec.layers[param_block.layer_index].fan_in)
        values[param_block.offset:param_block.offset + param_block.size] = rng.uniform(
            -bound, bound, size=param_block.size)

    return ParamVector(values, spec.id)


def unflatten(spec: ModelSpec, params) -> List[Dict[str, np.ndarray]]:
    """
    Arreglos por capa ({'weight', 'bias'}) a partir del vector plano
    """
    values = check_params(spec, params)
    layers: List[Dict[str, np.ndarray]] = [{} for _ in spec.layers]
    for param_block in spec.param_blocks():
        layers[param_block.layer_index][param_block.name] = (
            values[param_block.offset:param_block.offset + param_block.size]
            .reshape(param_block.shape).copy())
    return layers


def flatten(spec: ModelSpec, layers: List[Dict[str, np.ndarray]]) -> ParamVector:
    """Inverso exacto de unflatten"""
    pieces = []
    for param_block in spec.param_blocks():
        array = np.asarray(layers[param_block.layer_index][param_block.name], dtype=np.float64)
        if array.shape != param_block.shape:
            raise ShapeError(f"flatten[{spec.id}]", array.shape, param_block.shape,
                             f"capa {param_block.layer_index} {param_block.name}")
        pieces.append(array.reshape(-1))
    values = np.concatenate(pieces) if pieces else np.zeros(0)
    return ParamVector(values, spec.id)


# =======================================================
# PASE HACIA ADELANTE
# =======================================================

def _forward(spec: ModelSpec, flat: Tensor, x: Tensor) -> Tensor:
    blocks = {(b.layer_index, b.name): b for b in spec.param_blocks()}
    h = x

    for index, layer in enumerate(spec.layers):
        if layer.kind in (LayerKind.DENSE, LayerKind.CONV):
            w_block, b_block = blocks[(index, 'weight')], blocks[(index, 'bias')]
            weight = ops.block(flat, w_block.offset, w_block.shape)
            bias = ops.block(flat, b_block.offset, b_block.shape)
            h = ops.matmul(h, weight) if layer.kind == LayerKind.DENSE else ops.conv2d(h, weight)
            h = ops.bias_add(h, bias)
        elif layer.kind == LayerKind.RELU:
            h = ops.relu(h)
        elif layer.kind == LayerKind.MAXPOOL:
            h = ops.maxpool2x2(h)
        elif layer.kind == LayerKind.FLATTEN:
            h = ops.flatten(h)

    return h


def logits(spec: ModelSpec, params, x) -> np.ndarray:
    """Logits (N, c) sin registrar en cinta"""
    values = check_params(spec, params)
    data = check_inputs(spec, x)
    return _forward(spec, Tensor(values), Tensor(data)).data


def forward_loss(spec: ModelSpec, params, x, y) -> LossGraph:
    """
    Entropía cruzada media sobre el lote, registrada en una cinta nueva

    Args:
        spec: Especificación del modelo
        params: ParamVector o vector plano
        x: Lote (N, C, H, W)
        y: N etiquetas en [0, c)

    Returns:
        LossGraph: cinta, hoja de parámetros, hoja de entrada y pérdida escalar
    """
    values = check_params(spec, params)
    data = check_inputs(spec, x)

    tape = Tape()
    flat = tape.variable(values, name=f"{spec.id}.params")
    inputs = tape.variable(data, name='x')
    loss = ops.softmax_cross_entropy(_forward(spec, flat, inputs), y)
    return LossGraph(tape, flat, inputs, loss)


def loss_and_param_grad(spec: ModelSpec, params, x, y) -> Tuple[float, np.ndarray]:
    graph = forward_loss(spec, params, x, y)
    return graph.loss.item(), grad_wrt_params(graph.loss, graph.params)


def loss_and_input_grad(spec: ModelSpec, params, x, y) -> Tuple[float, np.ndarray]:
    """Pérdida y ∇x L con la misma forma que x"""
    graph = forward_loss(spec, params, x, y)
    return graph.loss.item(), grad_wrt_input(graph.loss, graph.inputs)


def param_grad_fn(spec: ModelSpec, x, y) -> Callable[[np.ndarray], np.ndarray]:
    """Cierre w -> ∇w L(x, y, w) sobre un lote fijo"""
    def grad_fn(values: np.ndarray) -> np.ndarray:
        return loss_and_param_grad(spec, values, x, y)[1]
    return grad_fn


def predict(spec: ModelSpec, params, x, chunk_size: int = 256) -> np.ndarray:
    """
    Probabilidades de clase (softmax de los logits); filas suman 1

    Args:
        chunk_size: Tamaño de bloque para conjuntos grandes

    Returns:
        np.ndarray: (N, c)
    """
    values = check_params(spec, params)
    data = check_inputs(spec, x)
    if data.shape[0] == 0:
        return np.zeros((0, spec.class_count))

    parts = [ops.softmax(_forward(spec, Tensor(values), Tensor(data[start:start + chunk_size])).data)
             for start in range(0, data.shape[0], chunk_size)]
    return np.concatenate(parts, axis=0)


def predict_labels(spec: ModelSpec, params, x) -> np.ndarray:
    return predict(spec, params, x).argmax(axis=1)


def accuracy(spec: ModelSpec, params, x, y) -> float:
    """Fracción de aciertos; 0.0 para un conjunto vacío"""
    labels = np.asarray(y)
    if labels.size == 0:
        return 0.0
    return float(np.mean(predict_labels(spec, params, x) == labels))
