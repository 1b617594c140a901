# core/models/model_types.py
"""
Definición de capas, especificaciones de arquitectura y registro de familias
"""
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

from core.errors import ConfigError


class LayerKind(str, Enum):
    """
    Tipos de capa soportados
    """
    DENSE = "dense"          # dense{in, out}
    CONV = "conv"            # conv{in_ch, out_ch, k}
    RELU = "relu"
    MAXPOOL = "maxpool"      # 2x2, paso 2
    FLATTEN = "flatten"


class ModelRole(str, Enum):
    SUBSTITUTE = "substitute"
    VICTIM = "victim"
    AUXILIARY = "auxiliary"


@dataclass(frozen=True)
class LayerSpec:
    """
    Descriptor de una capa; sólo DENSE y CONV tienen parámetros
    """
    kind: LayerKind
    in_features: int = 0      # dense: in / conv: in_ch
    out_features: int = 0     # dense: out / conv: out_ch
    kernel: int = 0           # conv: k

    @property
    def weight_shape(self) -> Tuple[int, ...]:
        if self.kind == LayerKind.DENSE:
            return (self.in_features, self.out_features)
        if self.kind == LayerKind.CONV:
            return (self.out_features, self.in_features, self.kernel, self.kernel)
        return ()

    @property
    def bias_shape(self) -> Tuple[int, ...]:
        if self.kind in (LayerKind.DENSE, LayerKind.CONV):
            return (self.out_features,)
        return ()

    @property
    def fan_in(self) -> int:
        if self.kind == LayerKind.DENSE:
            return self.in_features
        if self.kind == LayerKind.CONV:
            return self.in_features * self.kernel * self.kernel
        return 0

    @property
    def parameter_count(self) -> int:
        count = 0
        for shape in (self.weight_shape, self.bias_shape):
            if shape:
                size = 1
                for dim in shape:
                    size *= dim
                count += size
        return count


def dense(in_features: int, out_features: int) -> LayerSpec:
    return LayerSpec(LayerKind.DENSE, in_features, out_features)


def conv(in_ch: int, out_ch: int, k: int = 3) -> LayerSpec:
    return LayerSpec(LayerKind.CONV, in_ch, out_ch, k)


RELU = LayerSpec(LayerKind.RELU)
MAXPOOL = LayerSpec(LayerKind.MAXPOOL)
FLATTEN = LayerSpec(LayerKind.FLATTEN)


@dataclass(frozen=True)
class ParamBlock:
    """Ubicación de un arreglo de parámetros dentro del vector plano"""
    layer_index: int
    name: str                 # 'weight' | 'bias'
    offset: int
    shape: Tuple[int, ...]

    @property
    def size(self) -> int:
        size = 1
        for dim in self.shape:
            size *= dim
        return size


@dataclass(frozen=True)
class ModelSpec:
    """
    Arquitectura inmutable: (spec, ParamVector) -> clasificador

    Orden canónico de parámetros: capas en orden, peso antes que sesgo,
    cada arreglo en orden row-major.
    """
    id: str
    layers: Tuple[LayerSpec, ...]
    input_shape: Tuple[int, ...]      # (C, H, W)
    class_count: int
    role: ModelRole = ModelRole.VICTIM
    description: str = ""

    def __post_init__(self):
        errors = validate_model_spec(self)
        if errors:
            raise ConfigError(f"ModelSpec '{self.id}' inválida: " + "; ".join(errors))

    @property
    def parameter_count(self) -> int:
        return sum(layer.parameter_count for layer in self.layers)

    def param_blocks(self) -> List[ParamBlock]:
        blocks = []
        offset = 0
        for index, layer in enumerate(self.layers):
            for name, shape in (('weight', layer.weight_shape), ('bias', layer.bias_shape)):
                if shape:
                    param_block = ParamBlock(index, name, offset, shape)
                    blocks.append(param_block)
                    offset += param_block.size
        return blocks

    def describe(self) -> Dict[str, object]:
        return {
            'id': self.id,
            'role': self.role.value,
            'input_shape': list(self.input_shape),
            'class_count': self.class_count,
            'parameter_count': self.parameter_count,
            'layers': [layer.kind.value for layer in self.layers]
        }


def output_shape(layer: LayerSpec, shape: Tuple[int, ...]) -> Tuple[Optional[Tuple[int, ...]], str]:
    """
    Forma de salida de una capa para una forma de entrada por muestra

    Returns:
        (forma, error): forma None si no compone
    """
    if layer.kind == LayerKind.DENSE:
        if len(shape) != 1 or shape[0] != layer.in_features:
            return None, f"dense espera ({layer.in_features},), recibe {shape}"
        return (layer.out_features,), ""

    if layer.kind == LayerKind.CONV:
        if len(shape) != 3 or shape[0] != layer.in_features:
            return None, f"conv espera {layer.in_features} canales, recibe {shape}"
        if layer.kernel < 1 or layer.kernel % 2 == 0:
            return None, f"conv requiere núcleo impar, recibe {layer.kernel}"
        return (layer.out_features, shape[1], shape[2]), ""

    if layer.kind == LayerKind.MAXPOOL:
        if len(shape) != 3 or shape[1] % 2 or shape[2] % 2:
            return None, f"maxpool requiere (C, H, W) con H, W pares, recibe {shape}"
        return (shape[0], shape[1] // 2, shape[2] // 2), ""

    if layer.kind == LayerKind.FLATTEN:
        size = 1
        for dim in shape:
            size *= dim
        return (size,), ""

    return shape, ""


def validate_model_spec(spec: ModelSpec) -> List[str]:
    """
    Validar que las capas componen y la salida tiene class_count logits

    Returns:
        list: Lista de errores encontrados (vacía si es válida)
    """
    errors = []

    if not spec.id.strip():
        errors.append("id no puede estar vacío")

    if spec.class_count < 2:
        errors.append("class_count debe ser >= 2")

    shape: Optional[Tuple[int, ...]] = tuple(spec.input_shape)
    for index, layer in enumerate(spec.layers):
        shape, error = output_shape(layer, shape)
        if shape is None:
            errors.append(f"capa {index}: {error}")
            break

    if shape is not None and shape != (spec.class_count,):
        errors.append(f"la salida final {shape} no coincide con ({spec.class_count},)")

    return errors


# =======================================================
# FAMILIAS DE ARQUITECTURAS
# =======================================================

def _linear(channels: int, side: int, classes: int) -> Tuple[LayerSpec, ...]:
    return (FLATTEN, dense(channels * side * side, classes))


def _cnn_substitute(channels: int, side: int, classes: int) -> Tuple[LayerSpec, ...]:
    quarter = side // 4
    return (conv(channels, 8), RELU, MAXPOOL,
            conv(8, 16), RELU, MAXPOOL,
            FLATTEN, dense(16 * quarter * quarter, classes))


def _mlp_shallow(channels: int, side: int, classes: int) -> Tuple[LayerSpec, ...]:
    return (FLATTEN, dense(channels * side * side, 32), RELU, dense(32, classes))


def _mlp_deep(channels: int, side: int, classes: int) -> Tuple[LayerSpec, ...]:
    return (FLATTEN, dense(channels * side * side, 64), RELU,
            dense(64, 48), RELU,
            dense(48, 24), RELU,
            dense(24, classes))


def _cnn_wide(channels: int, side: int, classes: int) -> Tuple[LayerSpec, ...]:
    half = side // 2
    return (conv(channels, 16), RELU, MAXPOOL,
            FLATTEN, dense(16 * half * half, classes))


def _cnn_deep(channels: int, side: int, classes: int) -> Tuple[LayerSpec, ...]:
    quarter = side // 4
    return (conv(channels, 4), RELU,
            conv(4, 8), RELU, MAXPOOL,
            conv(8, 8, 5), RELU, MAXPOOL,
            FLATTEN, dense(8 * quarter * quarter, 32), RELU,
            dense(32, classes))


@dataclass(frozen=True)
class ModelFamily:
    builder: Callable[[int, int, int], Tuple[LayerSpec, ...]]
    role: ModelRole
    description: str
    side_multiple: int = 1


MODEL_FAMILIES: Dict[str, ModelFamily] = {
    'cnn_substitute': ModelFamily(_cnn_substitute, ModelRole.SUBSTITUTE,
                                  "conv-relu-pool-conv-relu-pool-dense", side_multiple=4),
    'mlp_shallow': ModelFamily(_mlp_shallow, ModelRole.VICTIM, "MLP de 2 capas, 32 ocultas"),
    'mlp_deep': ModelFamily(_mlp_deep, ModelRole.VICTIM, "MLP de 4 capas"),
    'cnn_wide': ModelFamily(_cnn_wide, ModelRole.VICTIM, "una conv ancha + densa", side_multiple=2),
    'cnn_deep': ModelFamily(_cnn_deep, ModelRole.VICTIM, "tres conv (una 5x5) + dos densas",
                            side_multiple=4),
    'linear': ModelFamily(_linear, ModelRole.AUXILIARY, "regresión logística"),
}

DEFAULT_SUBSTITUTE = 'cnn_substitute'
DEFAULT_VICTIMS = ('mlp_shallow', 'mlp_deep', 'cnn_wide', 'cnn_deep')


def build_spec(family: str, input_shape: Tuple[int, int, int], class_count: int) -> ModelSpec:
    """
    Construir la especificación de una familia para una forma de entrada

    Args:
        family: Nombre registrado en MODEL_FAMILIES
        input_shape: (C, H, W) con H == W
        class_count: Número de clases

    Returns:
        ModelSpec
    """
    if family not in MODEL_FAMILIES:
        raise ConfigError(f"Familia de modelo desconocida: {family}")

    channels, height, width = (int(v) for v in input_shape)
    if height != width:
        raise ConfigError(f"Se requieren imágenes cuadradas, recibido {input_shape}")

    entry = MODEL_FAMILIES[family]
    if height % entry.side_multiple:
        raise ConfigError(f"{family} requiere lado múltiplo de {entry.side_multiple}, recibido {height}")

    return ModelSpec(
        id=family,
        layers=entry.builder(channels, height, class_count),
        input_shape=(channels, height, width),
        class_count=int(class_count),
        role=entry.role,
        description=entry.description
    )


def default_registry(input_shape: Tuple[int, int, int] = (1, 32, 32),
                     class_count: int = 4) -> Dict[str, ModelSpec]:
    """Sustituto + víctimas por defecto para una forma de entrada"""
    families = (DEFAULT_SUBSTITUTE,) + DEFAULT_VICTIMS
    return {name: build_spec(name, input_shape, class_count) for name in families}
