# core/autodiff/tensor.py
"""
Tensor y cinta (Tape) para diferenciación automática en modo reverso
Todo en float64; cada grafo vive en su propia cinta
"""
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import GraphError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """
    Valor denso float64 con referencia opcional a la cinta que lo registró

    Un tensor sin cinta es una constante: no recibe gradiente.
    """

    __slots__ = ('data', 'tape', 'parents', 'backward_fn', 'op', 'index', 'name')

    def __init__(self, data, tape: Optional['Tape'] = None,
                 parents: Tuple['Tensor', ...] = (),
                 backward_fn: Optional[BackwardFn] = None,
                 op: str = 'const', name: str = ''):
        self.data = np.asarray(data, dtype=np.float64)
        self.tape = tape
        self.parents = parents
        self.backward_fn = backward_fn
        self.op = op
        self.index = -1
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_recorded(self) -> bool:
        return self.tape is not None and self.index >= 0

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Copia de los datos"""
        return self.data.copy()

    def __repr__(self):
        return f"<Tensor(op={self.op}, shape={self.shape}, name='{self.name}')>"


class Tape:
    """
    Cinta de operaciones

    Los nodos se agregan en orden de creación, que ya es un orden topológico:
    un nodo sólo puede depender de nodos creados antes.
    """

    def __init__(self):
        self._nodes: List[Tensor] = []
        self.backward_calls = 0

    def __len__(self):
        return len(self._nodes)

    def variable(self, value, name: str = '') -> Tensor:
        """
        Registrar una hoja diferenciable (parámetros o entrada)
        """
        leaf = Tensor(np.array(value, dtype=np.float64, copy=True), tape=self, op='leaf', name=name)
        return self.record(leaf)

    def record(self, tensor: Tensor) -> Tensor:
        tensor.tape = self
        tensor.index = len(self._nodes)
        self._nodes.append(tensor)
        return tensor

    def gradients(self, loss: Tensor, wrt: Sequence[Tensor]) -> List[np.ndarray]:
        """
        Gradientes de una pérdida escalar respecto de nodos de esta cinta

        Args:
            loss: Nodo escalar registrado en esta cinta
            wrt: Nodos respecto de los cuales derivar

        Returns:
            List[np.ndarray]: un gradiente por nodo, con su misma forma
        """
        if loss.tape is not self or not loss.is_recorded:
            raise GraphError("La pérdida no pertenece a esta cinta")
        if loss.size != 1:
            raise GraphError(f"La pérdida debe ser escalar, forma {loss.shape}")
        for node in wrt:
            if node.tape is not self or not node.is_recorded:
                raise GraphError(f"Nodo desconectado de la cinta: {node!r}")

        # Acumuladores en cero para cada llamada
        grads: dict[int, np.ndarray] = {loss.index: np.ones_like(loss.data)}

        for node in reversed(self._nodes[:loss.index + 1]):
            upstream = grads.get(node.index)
            if upstream is None or node.backward_fn is None:
                continue
            parent_grads = node.backward_fn(upstream)
            for parent, parent_grad in zip(node.parents, parent_grads):
                if parent_grad is None or parent.tape is not self or not parent.is_recorded:
                    continue
                if parent.index in grads:
                    grads[parent.index] = grads[parent.index] + parent_grad
                else:
                    grads[parent.index] = parent_grad

        self.backward_calls += 1
        return [np.array(grads.get(node.index, np.zeros_like(node.data)), dtype=np.float64)
                for node in wrt]


def grad_wrt_params(loss: Tensor, params: Tensor) -> np.ndarray:
    """
    Gradiente de la pérdida respecto del vector plano de parámetros
    """
    if loss.tape is None:
        raise GraphError("La pérdida no está registrada en ninguna cinta")
    return loss.tape.gradients(loss, [params])[0]


def grad_wrt_input(loss: Tensor, input_node: Tensor) -> np.ndarray:
    """
    Gradiente de la pérdida respecto de la entrada x (misma forma que x)
    """
    if loss.tape is None:
        raise GraphError("La pérdida no está registrada en ninguna cinta")
    if input_node.tape is not loss.tape:
        raise GraphError("La entrada no participa en el grafo de la pérdida")
    return loss.tape.gradients(loss, [input_node])[0]
