# config/run_config.py
"""
Configuración de una corrida (hiperparámetros de todos los módulos)

Archivo JSON UTF-8 con "schema": 1 y secciones anidadas; los flags
--set seccion.clave=valor sobrescriben claves puntuales.
"""
import hashlib
import json
import typing
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from config.settings import settings
from core.errors import ArtifactIOError, ConfigError

SCHEMA_VERSION = 1

POSTERIOR_KINDS = ('isotropic', 'swag')
DATA_SOURCES = ('synthetic', 'idx')
ATTACK_METHODS = ('fgsm', 'ifgsm')
ATTACK_MODES = ('deterministic', 'bayesian')
SAMPLING_MODES = ('per-iteration', 'fixed-set')

# Ejes de barrido -> (sección, clave)
SWEEP_AXES = {
    'sigma': ('posterior', 'sigma'),
    'lambda': ('finetune', 'lambda_radius'),
    'M': ('attack', 'ensemble_size'),
    'epsilon': ('attack', 'epsilon_budget'),
    'swag_scale': ('posterior', 'swag_scale'),
}

# Valores por defecto dependientes del tipo de posterior
MODE_DEFAULTS = {
    'swag': {'lambda_radius': 0.2, 'learning_rate': 0.05, 'sigma': 0.002},
    'isotropic': {'lambda_radius': 2.0, 'learning_rate': 0.001, 'sigma': 0.009},
}


@dataclass
class DataSection:
    source: str = 'synthetic'
    classes: int = 4
    per_class_train: int = 150
    per_class_test: int = 50
    side: int = 32
    channels: int = 1
    pixel_noise: float = 0.15
    class_contrast: float = 0.03
    train_images: Optional[str] = None
    train_labels: Optional[str] = None
    test_images: Optional[str] = None
    test_labels: Optional[str] = None


@dataclass
class ModelsSection:
    source: str = 'cnn_substitute'
    victims: List[str] = field(default_factory=lambda: ['mlp_shallow', 'mlp_deep', 'cnn_wide', 'cnn_deep'])


@dataclass
class TrainSection:
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 5e-4
    checkpoint_every: int = 0


@dataclass
class FinetuneSection:
    enabled: bool = True
    lambda_radius: Optional[float] = None
    gamma_numerator: float = 0.1
    learning_rate: Optional[float] = None
    momentum: float = 0.9
    weight_decay: float = 5e-4
    epochs: int = 10
    batch_size: int = 32
    full_batch: bool = False


@dataclass
class PosteriorSection:
    kind: str = 'swag'
    sigma: Optional[float] = None
    swag_scale: float = 1.5
    var_floor: float = 1e-12
    swag_checkpoints: List[str] = field(default_factory=list)


@dataclass
class AttackSection:
    method: str = 'ifgsm'
    mode: str = 'bayesian'
    sampling: str = 'per-iteration'
    epsilon_budget: float = 8 / 255
    step_size: float = 1 / 255
    iterations: int = 20
    ensemble_size: int = 1
    batch_size: int = 64


@dataclass
class EvalSection:
    repetitions: int = 10
    bayes_samples: int = 20
    max_attack_samples: int = 200
    sweep_axis: str = 'sigma'
    sweep_grid: List[float] = field(default_factory=lambda: [0.0, 0.003, 0.006, 0.009, 0.012])
    single_draw_baseline: bool = False


@dataclass
class PathsSection:
    workdir: Optional[str] = None
    runs_dir: Optional[str] = None


@dataclass
class SeedsSection:
    data: int = 0
    train: int = 1
    finetune: int = 2
    attack: int = 3


SECTION_TYPES = {
    'data': DataSection,
    'models': ModelsSection,
    'train': TrainSection,
    'finetune': FinetuneSection,
    'posterior': PosteriorSection,
    'attack': AttackSection,
    'eval': EvalSection,
    'paths': PathsSection,
    'seeds': SeedsSection,
}


def _coerce(where: str, annotation, value):
    """Convertir un valor JSON al tipo declarado del campo"""
    origin = typing.get_origin(annotation)
    args = typing.get_args(annotation)

    if origin is typing.Union:
        if value is None:
            return None
        inner = [a for a in args if a is not type(None)][0]
        return _coerce(where, inner, value)

    if origin in (list, List):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: se esperaba una lista, recibido {value!r}")
        return [_coerce(f"{where}[{i}]", args[0], v) for i, v in enumerate(value)]

    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: se esperaba true/false, recibido {value!r}")
        return value

    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: se esperaba un entero, recibido {value!r}")
        return value

    if annotation is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: se esperaba un número, recibido {value!r}")
        return float(value)

    if annotation is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: se esperaba texto, recibido {value!r}")
        return value

    return value


def _section_from_dict(name: str, data: Dict[str, Any]):
    section_type = SECTION_TYPES[name]
    if not isinstance(data, dict):
        raise ConfigError(f"La sección '{name}' debe ser un objeto")

    known = {f.name: f for f in fields(section_type)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"Claves desconocidas en '{name}': {', '.join(unknown)}")

    hints = typing.get_type_hints(section_type)
    values = {key: _coerce(f"{name}.{key}", hints[key], value) for key, value in data.items()}
    return section_type(**values)


@dataclass
class RunConfig:
    """
    Configuración completa y validada de una corrida
    """
    data: DataSection = field(default_factory=DataSection)
    models: ModelsSection = field(default_factory=ModelsSection)
    train: TrainSection = field(default_factory=TrainSection)
    finetune: FinetuneSection = field(default_factory=FinetuneSection)
    posterior: PosteriorSection = field(default_factory=PosteriorSection)
    attack: AttackSection = field(default_factory=AttackSection)
    eval: EvalSection = field(default_factory=EvalSection)
    paths: PathsSection = field(default_factory=PathsSection)
    seeds: SeedsSection = field(default_factory=SeedsSection)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunConfig':
        data = dict(data)
        schema = data.pop('schema', SCHEMA_VERSION)
        if schema != SCHEMA_VERSION:
            raise ConfigError(f"schema no soportado: {schema!r} (se espera {SCHEMA_VERSION})")

        unknown = sorted(set(data) - set(SECTION_TYPES))
        if unknown:
            raise ConfigError(f"Secciones desconocidas: {', '.join(unknown)}")

        sections = {name: _section_from_dict(name, value) for name, value in data.items()}
        return cls(**sections)

    def to_dict(self) -> Dict[str, Any]:
        result = {'schema': SCHEMA_VERSION}
        result.update(asdict(self))
        return result

    # ---------------------------------------------------
    # Valores resueltos
    # ---------------------------------------------------

    def _mode_default(self, key: str) -> float:
        return MODE_DEFAULTS.get(self.posterior.kind, MODE_DEFAULTS['swag'])[key]

    def resolved_lambda(self) -> float:
        if self.finetune.lambda_radius is not None:
            return self.finetune.lambda_radius
        return self._mode_default('lambda_radius')

    def resolved_finetune_lr(self) -> float:
        if self.finetune.learning_rate is not None:
            return self.finetune.learning_rate
        return self._mode_default('learning_rate')

    def resolved_sigma(self) -> float:
        if self.posterior.sigma is not None:
            return self.posterior.sigma
        return self._mode_default('sigma')

    def resolved_workdir(self) -> Path:
        return Path(self.paths.workdir) if self.paths.workdir else settings.WORKDIR

    def resolved_runs_dir(self) -> Path:
        return Path(self.paths.runs_dir) if self.paths.runs_dir else settings.RUNS_DIR

    def resolved(self) -> 'RunConfig':
        """Copia con los nulos dependientes del modo reemplazados por su valor efectivo"""
        return replace(
            self,
            finetune=replace(self.finetune, lambda_radius=self.resolved_lambda(),
                             learning_rate=self.resolved_finetune_lr()),
            posterior=replace(self.posterior, sigma=self.resolved_sigma())
        )

    def config_hash(self) -> str:
        """
        SHA-256 (12 hex) del JSON canónico resuelto, sin la sección de rutas
        """
        payload = self.resolved().to_dict()
        payload.pop('paths')
        canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:12]

    def with_value(self, section: str, key: str, value: Any) -> 'RunConfig':
        """Copia con una clave reemplazada (valor validado contra su tipo)"""
        if section not in SECTION_TYPES:
            raise ConfigError(f"Sección desconocida: {section}")
        current = asdict(getattr(self, section))
        if key not in current:
            raise ConfigError(f"Clave desconocida: {section}.{key}")
        current[key] = value
        return replace(self, **{section: _section_from_dict(section, current)})

    def with_axis(self, axis: str, value: Any) -> 'RunConfig':
        if axis not in SWEEP_AXES:
            raise ConfigError(f"Eje de barrido desconocido: {axis}")
        section, key = SWEEP_AXES[axis]
        if key == 'ensemble_size':
            if float(value) != int(value):
                raise ConfigError(f"M debe ser entero, recibido {value}")
            value = int(value)
        return self.with_value(section, key, value)

    # ---------------------------------------------------
    # Validación
    # ---------------------------------------------------

    def validate(self) -> List[str]:
        """
        Validar la configuración

        Returns:
            list: Lista de errores encontrados
        """
        from core.models.model_types import MODEL_FAMILIES

        errors = []

        if self.data.source not in DATA_SOURCES:
            errors.append(f"data.source debe ser uno de {DATA_SOURCES}")
        if self.data.classes < 2:
            errors.append("data.classes debe ser >= 2")
        if self.data.side < 4:
            errors.append("data.side debe ser >= 4")
        if self.data.per_class_train < 1 or self.data.per_class_test < 1:
            errors.append("data.per_class_train y data.per_class_test deben ser >= 1")
        if self.data.channels < 1:
            errors.append("data.channels debe ser >= 1")
        if self.data.pixel_noise < 0:
            errors.append("data.pixel_noise debe ser >= 0")
        if self.data.source == 'idx' and not (self.data.train_images and self.data.train_labels
                                              and self.data.test_images and self.data.test_labels):
            errors.append("data.source=idx requiere train_images, train_labels, test_images y test_labels")

        for family in [self.models.source] + list(self.models.victims):
            if family not in MODEL_FAMILIES:
                errors.append(f"Familia de modelo desconocida: {family}")
        if not self.models.victims:
            errors.append("models.victims no puede estar vacío")

        if self.train.epochs < 0 or self.train.batch_size < 1:
            errors.append("train.epochs debe ser >= 0 y train.batch_size >= 1")
        if self.train.learning_rate < 0 or not 0 <= self.train.momentum < 1 or self.train.weight_decay < 0:
            errors.append("train: learning_rate >= 0, momentum en [0, 1), weight_decay >= 0")

        if not self.resolved_lambda() > 0:
            errors.append("finetune.lambda_radius debe ser > 0")
        if not self.finetune.gamma_numerator > 0:
            errors.append("finetune.gamma_numerator debe ser > 0")
        if self.resolved_finetune_lr() < 0 or not 0 <= self.finetune.momentum < 1:
            errors.append("finetune: learning_rate >= 0, momentum en [0, 1)")
        if self.finetune.epochs < 0 or self.finetune.batch_size < 1:
            errors.append("finetune.epochs debe ser >= 0 y finetune.batch_size >= 1")

        if self.posterior.kind not in POSTERIOR_KINDS:
            errors.append(f"posterior.kind debe ser uno de {POSTERIOR_KINDS}")
        if self.resolved_sigma() < 0:
            errors.append("posterior.sigma debe ser >= 0")
        if not self.posterior.swag_scale > 0:
            errors.append("posterior.swag_scale debe ser > 0")
        if self.posterior.var_floor < 0:
            errors.append("posterior.var_floor debe ser >= 0")
        if self.posterior.kind == 'swag':
            if self.finetune.enabled and self.finetune.epochs < 2:
                errors.append("SWAG requiere finetune.epochs >= 2 (una instantánea por época)")
            if not self.finetune.enabled and len(self.posterior.swag_checkpoints) < 2:
                errors.append("SWAG requiere ajuste fino o al menos 2 posterior.swag_checkpoints")

        if self.attack.method not in ATTACK_METHODS:
            errors.append(f"attack.method debe ser uno de {ATTACK_METHODS}")
        if self.attack.mode not in ATTACK_MODES:
            errors.append(f"attack.mode debe ser uno de {ATTACK_MODES}")
        if self.attack.sampling not in SAMPLING_MODES:
            errors.append(f"attack.sampling debe ser uno de {SAMPLING_MODES}")
        if not 0 <= self.attack.epsilon_budget <= 1:
            errors.append("attack.epsilon_budget debe estar en [0, 1]")
        if not self.attack.step_size > 0:
            errors.append("attack.step_size debe ser > 0")
        if self.attack.iterations < 1 or self.attack.ensemble_size < 1 or self.attack.batch_size < 1:
            errors.append("attack.iterations, attack.ensemble_size y attack.batch_size deben ser >= 1")

        if self.eval.repetitions < 1 or self.eval.bayes_samples < 1 or self.eval.max_attack_samples < 1:
            errors.append("eval.repetitions, eval.bayes_samples y eval.max_attack_samples deben ser >= 1")
        if self.eval.sweep_axis not in SWEEP_AXES:
            errors.append(f"eval.sweep_axis debe ser uno de {tuple(SWEEP_AXES)}")
        if not self.eval.sweep_grid:
            errors.append("eval.sweep_grid no puede estar vacío")

        for name in ('data', 'train', 'finetune', 'attack'):
            if getattr(self.seeds, name) < 0:
                errors.append(f"seeds.{name} debe ser >= 0")

        return errors

    def check_collisions(self):
        """Un archivo por especificación: ids repetidos pisarían checkpoints"""
        ids = [self.models.source] + list(self.models.victims)
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        if duplicates:
            raise ArtifactIOError(f"Colisión de rutas: especificaciones repetidas {', '.join(duplicates)}")

    def save(self, path: Path) -> Path:
        """Guardar la configuración resuelta (re-ejecutable)"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.resolved().to_dict(), indent=2, sort_keys=True) + "\n",
                        encoding='utf-8')
        return path


def parse_override(override: str) -> tuple:
    """
    'seccion.clave=valor' -> (seccion, clave, valor)

    El valor se interpreta como JSON; si no lo es, queda como texto.
    """
    if '=' not in override:
        raise ConfigError(f"Override inválido (falta '='): {override}")
    path, raw_value = override.split('=', 1)
    parts = path.strip().split('.')
    if len(parts) != 2 or not all(parts):
        raise ConfigError(f"Override inválido (se espera seccion.clave): {override}")
    try:
        value = json.loads(raw_value)
    except json.JSONDecodeError:
        value = raw_value
    return parts[0], parts[1], value


def load_run_config(path: Optional[Path] = None, overrides: Sequence[str] = ()) -> RunConfig:
    """
    Cargar configuración desde archivo (opcional) y aplicar overrides

    Args:
        path: Archivo JSON; None usa los valores por defecto
        overrides: Lista 'seccion.clave=valor'

    Returns:
        RunConfig validada
    """
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ArtifactIOError(f"Archivo de configuración no encontrado: {path}")
        try:
            data = json.loads(path.read_text(encoding='utf-8'))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: JSON inválido: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: se esperaba un objeto JSON")
        config = RunConfig.from_dict(data)
    else:
        config = RunConfig()

    for override in overrides:
        section, key, value = parse_override(override)
        config = config.with_value(section, key, value)

    errors = config.validate()
    if errors:
        raise ConfigError("Configuración inválida: " + "; ".join(errors))

    return config
