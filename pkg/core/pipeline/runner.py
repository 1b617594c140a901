# core/pipeline/runner.py
"""
Orquestación del pipeline: datos -> entrenamiento -> posterior -> ataque -> evaluación

Los artefactos persistentes (checkpoints, posteriors, lotes adversarios) viven
en el directorio de trabajo; las tablas y logs de cada corrida en su directorio
de corrida.
"""
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from config.run_config import RunConfig
from config.settings import settings
from core.attack.attack_engine import (AdvBatch, AttackJob, AttackMethod, load_adv_batch, run_attack,
                                       save_adv_batch)
from core.data.dataset import Dataset, gen_synthetic
from core.data.idx_loader import load_idx
from core.errors import ArtifactIOError, ConfigError
from core.evaluation.eval_report import (EvalReport, attack_subset, posterior_accuracy_profile,
                                         success_rate, summarize, write_report_csv, write_summary_json)
from core.evaluation.sweep import SweepTable, sweep
from core.models.checkpoint import load_checkpoint
from core.models.model_types import ModelSpec, build_spec
from core.models.model_zoo import ParamVector, accuracy
from core.posterior.posterior import (IsotropicPosterior, Posterior, SwagPosterior, isotropic_from_params,
                                      swag_finalize, swag_from_checkpoints, with_sigma)
from core.posterior.posterior_io import load_posterior, save_posterior
from core.training.bayes_finetune import FinetuneConfig, finetune
from core.training.trainer import TrainConfig, TrainResult, train, write_curve
from utils.helpers import format_file_size
from utils.logger import log_attack, log_system
from utils.seed_generator import SeedGenerator


def _digest(payload: Dict[str, Any]) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:12]


class PipelineRunner:
    """
    Ejecuta los pasos del pipeline para una configuración base

    Los resultados intermedios se guardan en memoria por clave de contenido, de
    modo que un barrido reutiliza modelos y posteriors que no dependen del eje.
    """

    def __init__(self, config: RunConfig, run_dir: Optional[Path] = None,
                 threads: Optional[int] = None):
        self.config = config
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.threads = max(1, threads or settings.THREADS)
        self.workdir = config.resolved_workdir()
        self._datasets: Dict[str, Tuple[Dataset, Dataset]] = {}
        self._params: Dict[Tuple[str, str], ParamVector] = {}
        self._posteriors: Dict[str, Posterior] = {}
        self._attack_sets: Dict[str, Dataset] = {}
        self._clean_acc: Dict[Tuple[str, str], float] = {}

    # =======================================================
    # RUTAS
    # =======================================================

    @property
    def checkpoint_dir(self) -> Path:
        return self.workdir / "checkpoints"

    @property
    def posterior_dir(self) -> Path:
        return self.workdir / "posteriors"

    @property
    def adversarial_dir(self) -> Path:
        return self.workdir / "adversarial"

    def checkpoint_path(self, spec_id: str) -> Path:
        return self.checkpoint_dir / f"{spec_id}.ckpt"

    def _output(self, name: str) -> Optional[Path]:
        return self.run_dir / name if self.run_dir is not None else None

    # =======================================================
    # DATOS Y MODELOS
    # =======================================================

    @staticmethod
    def _data_key(config: RunConfig) -> str:
        return _digest({'data': asdict(config.data), 'seed': config.seeds.data})

    def datasets(self, config: Optional[RunConfig] = None) -> Tuple[Dataset, Dataset]:
        """(entrenamiento, prueba) según la sección data"""
        config = config or self.config
        key = self._data_key(config)
        if key not in self._datasets:
            data = config.data
            if data.source == 'idx':
                train_ds = load_idx(Path(data.train_images), Path(data.train_labels), 'train', data.classes)
                test_ds = load_idx(Path(data.test_images), Path(data.test_labels), 'test', data.classes)
            else:
                common = dict(classes=data.classes, side=data.side, seed=config.seeds.data,
                              pixel_noise=data.pixel_noise, channels=data.channels,
                              class_contrast=data.class_contrast)
                train_ds = gen_synthetic(per_class=data.per_class_train, split='train', **common)
                test_ds = gen_synthetic(per_class=data.per_class_test, split='test', **common)
            self._datasets[key] = (train_ds, test_ds)
            log_system(f"Datos: {len(train_ds)} entrenamiento, {len(test_ds)} prueba, "
                       f"forma {train_ds.input_shape}")
        return self._datasets[key]

    def specs(self, config: Optional[RunConfig] = None) -> Dict[str, ModelSpec]:
        """Sustituto primero, luego víctimas en orden de configuración"""
        config = config or self.config
        config.check_collisions()
        train_ds, _ = self.datasets(config)
        families = [config.models.source] + list(config.models.victims)
        return {family: build_spec(family, train_ds.input_shape, config.data.classes)
                for family in families}

    def model_seed(self, config: RunConfig, spec_id: str) -> int:
        return SeedGenerator.derive(config.seeds.train, SeedGenerator.STREAM_TRAIN,
                                    SeedGenerator.text_key(spec_id))

    def train_models(self, config: Optional[RunConfig] = None) -> Dict[str, TrainResult]:
        """
        Entrenar sustituto y víctimas en paralelo

        Returns:
            Dict[str, TrainResult]: por id de especificación
        """
        config = config or self.config
        specs = self.specs(config)
        train_ds, test_ds = self.datasets(config)

        def run(spec: ModelSpec) -> TrainResult:
            cfg = TrainConfig(epochs=config.train.epochs, batch_size=config.train.batch_size,
                              learning_rate=config.train.learning_rate, momentum=config.train.momentum,
                              weight_decay=config.train.weight_decay, seed=self.model_seed(config, spec.id),
                              checkpoint_every=config.train.checkpoint_every)
            return train(spec, train_ds, cfg, test_ds=test_ds, checkpoint_dir=self.checkpoint_dir)

        with ThreadPoolExecutor(max_workers=min(self.threads, len(specs))) as executor:
            results = dict(zip(specs, executor.map(run, specs.values())))

        for spec_id, result in results.items():
            self._params[(self._data_key(config), spec_id)] = result.params
            output = self._output(f"accuracy_{spec_id}.csv")
            if output is not None:
                write_curve(output, result.curve)
            final_path = result.checkpoints[-1]
            final_acc = result.final_test_accuracy
            acc_text = f"{final_acc:.4f}" if final_acc is not None else "n/d"
            log_system(f"{spec_id}: acc test final {acc_text}, "
                       f"checkpoint {final_path} ({format_file_size(final_path.stat().st_size)})")

        return results

    def trained_params(self, spec: ModelSpec, config: Optional[RunConfig] = None) -> ParamVector:
        config = config or self.config
        key = (self._data_key(config), spec.id)
        if key not in self._params:
            path = self.checkpoint_path(spec.id)
            if not path.is_file():
                raise ArtifactIOError(f"Checkpoint no encontrado: {path} (ejecute 'train' primero)")
            self._params[key], _ = load_checkpoint(path, spec)
        return self._params[key]

    # =======================================================
    # POSTERIOR
    # =======================================================

    @staticmethod
    def posterior_key(config: RunConfig) -> str:
        """Clave de contenido; σ y la escala SWAG se aplican después de cargar"""
        resolved = config.resolved()
        return _digest({
            'data': asdict(config.data),
            'source': config.models.source,
            'train': asdict(config.train),
            'finetune': asdict(resolved.finetune),
            'kind': config.posterior.kind,
            'var_floor': config.posterior.var_floor,
            'swag_checkpoints': list(config.posterior.swag_checkpoints),
            'seeds': [config.seeds.data, config.seeds.train, config.seeds.finetune],
        })

    def posterior_path(self, config: RunConfig) -> Path:
        return self.posterior_dir / f"{config.models.source}_{config.posterior.kind}_{self.posterior_key(config)}.btpost"

    def finetune_config(self, config: RunConfig) -> FinetuneConfig:
        return FinetuneConfig(
            lambda_radius=config.resolved_lambda(),
            gamma_numerator=config.finetune.gamma_numerator,
            learning_rate=config.resolved_finetune_lr(),
            momentum=config.finetune.momentum,
            weight_decay=config.finetune.weight_decay,
            epochs=config.finetune.epochs,
            batch_size=config.finetune.batch_size,
            collect_swag=config.posterior.kind == 'swag',
            full_batch=config.finetune.full_batch,
            seed=config.seeds.finetune
        )

    def build_posterior(self, config: RunConfig) -> Posterior:
        """
        Construir la posterior del sustituto según posterior.kind y finetune.enabled
        """
        spec = self.specs(config)[config.models.source]
        source_params = self.trained_params(spec, config)
        sigma = config.resolved_sigma()
        kind = config.posterior.kind

        if not config.finetune.enabled:
            if kind == 'isotropic':
                return isotropic_from_params(source_params, sigma)
            if len(config.posterior.swag_checkpoints) < 2:
                raise ConfigError("SWAG requiere ajuste fino: sin él no hay instantáneas del entrenamiento")
            posterior = swag_from_checkpoints([Path(p) for p in config.posterior.swag_checkpoints],
                                              scale=config.posterior.swag_scale, beta=sigma ** 2,
                                              var_floor=config.posterior.var_floor)
            if posterior.spec_id != spec.id:
                raise ConfigError(f"Los checkpoints SWAG son de '{posterior.spec_id}', no de '{spec.id}'")
            return posterior

        train_ds, test_ds = self.datasets(config)
        result = finetune(spec, source_params, train_ds, self.finetune_config(config), test_ds=test_ds)

        output = self._output("finetune_curve.csv")
        if output is not None:
            write_curve(output, result.curve)

        if kind == 'isotropic':
            return IsotropicPosterior(result.params, sigma)
        return swag_finalize(result.moments, scale=config.posterior.swag_scale, beta=sigma ** 2,
                             var_floor=config.posterior.var_floor)

    def _apply_posterior_settings(self, posterior: Posterior, config: RunConfig) -> Posterior:
        posterior = with_sigma(posterior, config.resolved_sigma())
        if isinstance(posterior, SwagPosterior):
            posterior = replace(posterior, scale=config.posterior.swag_scale)
        return posterior

    def ensure_posterior(self, config: Optional[RunConfig] = None, rebuild: bool = False) -> Posterior:
        """
        Posterior del sustituto: memoria, luego archivo, luego construcción
        """
        config = config or self.config
        key = self.posterior_key(config)
        path = self.posterior_path(config)

        if rebuild or key not in self._posteriors:
            if path.is_file() and not rebuild:
                self._posteriors[key] = load_posterior(path)
                log_system(f"Posterior cargada: {path}")
            else:
                posterior = self.build_posterior(config)
                save_posterior(path, posterior, note=f"config {config.config_hash()}")
                log_system(f"Posterior {posterior.kind} guardada en {path} "
                           f"({format_file_size(path.stat().st_size)})")
                self._posteriors[key] = posterior

        return self._apply_posterior_settings(self._posteriors[key], config)

    def posterior_profile(self, config: Optional[RunConfig] = None) -> Dict[str, Any]:
        """
        Precisión del modelo medio y de muestras, antes y después del ajuste fino
        """
        config = config or self.config
        spec = self.specs(config)[config.models.source]
        _, test_ds = self.datasets(config)
        samples = config.eval.bayes_samples
        sigma = config.resolved_sigma()

        before = posterior_accuracy_profile(
            spec, isotropic_from_params(self.trained_params(spec, config), sigma), test_ds, samples,
            SeedGenerator.rng_for(config.seeds.finetune, SeedGenerator.STREAM_EVAL, 0))
        after = posterior_accuracy_profile(
            spec, self.ensure_posterior(config), test_ds, samples,
            SeedGenerator.rng_for(config.seeds.finetune, SeedGenerator.STREAM_EVAL, 1))
        return {'sigma': sigma, 'samples': samples, 'pretrained': before, 'posterior': after}

    # =======================================================
    # ATAQUE Y EVALUACIÓN
    # =======================================================

    def repetition_seeds(self, config: Optional[RunConfig] = None) -> List[int]:
        """Las repeticiones sólo cambian la semilla del ataque"""
        config = config or self.config
        return [SeedGenerator.derive(config.seeds.attack, SeedGenerator.STREAM_EVAL, repetition)
                for repetition in range(config.eval.repetitions)]

    def attack_set(self, config: Optional[RunConfig] = None) -> Dataset:
        """Muestras de prueba que el sustituto y todas las víctimas aciertan"""
        config = config or self.config
        key = _digest({'data': self._data_key(config), 'models': asdict(config.models),
                       'max': config.eval.max_attack_samples})
        if key not in self._attack_sets:
            specs = self.specs(config)
            _, test_ds = self.datasets(config)
            models = [(spec, self.trained_params(spec, config)) for spec in specs.values()]
            subset = attack_subset(models, test_ds, config.eval.max_attack_samples)
            if len(subset) == 0:
                raise ConfigError("Ninguna muestra de prueba es clasificada bien por todos los modelos")
            log_system(f"Conjunto de ataque: {len(subset)} de {len(test_ds)} muestras de prueba")
            self._attack_sets[key] = subset
        return self._attack_sets[key]

    def craft(self, config: RunConfig, seed: int) -> Tuple[AdvBatch, AttackJob]:
        """
        Ejemplos adversarios sobre el conjunto de ataque con una semilla
        """
        spec = self.specs(config)[config.models.source]
        attack_ds = self.attack_set(config)
        job = AttackJob(x=attack_ds.images, y=attack_ds.labels,
                        epsilon_budget=config.attack.epsilon_budget, step_size=config.attack.step_size,
                        iterations=config.attack.iterations, ensemble_size=config.attack.ensemble_size,
                        mode=config.attack.mode, sampling=config.attack.sampling, rng_seed=seed)

        if config.attack.mode == 'deterministic':
            source = self.trained_params(spec, config)
        else:
            source = self.ensure_posterior(config)

        adv = run_attack(spec, source, job, method=AttackMethod(config.attack.method),
                         batch_size=config.attack.batch_size, threads=self.threads)
        return adv, job

    def adversarial_prefix(self, config: RunConfig, seed: int) -> Path:
        return self.adversarial_dir / f"{config.config_hash()}_{seed}"

    def attack(self, config: Optional[RunConfig] = None) -> List[Path]:
        """
        Generar y guardar un lote adversario por repetición

        Returns:
            List[Path]: manifiestos escritos
        """
        config = config or self.config
        manifests = []
        for seed in self.repetition_seeds(config):
            adv, job = self.craft(config, seed)
            manifest, _ = save_adv_batch(self.adversarial_prefix(config, seed), adv, job,
                                         extra={'config_hash': config.config_hash(),
                                                'source': config.models.source,
                                                'method': config.attack.method})
            manifests.append(manifest)
        log_system(f"{len(manifests)} lotes adversarios en {self.adversarial_dir}")
        return manifests

    def clean_accuracy(self, spec: ModelSpec, config: RunConfig) -> float:
        key = (self._data_key(config), spec.id)
        if key not in self._clean_acc:
            _, test_ds = self.datasets(config)
            self._clean_acc[key] = accuracy(spec, self.trained_params(spec, config),
                                            test_ds.images, test_ds.labels)
        return self._clean_acc[key]

    def score(self, config: RunConfig, x_adv, y, seed: int, run_id: str, axis_name: str = 'none',
              axis_value: Optional[float] = None) -> EvalReport:
        """Tasa de éxito por víctima (el sustituto queda marcado y fuera del promedio)"""
        specs = list(self.specs(config).values())
        report = EvalReport(run_id=run_id, seed=seed, axis_name=axis_name, axis_value=axis_value)

        def evaluate_one(spec: ModelSpec) -> Tuple[float, float]:
            params = self.trained_params(spec, config)
            return self.clean_accuracy(spec, config), success_rate(spec, params, x_adv, y)

        with ThreadPoolExecutor(max_workers=min(self.threads, len(specs))) as executor:
            scores = list(executor.map(evaluate_one, specs))

        for index, (spec, (clean_acc, asr)) in enumerate(zip(specs, scores)):
            report.add(spec.id, clean_acc, asr, is_substitute=index == 0)
            log_attack(spec.id, asr, f"seed {seed}")

        return report

    def evaluate(self, config: Optional[RunConfig] = None, axis_name: str = 'none',
                 axis_value: Optional[float] = None, run_id: Optional[str] = None,
                 use_saved: bool = False) -> List[EvalReport]:
        """
        Un reporte por repetición

        Args:
            use_saved: Reutilizar lotes adversarios guardados por 'attack' si existen
        """
        config = config or self.config
        run_id = run_id or config.config_hash()
        reports = []

        for seed in self.repetition_seeds(config):
            prefix = self.adversarial_prefix(config, seed)
            if use_saved and prefix.with_suffix('.bin').is_file():
                x_adv, y, _ = load_adv_batch(prefix)
            else:
                adv, job = self.craft(config, seed)
                x_adv, y = adv.x_adv, job.y
            reports.append(self.score(config, x_adv, y, seed, run_id, axis_name, axis_value))

        average = summarize(reports)['average_asr']
        if average is not None:
            log_system(f"Tasa de éxito promedio ({config.attack.mode}, {axis_name}={axis_value}): {average:.4f}")
        return reports

    def write_evaluation(self, reports: List[EvalReport], stem: str = 'eval') -> Dict[str, Path]:
        if self.run_dir is None:
            return {}
        return {
            'csv': write_report_csv(self.run_dir / f"{stem}.csv", reports),
            'json': write_summary_json(self.run_dir / f"{stem}_summary.json", summarize(reports)),
        }

    def sweep(self, config: Optional[RunConfig] = None) -> SweepTable:
        config = config or self.config
        return sweep(config.eval.sweep_axis, config.eval.sweep_grid, config, self)
