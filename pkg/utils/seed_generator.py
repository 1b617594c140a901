# utils/seed_generator.py
"""
Generador de semillas derivadas
Todas las corrientes aleatorias salen de (semilla base, claves enteras)
"""
import hashlib
from typing import Dict, Any

import numpy as np


class SeedGenerator:
    """
    Deriva semillas y generadores independientes a partir de una semilla base

    Las claves identifican el consumidor (lote, repetición, víctima...), de modo
    que el resultado no depende del orden de ejecución ni del número de hilos.
    """

    # Claves de dominio para separar corrientes que comparten semilla base
    STREAM_DATA = 11
    STREAM_TRAIN = 13
    STREAM_SHUFFLE = 17
    STREAM_ATTACK = 19
    STREAM_POSTERIOR = 23
    STREAM_EVAL = 29

    @classmethod
    def sequence(cls, base_seed: int, *keys: int) -> np.random.SeedSequence:
        """
        SeedSequence para (base_seed, *keys)

        Args:
            base_seed: Semilla de la configuración
            keys: Claves no negativas que identifican al consumidor

        Returns:
            np.random.SeedSequence
        """
        entropy = [int(base_seed)] + [int(k) for k in keys]
        if any(value < 0 for value in entropy):
            raise ValueError(f"Semillas y claves deben ser no negativas: {entropy}")
        return np.random.SeedSequence(entropy)

    @classmethod
    def derive(cls, base_seed: int, *keys: int) -> int:
        """Semilla entera de 32 bits derivada"""
        return int(cls.sequence(base_seed, *keys).generate_state(1)[0])

    @classmethod
    def rng_for(cls, base_seed: int, *keys: int) -> np.random.Generator:
        """Generador numpy para (base_seed, *keys)"""
        return np.random.default_rng(cls.sequence(base_seed, *keys))

    @classmethod
    def text_key(cls, text: str) -> int:
        """
        Clave entera estable para un identificador de texto (ej. id de víctima)
        """
        digest = hashlib.sha256(text.encode('utf-8')).digest()
        return int.from_bytes(digest[:4], 'little')

    @classmethod
    def describe(cls, base_seed: int, *keys: int) -> Dict[str, Any]:
        """
        Descripción serializable de una corriente (para manifiestos)
        """
        return {
            'base_seed': int(base_seed),
            'keys': [int(k) for k in keys],
            'derived_seed': cls.derive(base_seed, *keys)
        }


def rng_for(base_seed: int, *keys: int) -> np.random.Generator:
    """Función de conveniencia"""
    return SeedGenerator.rng_for(base_seed, *keys)
