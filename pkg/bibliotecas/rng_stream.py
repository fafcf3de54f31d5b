"""
Fluxo aleatório determinístico baseado em contador.

Cada par (quadro, etiqueta) recebe um gerador Philox próprio, chaveado por
SHA-256 de "semente|sequência|quadro|etiqueta". O contador de sorteios é a
posição dentro desse fluxo, então o valor de um sorteio depende apenas de
(semente, caminho) e nunca da ordem em que os quadros são processados.
"""
import hashlib
from dataclasses import dataclass

import numpy as np

from bibliotecas.domain_model import LEVELS, MAX_SEED, Level, PerturbationKind
from bibliotecas.erros import InvalidParameter


def derivar_chave(*partes) -> int:
    texto = "|".join(str(p) for p in partes)
    return int.from_bytes(hashlib.sha256(texto.encode("utf-8")).digest()[:16], "little")


@dataclass(frozen=True, slots=True)
class RngStream:
    seed: int
    sequence_id: str = ""

    def __post_init__(self):
        if not 0 <= int(self.seed) <= MAX_SEED:
            raise InvalidParameter(f"Semente {self.seed} fora do intervalo de 64 bits sem sinal.")

    def generator(self, frame_index: int, tag) -> np.random.Generator:
        if isinstance(tag, PerturbationKind):
            tag = tag.value
        chave = derivar_chave(self.seed, self.sequence_id, int(frame_index), tag)
        return np.random.Generator(np.random.Philox(key=chave))

    def uniform(self, frame_index: int, tag, size=None):
        return self.generator(frame_index, tag).random(size)

    def normal(self, frame_index: int, tag, sigma: float = 1.0, size=None):
        return self.generator(frame_index, tag).normal(0.0, sigma, size)

    def level(self, frame_index: int, kind: PerturbationKind) -> Level:
        """Nível sorteado uniformemente entre low/medium/high para o modo dinâmico."""
        u = float(self.uniform(frame_index, f"{kind.value}:level"))
        return LEVELS[min(int(3.0 * u), 2)]

    def for_sequence(self, sequence_id: str) -> "RngStream":
        return RngStream(self.seed, sequence_id)


def rng_draw(stream: RngStream, path: tuple) -> float:
    """Sorteio uniforme em [0, 1) no caminho (quadro, etiqueta, contador)."""
    frame_index, tag, contador = path
    if contador < 0:
        raise InvalidParameter(f"Contador de sorteio deve ser não negativo, recebido {contador}.")
    valores = stream.uniform(frame_index, tag, size=int(contador) + 1)
    return float(valores[-1])
