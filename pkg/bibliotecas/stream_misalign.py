"""Desalinhamento temporal entre os fluxos RGB e de profundidade (estático e dinâmico)."""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from bibliotecas.domain_model import Mode, PerturbationKind, PerturbationSpec
from bibliotecas.erros import DelayExceedsSequence, InvalidParameter, KindMismatch
from bibliotecas.registro_logs import obter_logger
from bibliotecas.rng_stream import RngStream
from bibliotecas.sequence_stream import SequenceStream, sobre_fluxo
from bibliotecas.severity import SeverityTable, load_severity_table

logger = obter_logger(__name__)


class ShiftedStream(str, Enum):
    RGB = "rgb"
    DEPTH = "depth"


@dataclass(frozen=True, slots=True)
class MisalignSpec:
    delay_frames: int
    jitter: int = 0
    shifted_stream: ShiftedStream = ShiftedStream.RGB

    def __post_init__(self):
        if self.delay_frames < 0 or self.jitter < 0:
            raise InvalidParameter(f"Atraso ({self.delay_frames}) e jitter ({self.jitter}) devem ser >= 0.")
        if self.jitter > 0 and self.delay_frames < self.jitter:
            raise InvalidParameter(f"Atraso {self.delay_frames} menor que o jitter {self.jitter} geraria deslocamento negativo.")

    @classmethod
    def from_perturbation(cls, spec: PerturbationSpec, table: SeverityTable | None = None) -> "MisalignSpec":
        if spec.kind != PerturbationKind.MISALIGNMENT:
            raise KindMismatch(f"Tipo '{spec.kind.value}' não é desalinhamento de fluxos.")
        params = (table or load_severity_table()).params_for(spec)
        return cls(delay_frames=params.k, jitter=1 if spec.mode == Mode.DYNAMIC else 0)


def frame_offsets(n_saida: int, spec: MisalignSpec, rng: RngStream, frame_ids=None) -> np.ndarray:
    if spec.jitter == 0:
        return np.full(n_saida, spec.delay_frames, dtype=np.int64)
    ids = np.arange(n_saida) if frame_ids is None else np.asarray(frame_ids, dtype=np.int64)[:n_saida]
    opcoes = 2 * spec.jitter + 1
    sorteios = np.array([float(rng.uniform(int(i), PerturbationKind.MISALIGNMENT)) for i in ids])
    return spec.delay_frames - spec.jitter + np.minimum((sorteios * opcoes).astype(np.int64), opcoes - 1)


@sobre_fluxo
def apply_misalignment(seq: SequenceStream, spec: MisalignSpec, rng: RngStream) -> SequenceStream:
    n = len(seq)
    if spec.delay_frames == 0 and spec.jitter == 0:
        return seq
    n_saida = n - spec.delay_frames - spec.jitter
    if spec.delay_frames >= n or n_saida <= 0:
        raise DelayExceedsSequence(f"Atraso de {spec.delay_frames} (+{spec.jitter}) quadros não cabe na sequência '{seq.name}' de {n} quadros.")
    seq.require_aligned()

    # o quadro deslocado herda o timestamp do parceiro não deslocado
    saida = seq.shift(spec.shifted_stream.value, frame_offsets(n_saida, spec, rng, seq.frame_ids))
    logger.debug(f"⏱️ Desalinhamento de '{seq.name}': atraso {spec.delay_frames}, jitter {spec.jitter}, {n} → {n_saida} quadros.",
                 extra={'log_record_json': {'delay': spec.delay_frames, 'jitter': spec.jitter, 'stream': spec.shifted_stream.value}})
    return saida
