"""
Sequência preguiçosa: índices de tempo, trajetória e extrínsecas ficam em
memória; cada quadro é lido e perturbado só quando pedido.

Cada posição guarda o índice do quadro na sequência de origem (`frame_ids`).
Os sorteios aleatórios das perturbações usam esse índice, então o quadro i
sai igual qualquer que seja a ordem ou o paralelismo da escrita, e uma etapa
aplicada depois de uma subamostragem vê os mesmos caminhos aleatórios que
veria antes dela.
"""
import dataclasses
import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from bibliotecas.domain_model import DepthFrame, RgbFrame, SensorSequence, Trajectory
from bibliotecas.erros import FrameShapeError, InvalidParameter

LeitorRgb = Callable[[int], RgbFrame]
LeitorProfundidade = Callable[[int], DepthFrame]


@dataclass(frozen=True, slots=True, eq=False)
class SequenceStream:
    rgb_timestamps: np.ndarray
    depth_timestamps: np.ndarray
    rgb_at: LeitorRgb
    depth_at: LeitorProfundidade
    trajectory: Trajectory
    frame_ids: np.ndarray | None = None
    extrinsics: np.ndarray | None = None
    name: str = ""
    dropped_frames: int = field(default=0)

    def __post_init__(self):
        n = len(self.trajectory)
        rgb_ts = np.asarray(self.rgb_timestamps, dtype=np.float64).reshape(-1)
        depth_ts = np.asarray(self.depth_timestamps, dtype=np.float64).reshape(-1)
        ids = np.arange(n) if self.frame_ids is None else np.asarray(self.frame_ids, dtype=np.int64).reshape(-1)
        if len(rgb_ts) != n or len(depth_ts) != n or len(ids) != n:
            raise FrameShapeError(
                f"Fluxo '{self.name}' não é consistente por índice: {len(rgb_ts)} RGB, "
                f"{len(depth_ts)} profundidade, {len(ids)} ids, {n} poses."
            )
        object.__setattr__(self, "rgb_timestamps", rgb_ts)
        object.__setattr__(self, "depth_timestamps", depth_ts)
        object.__setattr__(self, "frame_ids", ids)
        if self.extrinsics is not None:
            extr = np.array(self.extrinsics, dtype=np.float64).reshape(-1, 3)
            if len(extr) != n:
                raise FrameShapeError(f"Fluxo '{self.name}' tem {len(extr)} extrínsecas para {n} quadros.")
            object.__setattr__(self, "extrinsics", extr)

    @classmethod
    def from_sequence(cls, seq: SensorSequence) -> "SequenceStream":
        return cls(
            rgb_timestamps=np.array([f.timestamp for f in seq.rgb_frames]),
            depth_timestamps=np.array([f.timestamp for f in seq.depth_frames]),
            rgb_at=seq.rgb_frames.__getitem__,
            depth_at=seq.depth_frames.__getitem__,
            trajectory=seq.trajectory,
            extrinsics=seq.extrinsics,
            name=seq.name,
            dropped_frames=seq.dropped_frames,
        )

    def __len__(self) -> int:
        return len(self.trajectory)

    def materialize(self, workers: int | None = None) -> SensorSequence:
        """Lê todos os quadros para uma SensorSequence em memória."""
        with ThreadPoolExecutor(max_workers=workers) as executor:
            rgb = list(executor.map(self.rgb_at, range(len(self))))
            depth = list(executor.map(self.depth_at, range(len(self))))
        return SensorSequence(
            rgb_frames=tuple(rgb),
            depth_frames=tuple(depth),
            trajectory=self.trajectory,
            extrinsics=self.extrinsics,
            name=self.name,
            dropped_frames=self.dropped_frames,
        )

    def is_aligned(self, tolerance: float = 0.02) -> bool:
        t = self.trajectory.timestamps
        return bool(np.all(np.abs(self.rgb_timestamps - t) <= tolerance) and np.all(np.abs(self.depth_timestamps - t) <= tolerance))

    def require_aligned(self, tolerance: float = 0.02) -> None:
        if not self.is_aligned(tolerance):
            raise InvalidParameter(f"Sequência '{self.name}' não está alinhada por timestamp entre RGB, profundidade e trajetória.")

    def select(self, indices) -> "SequenceStream":
        indices = np.asarray([int(i) for i in indices], dtype=np.int64)
        rgb_at, depth_at = self.rgb_at, self.depth_at
        return SequenceStream(
            rgb_timestamps=self.rgb_timestamps[indices],
            depth_timestamps=self.depth_timestamps[indices],
            rgb_at=lambda i: rgb_at(int(indices[i])),
            depth_at=lambda i: depth_at(int(indices[i])),
            trajectory=self.trajectory.select(indices),
            frame_ids=self.frame_ids[indices],
            extrinsics=None if self.extrinsics is None else self.extrinsics[indices],
            name=self.name,
        )

    def map_rgb(self, funcao: Callable[[RgbFrame, int], RgbFrame]) -> "SequenceStream":
        """`funcao(quadro, id_de_origem)` roda quando o quadro é lido."""
        rgb_at, ids = self.rgb_at, self.frame_ids
        return dataclasses.replace(self, rgb_at=lambda i: funcao(rgb_at(i), int(ids[i])))

    def map_depth(self, funcao: Callable[[DepthFrame, int], DepthFrame]) -> "SequenceStream":
        depth_at, ids = self.depth_at, self.frame_ids
        return dataclasses.replace(self, depth_at=lambda i: funcao(depth_at(i), int(ids[i])))

    def shift(self, stream: str, offsets) -> "SequenceStream":
        """Mantém len(offsets) posições; o fluxo indicado lê o conteúdo de i + offsets[i] com o timestamp de i."""
        offsets = np.asarray(offsets, dtype=np.int64)
        n_saida = len(offsets)
        if n_saida and int((np.arange(n_saida) + offsets).max()) >= len(self):
            raise InvalidParameter(f"Deslocamentos ultrapassam os {len(self)} quadros de '{self.name}'.")
        base = self.select(range(n_saida))
        if stream == "rgb":
            rgb_at, ts = self.rgb_at, base.rgb_timestamps
            return dataclasses.replace(base, rgb_at=lambda i: RgbFrame(float(ts[i]), rgb_at(i + int(offsets[i])).pixels))
        if stream == "depth":
            depth_at, ts = self.depth_at, base.depth_timestamps
            return dataclasses.replace(base, depth_at=lambda i: DepthFrame(float(ts[i]), depth_at(i + int(offsets[i])).depths))
        raise InvalidParameter(f"Fluxo desconhecido para deslocamento: '{stream}' (use rgb ou depth).")

    def replace(self, **mudancas) -> "SequenceStream":
        return dataclasses.replace(self, **mudancas)


def sobre_fluxo(operacao):
    """Deixa uma operação de SequenceStream aceitar também uma SensorSequence carregada."""
    @functools.wraps(operacao)
    def envoltorio(seq, *args, **kwargs):
        if isinstance(seq, SensorSequence):
            fluxo = SequenceStream.from_sequence(seq)
            saida = operacao(fluxo, *args, **kwargs)
            return seq if saida is fluxo else saida.materialize(workers=1)
        return operacao(seq, *args, **kwargs)
    return envoltorio
