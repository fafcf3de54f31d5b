"""
Perturbações no nível da trajetória: desvio de rotação, desvio de translação,
desvio combinado, movimento mais rápido (subamostragem) e ruído na linha de
base extrínseca de um par estéreo.

Os desvios são i.i.d. por quadro e cada quadro usa o caminho aleatório do seu
índice original (`frame_ids`), então subamostrar antes ou depois de perturbar
produz as mesmas poses nos quadros mantidos.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from bibliotecas.domain_model import (
    TOLERANCIA_QUATERNION,
    PerturbationKind,
    Trajectory,
    compose_quaternions,
)
from bibliotecas.erros import InvalidParameter
from bibliotecas.registro_logs import obter_logger
from bibliotecas.rng_stream import RngStream
from bibliotecas.sequence_stream import SequenceStream, sobre_fluxo

logger = obter_logger(__name__)

K = PerturbationKind


@dataclass(frozen=True, slots=True)
class DeviationParams:
    rot_sigma_deg: float = 0.0
    trans_sigma_m: float = 0.0

    def __post_init__(self):
        if self.rot_sigma_deg < 0 or self.trans_sigma_m < 0:
            raise InvalidParameter(f"Desvios devem ser >= 0, recebido rotação={self.rot_sigma_deg}° translação={self.trans_sigma_m} m.")


@dataclass(frozen=True, slots=True)
class ExtrinsicSpec:
    baseline_axis: tuple[float, float, float]
    sigma: float

    def __post_init__(self):
        norma = float(np.linalg.norm(self.baseline_axis))
        if abs(norma - 1.0) > TOLERANCIA_QUATERNION:
            raise InvalidParameter(f"Eixo da linha de base {tuple(self.baseline_axis)} não é unitário (norma={norma!r}).")
        if self.sigma < 0:
            raise InvalidParameter(f"Desvio da linha de base deve ser >= 0, recebido {self.sigma}.")

    @classmethod
    def along(cls, extrinsics: np.ndarray, sigma: float) -> "ExtrinsicSpec":
        """Usa a direção média das translações extrínsecas como eixo da linha de base."""
        media = np.asarray(extrinsics, dtype=np.float64).reshape(-1, 3).mean(axis=0)
        norma = float(np.linalg.norm(media))
        if norma == 0:
            raise InvalidParameter("Translações extrínsecas nulas não definem uma linha de base.")
        return cls(tuple(float(v) for v in media / norma), sigma)


def _ids(n: int, frame_ids) -> np.ndarray:
    if frame_ids is None:
        return np.arange(n)
    ids = np.asarray(frame_ids, dtype=np.int64)
    if len(ids) != n:
        raise InvalidParameter(f"frame_ids tem {len(ids)} entradas para {n} poses.")
    return ids


def deviation_samples(rng: RngStream, frame_ids, tag, sigma: float) -> np.ndarray:
    """Amostras (N, 3) de N(0, sigma²), uma linha por quadro, no caminho (quadro, tag)."""
    if len(frame_ids) == 0:
        return np.empty((0, 3))
    return np.stack([rng.normal(int(i), tag, sigma, 3) for i in frame_ids])


def perturb_rotation(traj: Trajectory, sigma_deg: float, rng: RngStream, frame_ids=None) -> Trajectory:
    if sigma_deg < 0:
        raise InvalidParameter(f"Desvio de rotação deve ser >= 0, recebido {sigma_deg}.")
    if sigma_deg == 0 or len(traj) == 0:
        return traj
    angulos = deviation_samples(rng, _ids(len(traj), frame_ids), K.ROTATION_DEVIATION, sigma_deg)
    # 'XYZ' maiúsculo = composição intrínseca Rx·Ry·Rz
    delta = Rotation.from_euler("XYZ", angulos, degrees=True).as_quat()[:, [3, 0, 1, 2]]
    return Trajectory(traj.timestamps, traj.positions, compose_quaternions(traj.orientations, delta))


def perturb_translation(traj: Trajectory, sigma_m: float, rng: RngStream, frame_ids=None) -> Trajectory:
    if sigma_m < 0:
        raise InvalidParameter(f"Desvio de translação deve ser >= 0, recebido {sigma_m}.")
    if sigma_m == 0 or len(traj) == 0:
        return traj
    deslocamentos = deviation_samples(rng, _ids(len(traj), frame_ids), K.TRANSLATION_DEVIATION, sigma_m)
    return Trajectory(traj.timestamps, traj.positions + deslocamentos, traj.orientations)


def perturb_se3(traj: Trajectory, params: DeviationParams, rng: RngStream, frame_ids=None) -> Trajectory:
    rotacionada = perturb_rotation(traj, params.rot_sigma_deg, rng, frame_ids)
    return perturb_translation(rotacionada, params.trans_sigma_m, rng, frame_ids)


@sobre_fluxo
def downsample_faster_motion(seq: SequenceStream, k: int) -> SequenceStream:
    if k < 1:
        raise InvalidParameter(f"Intervalo de subamostragem deve ser >= 1, recebido {k}.")
    if k == 1:
        return seq
    seq.require_aligned()
    mantidos = range(0, len(seq), k)
    logger.debug(f"⏩ Subamostrando '{seq.name}' por {k}: {len(seq)} → {len(mantidos)} quadros.",
                 extra={'log_record_json': {'k': k, 'entrada': len(seq), 'saida': len(mantidos)}})
    return seq.select(mantidos)


def perturb_extrinsic_baseline(extrinsics, spec: ExtrinsicSpec, rng: RngStream, frame_ids=None) -> np.ndarray:
    translacoes = np.array(extrinsics, dtype=np.float64).reshape(-1, 3)
    if spec.sigma == 0 or len(translacoes) == 0:
        return translacoes
    ids = _ids(len(translacoes), frame_ids)
    eta = np.array([float(rng.normal(int(i), K.EXTRINSIC_BASELINE, spec.sigma)) for i in ids])
    return translacoes + eta[:, None] * np.asarray(spec.baseline_axis, dtype=np.float64)[None, :]
