"""Corrupções de profundidade: ruído gaussiano, erosão de bordas, dados ausentes e recorte de alcance."""
from dataclasses import dataclass

import cv2
import numpy as np

from bibliotecas.domain_model import DEPTH_KINDS, VOID, DepthFrame, Mode, PerturbationKind, PerturbationSpec
from bibliotecas.erros import InvalidParameter, KindMismatch
from bibliotecas.registro_logs import obter_logger
from bibliotecas.rgb_perturb import disc_kernel
from bibliotecas.rng_stream import RngStream
from bibliotecas.severity import SeverityTable, load_severity_table, resolve_params

logger = obter_logger(__name__)

K = PerturbationKind
PISO_PROFUNDIDADE = 0.001  # 1 mm


@dataclass(frozen=True, slots=True)
class ClipRange:
    d_min: float
    d_max: float

    def __post_init__(self):
        if not 0 < self.d_min < self.d_max:
            raise InvalidParameter(f"Intervalo de recorte inválido: exige 0 < d_min < d_max, recebido [{self.d_min}, {self.d_max}].")


def depth_gaussian_noise(frame: DepthFrame, sigma: float, rng: RngStream, frame_index: int = 0) -> DepthFrame:
    if sigma < 0:
        raise InvalidParameter(f"Desvio padrão do ruído de profundidade deve ser >= 0, recebido {sigma}.")
    if sigma == 0:
        return frame
    ruido = rng.normal(frame_index, K.DEPTH_GAUSSIAN_NOISE, sigma, frame.depths.shape)
    # NaN + ruído continua NaN, então VOID é preservado
    return frame.with_depths(_piso(frame.depths + ruido))


def _piso(depths: np.ndarray) -> np.ndarray:
    validos = ~np.isnan(depths)
    saida = depths.copy()
    saida[validos] = np.maximum(saida[validos], PISO_PROFUNDIDADE)
    return saida


def _media_vizinhos(depths: np.ndarray) -> np.ndarray:
    preenchido = np.pad(depths, 1, mode="constant", constant_values=np.nan)
    vizinhos = np.stack([
        preenchido[:-2, 1:-1], preenchido[2:, 1:-1], preenchido[1:-1, :-2], preenchido[1:-1, 2:],
    ])
    contagem = np.sum(~np.isnan(vizinhos), axis=0)
    soma = np.nansum(vizinhos, axis=0)
    return np.divide(soma, contagem, out=np.full(depths.shape, np.nan), where=contagem > 0)


def edge_candidates(depths: np.ndarray, tau: float, radius: int) -> np.ndarray:
    """Pixels de borda (gradiente > tau, lado mais próximo da descontinuidade) dilatados por um disco de raio `radius`."""
    if min(depths.shape) < 2:
        return np.zeros(depths.shape, dtype=bool)
    gy, gx = np.gradient(depths)
    magnitude = np.hypot(gx, gy)
    validos = ~np.isnan(depths)
    with np.errstate(invalid="ignore"):
        bordas = (magnitude > tau) & (depths < _media_vizinhos(depths)) & validos
    if radius > 0 and bordas.any():
        disco = (disc_kernel(radius).weights > 0).astype(np.uint8)
        bordas = cv2.dilate(bordas.astype(np.uint8), disco).astype(bool)
    return bordas & validos


def depth_edge_erosion(frame: DepthFrame, severity, rng: RngStream, frame_index: int = 0) -> DepthFrame:
    params = resolve_params(K.EDGE_EROSION, severity)
    if params.retain == 0:
        return frame
    candidatos = edge_candidates(frame.depths, params.tau, params.radius)
    if not candidatos.any():
        return frame
    removidos = candidatos & (rng.uniform(frame_index, K.EDGE_EROSION, frame.depths.shape) < params.retain)
    saida = frame.depths.copy()
    saida[removidos] = VOID
    return frame.with_depths(saida)


def depth_random_missing(frame: DepthFrame, missing_rate: float, rng: RngStream, frame_index: int = 0) -> DepthFrame:
    if not 0.0 <= missing_rate <= 1.0:
        raise InvalidParameter(f"Taxa de ausência deve estar em [0, 1], recebido {missing_rate}.")
    if missing_rate == 0:
        return frame
    mascara = rng.uniform(frame_index, K.RANDOM_MISSING, frame.depths.shape) < missing_rate
    saida = frame.depths.copy()
    saida[mascara] = VOID
    return frame.with_depths(saida)


def depth_range_clip(frame: DepthFrame, clip_range: ClipRange) -> DepthFrame:
    with np.errstate(invalid="ignore"):
        dentro = (frame.depths >= clip_range.d_min) & (frame.depths <= clip_range.d_max)
    return frame.with_depths(np.where(dentro, frame.depths, VOID))


def apply_depth(
    frame: DepthFrame,
    spec: PerturbationSpec,
    frame_index: int,
    rng: RngStream | None = None,
    table: SeverityTable | None = None,
) -> DepthFrame:
    if spec.kind not in DEPTH_KINDS:
        raise KindMismatch(f"Tipo '{spec.kind.value}' não é uma corrupção de profundidade.")
    rng = rng or RngStream(spec.seed)
    table = table or load_severity_table()
    nivel = rng.level(frame_index, spec.kind) if spec.mode == Mode.DYNAMIC else spec.severity.level
    params = table.params_for(spec, nivel)
    logger.debug(f"📏 Aplicando '{spec.kind.value}' nível '{nivel.value}' no quadro de profundidade {frame_index}.",
                 extra={'log_record_json': {'kind': spec.kind.value, 'level': nivel.value, 'frame_index': frame_index}})

    if spec.kind == K.DEPTH_GAUSSIAN_NOISE:
        return depth_gaussian_noise(frame, params.sigma, rng, frame_index)
    if spec.kind == K.EDGE_EROSION:
        return depth_edge_erosion(frame, params, rng, frame_index)
    if spec.kind == K.RANDOM_MISSING:
        return depth_random_missing(frame, params.p, rng, frame_index)
    return depth_range_clip(frame, ClipRange(params.d_min, params.d_max))
