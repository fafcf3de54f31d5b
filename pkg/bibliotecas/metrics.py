"""
Métricas de avaliação de trajetória e de reconstrução.

ATE (bruto ou após alinhamento rígido / de similaridade), SR (razão de
comprimento de caminho), CSR (taxa de sucesso cumulativa), agregação com a
política de falha (ATE 1.0 m, SR 0) e ACC / Comp / Comp-Ratio de nuvens de pontos.
"""
import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial import cKDTree

from bibliotecas.domain_model import Trajectory
from bibliotecas.erros import (
    DegenerateGeometry,
    DegenerateGroundTruth,
    EmptyInput,
    InvalidParameter,
    NoAssociations,
    TooShort,
)
from bibliotecas.registro_logs import obter_logger

logger = obter_logger(__name__)

TOLERANCIA_ASSOCIACAO = 0.02
ATE_FALHA = 1.0
SR_FALHA = 0.0


class Alignment(str, Enum):
    NONE = "none"
    RIGID = "rigid"
    SIMILARITY = "sim3"


ROTULOS_ALINHAMENTO = {
    Alignment.NONE: "ATE",
    Alignment.RIGID: "ATE-w/o Scale",
    Alignment.SIMILARITY: "ATE-w/ Scale",
}


class FailureReason(str, Enum):
    TRACKING_LOSS = "tracking_loss"
    RESOURCE_EXHAUSTION = "resource_exhaustion"
    DEGENERATE_GEOMETRY = "degenerate_geometry"

    @classmethod
    def from_code(cls, codigo: str) -> "FailureReason | None":
        codigo = (codigo or "").strip()
        if not codigo:
            return None
        atalhos = {"F": cls.TRACKING_LOSS, "G": cls.RESOURCE_EXHAUSTION, "D": cls.DEGENERATE_GEOMETRY}
        if codigo in atalhos:
            return atalhos[codigo]
        try:
            return cls(codigo)
        except ValueError:
            raise InvalidParameter(f"Código de falha desconhecido: '{codigo}'.")


# 📊 Relatórios

class AteReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    ate: float
    per_frame_errors: list[float]
    alignment: Alignment
    sse: float
    pairs: int
    scale: float = 1.0

    @property
    def label(self) -> str:
        return ROTULOS_ALINHAMENTO[self.alignment]


class SrReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    sr: float = Field(ge=0)


class ReconReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    acc_cm: float
    comp_cm: float
    comp_ratio_pct: float = Field(ge=0, le=100)
    threshold_cm: float


class SettingResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = ""
    ate: float | None = None
    sr: float | None = None
    failed: bool = False
    reason: FailureReason | None = None


class AggregateReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean_ate: float
    max_ate: float
    mean_sr: float
    min_sr: float
    failure_count: int
    setting_count: int
    failures_by_reason: dict[str, int] = Field(default_factory=dict)


# 🔗 Associação por timestamp

def associate_timestamps(t_est, t_gt, tolerance: float = TOLERANCIA_ASSOCIACAO) -> list[tuple[int, int]]:
    """Pares (i_est, j_gt) por vizinho mais próximo no tempo; cada quadro participa no máximo uma vez."""
    t_est = np.asarray(t_est, dtype=np.float64)
    t_gt = np.asarray(t_gt, dtype=np.float64)
    candidatos = []
    for i, t in enumerate(t_est):
        inicio = np.searchsorted(t_gt, t - tolerance, side="left")
        fim = np.searchsorted(t_gt, t + tolerance, side="right")
        for j in range(inicio, fim):
            diferenca = abs(t_gt[j] - t)
            if diferenca <= tolerance:
                candidatos.append((diferenca, i, j))
    candidatos.sort()
    usados_est, usados_gt, pares = set(), set(), []
    for _, i, j in candidatos:
        if i in usados_est or j in usados_gt:
            continue
        usados_est.add(i)
        usados_gt.add(j)
        pares.append((i, j))
    return sorted(pares)


# 📐 Alinhamento

def umeyama_align(src, dst, with_scale: bool = False) -> tuple[float, np.ndarray, np.ndarray]:
    """Solução fechada de mínimos quadrados para dst ≈ s·R·src + t."""
    src = np.asarray(src, dtype=np.float64).reshape(-1, 3)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 3)
    if len(src) != len(dst):
        raise InvalidParameter(f"Conjuntos com tamanhos diferentes: {len(src)} vs {len(dst)}.")
    n = len(src)
    if n == 0:
        raise DegenerateGeometry("Alinhamento sem correspondências.")

    media_src, media_dst = src.mean(axis=0), dst.mean(axis=0)
    centrado_src, centrado_dst = src - media_src, dst - media_dst
    covariancia = centrado_dst.T @ centrado_src / n
    U, D, Vt = np.linalg.svd(covariancia)
    if D[0] <= 0 or D[1] <= 1e-12 * D[0]:
        raise DegenerateGeometry(f"Configuração degenerada para alinhamento (valores singulares {D.tolist()}).")

    S = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        S[2, 2] = -1.0
    R = U @ S @ Vt
    if with_scale:
        variancia_src = np.sum(centrado_src**2) / n
        escala = float(np.trace(np.diag(D) @ S) / variancia_src)
    else:
        escala = 1.0
    t = media_dst - escala * R @ media_src
    return escala, R, t


# 🧭 Métricas de trajetória

def compute_ate(est: Trajectory, gt: Trajectory, alignment: Alignment = Alignment.NONE,
                tolerance: float = TOLERANCIA_ASSOCIACAO) -> AteReport:
    alignment = Alignment(alignment)
    pares = associate_timestamps(est.timestamps, gt.timestamps, tolerance)
    if not pares:
        raise NoAssociations(
            f"Nenhum par de timestamps dentro de {tolerance} s entre estimativa ({len(est)} poses) e referência ({len(gt)} poses)."
        )
    if len(pares) < 2:
        raise TooShort(f"ATE exige pelo menos 2 pares associados, encontrado {len(pares)}.")

    indices_est, indices_gt = map(list, zip(*pares))
    p_est = est.positions[indices_est]
    p_gt = gt.positions[indices_gt]
    escala = 1.0
    if alignment != Alignment.NONE:
        escala, R, t = umeyama_align(p_est, p_gt, with_scale=alignment == Alignment.SIMILARITY)
        p_est = escala * (p_est @ R.T) + t

    erros = np.linalg.norm(p_est - p_gt, axis=1)
    sse = float(np.sum(erros**2))
    ate = float(np.sqrt(sse / len(erros)))
    logger.debug(f"📏 ATE ({alignment.value}) = {ate:.6f} m em {len(pares)} pares.",
                 extra={'log_record_json': {'ate': ate, 'pairs': len(pares), 'alignment': alignment.value}})
    return AteReport(ate=ate, per_frame_errors=erros.tolist(), alignment=alignment, sse=sse, pairs=len(pares), scale=escala)


def path_length(positions) -> float:
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    if len(positions) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(positions, axis=0), axis=1)))


def compute_sr(est: Trajectory, gt: Trajectory) -> SrReport:
    comprimento_gt = path_length(gt.positions)
    if comprimento_gt <= 0:
        raise DegenerateGroundTruth(f"Trajetória de referência com comprimento de caminho nulo ({len(gt)} poses).")
    return SrReport(sr=path_length(est.positions) / comprimento_gt)


def compute_csr(ates, xi: float) -> float:
    ates = np.asarray(list(ates), dtype=np.float64)
    if ates.size == 0:
        raise EmptyInput("CSR exige ao menos um valor de ATE.")
    if xi < 0:
        raise InvalidParameter(f"Limiar do CSR deve ser >= 0, recebido {xi}.")
    return 100.0 * int(np.count_nonzero(ates <= xi)) / ates.size


def csr_curve(ates, thresholds) -> list[tuple[float, float]]:
    ates = list(ates)
    return [(float(xi), compute_csr(ates, xi)) for xi in sorted(thresholds)]


# 🧮 Agregação

def setting_values(resultado: SettingResult) -> tuple[float, float]:
    if resultado.failed:
        return ATE_FALHA, SR_FALHA
    if resultado.ate is None or resultado.sr is None:
        raise InvalidParameter(f"Configuração '{resultado.name}' sem ATE/SR e sem marca de falha.")
    return resultado.ate, resultado.sr


def average_runs(execucoes: list[SettingResult]) -> SettingResult:
    """Média de execuções repetidas de uma mesma configuração (execuções falhas entram com ATE 1.0 / SR 0)."""
    if not execucoes:
        raise EmptyInput("Nenhuma execução para calcular a média.")
    if len(execucoes) == 1:
        return execucoes[0]
    if all(r.failed for r in execucoes):
        return execucoes[0]
    valores = [setting_values(r) for r in execucoes]
    return SettingResult(
        name=execucoes[0].name,
        ate=math.fsum(v[0] for v in valores) / len(valores),
        sr=math.fsum(v[1] for v in valores) / len(valores),
    )


def aggregate(settings) -> AggregateReport:
    settings = list(settings)
    if not settings:
        raise EmptyInput("Agregação exige ao menos uma configuração.")
    valores = [setting_values(s) for s in settings]
    ates = [v[0] for v in valores]
    srs = [v[1] for v in valores]
    por_motivo: dict[str, int] = {}
    for s in settings:
        if s.failed and s.reason is not None:
            por_motivo[s.reason.value] = por_motivo.get(s.reason.value, 0) + 1
    # fsum arredonda a soma exata, então a ordem das configurações não altera o resultado
    return AggregateReport(
        mean_ate=math.fsum(ates) / len(ates),
        max_ate=max(ates),
        mean_sr=math.fsum(srs) / len(srs),
        min_sr=min(srs),
        failure_count=sum(1 for s in settings if s.failed),
        setting_count=len(settings),
        failures_by_reason=dict(sorted(por_motivo.items())),
    )


# ☁️ Reconstrução

def _distancias(consulta: np.ndarray, referencia: np.ndarray, indices: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum((consulta - referencia[indices]) ** 2, axis=1))


def nearest_distances(consulta, referencia, method: str = "kdtree") -> np.ndarray:
    consulta = np.asarray(consulta, dtype=np.float64).reshape(-1, 3)
    referencia = np.asarray(referencia, dtype=np.float64).reshape(-1, 3)
    if method == "kdtree":
        _, indices = cKDTree(referencia).query(consulta, k=1)
    elif method == "exhaustive":
        indices = np.empty(len(consulta), dtype=np.int64)
        for inicio in range(0, len(consulta), 512):
            bloco = consulta[inicio:inicio + 512]
            quadrados = np.sum((bloco[:, None, :] - referencia[None, :, :]) ** 2, axis=2)
            indices[inicio:inicio + 512] = np.argmin(quadrados, axis=1)
    else:
        raise InvalidParameter(f"Método de vizinho mais próximo desconhecido: '{method}'.")
    return _distancias(consulta, referencia, np.asarray(indices, dtype=np.int64))


def compute_recon_metrics(recon, gt, threshold_cm: float = 5.0, method: str = "kdtree") -> ReconReport:
    recon = np.asarray(recon, dtype=np.float64).reshape(-1, 3)
    gt = np.asarray(gt, dtype=np.float64).reshape(-1, 3)
    if len(recon) == 0 or len(gt) == 0:
        raise EmptyInput(f"Nuvem de pontos vazia (reconstrução: {len(recon)} pontos, referência: {len(gt)} pontos).")
    distancias_recon_cm = nearest_distances(recon, gt, method) * 100.0
    distancias_gt_cm = nearest_distances(gt, recon, method) * 100.0
    return ReconReport(
        acc_cm=float(np.mean(distancias_recon_cm)),
        comp_cm=float(np.mean(distancias_gt_cm)),
        comp_ratio_pct=float(100.0 * np.mean(distancias_gt_cm <= threshold_cm)),
        threshold_cm=float(threshold_cm),
    )
