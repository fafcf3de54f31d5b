"""
Tabela de severidade: mapeia cada (tipo, nível) para um conjunto de parâmetros numéricos.

A tabela é configuração versionada (config/severity_table.json por padrão, ou o
caminho em PERTURB_FORGE_SEVERITY_TABLE). Ela precisa ser total: toda combinação de
tipo e nível deve existir, senão a carga falha listando as células ausentes.
"""
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from bibliotecas.config import carregar_configuracao
from bibliotecas.domain_model import LEVELS, Level, PerturbationKind, PerturbationSpec, Severity
from bibliotecas.erros import SchemaError, SeverityTableError
from bibliotecas.registro_logs import obter_logger

logger = obter_logger(__name__)

VERSAO_ESQUEMA_TABELA = 1


class ParametrosBase(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# 🎛️ Parâmetros por tipo

class SigmaParams(ParametrosBase):
    sigma: float = Field(ge=0)


class ShotParams(ParametrosBase):
    lam: float = Field(gt=0)


class ProbabilityParams(ParametrosBase):
    p: float = Field(ge=0, le=1)


class SpeckleParams(ParametrosBase):
    rho: float = Field(ge=0)


class DiscParams(ParametrosBase):
    radius: int = Field(ge=0)


class GlassParams(ParametrosBase):
    sigma: float = Field(ge=0)
    delta: int = Field(ge=0)
    iterations: int = Field(ge=0)


class MotionParams(ParametrosBase):
    length: int = Field(ge=1)


class SnowParams(ParametrosBase):
    threshold: float = Field(ge=0, le=1)
    dilation: int = Field(ge=0)
    alpha: float = Field(ge=0, le=1)


class AlphaParams(ParametrosBase):
    alpha: float = Field(ge=0, le=1)


class FogParams(ParametrosBase):
    alpha: float = Field(ge=0, le=1)
    gray: float = Field(default=0.7, ge=0, le=1)


class SpatterParams(ParametrosBase):
    alpha: float = Field(ge=0, le=1)
    coverage: float = Field(ge=0, le=1)
    color: tuple[float, float, float]

    @model_validator(mode="after")
    def _cor_normalizada(self):
        if any(c < 0 or c > 1 for c in self.color):
            raise ValueError("cor do spatter deve ter canais em [0, 1]")
        return self


class BrightnessParams(ParametrosBase):
    b: float


class ContrastParams(ParametrosBase):
    alpha: float = Field(ge=0)


class JpegParams(ParametrosBase):
    quality: int = Field(ge=1, le=100)


class PixelateParams(ParametrosBase):
    block: int = Field(ge=1)


class EdgeErosionParams(ParametrosBase):
    tau: float = Field(gt=0)
    radius: int = Field(ge=0)
    retain: float = Field(ge=0, le=1)


class ClipParams(ParametrosBase):
    d_min: float = Field(gt=0)
    d_max: float = Field(gt=0)

    @model_validator(mode="after")
    def _intervalo(self):
        if not self.d_min < self.d_max:
            raise ValueError(f"d_min ({self.d_min}) deve ser menor que d_max ({self.d_max})")
        return self


class RotationParams(ParametrosBase):
    sigma_deg: float = Field(ge=0)


class TranslationParams(ParametrosBase):
    sigma_m: float = Field(ge=0)


class IntervalParams(ParametrosBase):
    k: int = Field(ge=0)


K = PerturbationKind
PARAMETROS_POR_TIPO: dict[PerturbationKind, type[ParametrosBase]] = {
    K.GAUSSIAN_NOISE: SigmaParams,
    K.SHOT_NOISE: ShotParams,
    K.IMPULSE_NOISE: ProbabilityParams,
    K.SPECKLE_NOISE: SpeckleParams,
    K.DEFOCUS_BLUR: DiscParams,
    K.GLASS_BLUR: GlassParams,
    K.MOTION_BLUR: MotionParams,
    K.GAUSSIAN_BLUR: SigmaParams,
    K.SNOW: SnowParams,
    K.FROST: AlphaParams,
    K.FOG: FogParams,
    K.SPATTER: SpatterParams,
    K.BRIGHTNESS: BrightnessParams,
    K.CONTRAST: ContrastParams,
    K.JPEG_COMPRESSION: JpegParams,
    K.PIXELATE: PixelateParams,
    K.DEPTH_GAUSSIAN_NOISE: SigmaParams,
    K.EDGE_EROSION: EdgeErosionParams,
    K.RANDOM_MISSING: ProbabilityParams,
    K.RANGE_CLIPPING: ClipParams,
    K.ROTATION_DEVIATION: RotationParams,
    K.TRANSLATION_DEVIATION: TranslationParams,
    K.FASTER_MOTION: IntervalParams,
    K.MISALIGNMENT: IntervalParams,
    K.EXTRINSIC_BASELINE: SigmaParams,
}


def parametros_de(kind: PerturbationKind, valores: dict) -> ParametrosBase:
    """Valida um dicionário de parâmetros avulso (usado com Severity.params já resolvido)."""
    try:
        return PARAMETROS_POR_TIPO[kind].model_validate(valores)
    except ValidationError as e:
        raise SeverityTableError(f"Parâmetros inválidos para '{kind.value}': {e}", [kind.value])


@dataclass(frozen=True)
class SeverityTable:
    table_version: str
    cells: dict

    def params(self, kind: PerturbationKind, level: Level) -> ParametrosBase:
        return self.cells[(PerturbationKind(kind), Level(level))]

    def resolve(self, kind: PerturbationKind, level: Level) -> Severity:
        return Severity(level=level, params=self.params(kind, level).model_dump(mode="json"))

    def params_for(self, spec: PerturbationSpec, level: Level | None = None) -> ParametrosBase:
        """Parâmetros efetivos: os já resolvidos no spec (nível estático) ou os da tabela."""
        nivel = level or spec.severity.level
        if spec.severity.params and nivel == spec.severity.level:
            return parametros_de(spec.kind, spec.severity.params)
        return self.params(spec.kind, nivel)

    def to_document(self) -> dict:
        return {
            "schema_version": VERSAO_ESQUEMA_TABELA,
            "table_version": self.table_version,
            "kinds": {
                kind.value: {level.value: self.cells[(kind, level)].model_dump(mode="json") for level in LEVELS}
                for kind in PerturbationKind
            },
        }


def table_from_document(documento) -> SeverityTable:
    if not isinstance(documento, dict):
        raise SchemaError("Tabela de severidade deve ser um objeto JSON.")
    for secao in ("schema_version", "table_version", "kinds"):
        if secao not in documento:
            raise SchemaError(f"Tabela de severidade sem a seção obrigatória '{secao}'.")
    desconhecidos = set(documento) - {"schema_version", "table_version", "kinds"}
    if desconhecidos:
        raise SchemaError(f"Campos desconhecidos na tabela de severidade: {sorted(desconhecidos)} (raiz).")
    if documento["schema_version"] != VERSAO_ESQUEMA_TABELA:
        raise SchemaError(f"Versão de esquema {documento['schema_version']!r} não suportada (esperada {VERSAO_ESQUEMA_TABELA}).")

    tipos = documento["kinds"]
    if not isinstance(tipos, dict):
        raise SchemaError("Seção 'kinds' da tabela de severidade deve ser um objeto.")
    conhecidos = {k.value for k in PerturbationKind}
    extras = sorted(set(tipos) - conhecidos)
    if extras:
        raise SeverityTableError(f"Tipos desconhecidos na tabela de severidade: {extras}.", [f"kinds.{e}" for e in extras])

    celulas, ausentes, invalidas = {}, [], []
    for kind in PerturbationKind:
        niveis = tipos.get(kind.value) or {}
        for extra in sorted(set(niveis) - {lv.value for lv in LEVELS}):
            invalidas.append(f"{kind.value}/{extra}: nível desconhecido")
        for level in LEVELS:
            if level.value not in niveis:
                ausentes.append(f"{kind.value}/{level.value}")
                continue
            try:
                celulas[(kind, level)] = PARAMETROS_POR_TIPO[kind].model_validate(niveis[level.value])
            except ValidationError as e:
                detalhes = "; ".join(f"{'.'.join(str(p) for p in erro['loc'])}: {erro['msg']}" for erro in e.errors())
                invalidas.append(f"{kind.value}/{level.value}: {detalhes}")

    if ausentes:
        raise SeverityTableError(f"Tabela de severidade incompleta, células ausentes: {', '.join(ausentes)}.", ausentes)
    if invalidas:
        raise SeverityTableError(f"Tabela de severidade com células inválidas: {' | '.join(invalidas)}.", invalidas)
    return SeverityTable(table_version=str(documento["table_version"]), cells=celulas)


@lru_cache(maxsize=8)
def _carregar_tabela_cacheada(caminho: str) -> SeverityTable:
    try:
        documento = json.loads(Path(caminho).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SchemaError(f"Tabela de severidade não encontrada em '{caminho}'.")
    except json.JSONDecodeError as e:
        raise SchemaError(f"Tabela de severidade '{caminho}' não é JSON válido (linha {e.lineno}, coluna {e.colno}).")
    tabela = table_from_document(documento)
    logger.info(f"📋 Tabela de severidade '{tabela.table_version}' carregada de {caminho}.",
                extra={'log_record_json': {'caminho': caminho, 'table_version': tabela.table_version}})
    return tabela


def load_severity_table(caminho: str | Path | None = None) -> SeverityTable:
    if caminho is None:
        caminho = carregar_configuracao().severity_table
    return _carregar_tabela_cacheada(str(Path(caminho).resolve()))


def resolve_params(kind: PerturbationKind, severity) -> ParametrosBase:
    """Aceita parâmetros já validados ou uma Severity (com params resolvidos ou só o nível)."""
    if isinstance(severity, ParametrosBase):
        return severity
    if isinstance(severity, Severity):
        if severity.params:
            return parametros_de(kind, severity.params)
        return load_severity_table().params(kind, severity.level)
    raise SchemaError(f"Severidade de tipo inesperado para '{kind.value}': {type(severity).__name__}.")
