import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from contextlib import asynccontextmanager
from typing import Annotated, Any, List, Literal, Optional

from fastapi import FastAPI, Request, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from bibliotecas.benchmark_composer import DEFAULT_SCENES, build_plan, compose_entry, severity_record
from bibliotecas.config import carregar_configuracao
from bibliotecas.dataset_io import trajectory_from_rows
from bibliotecas.domain_model import PerturbationSpec
from bibliotecas.erros import PerturbForgeError
from bibliotecas.metrics import ATE_FALHA, ROTULOS_ALINHAMENTO, SR_FALHA, Alignment, compute_ate, compute_sr, csr_curve
from bibliotecas.registro_logs import configurar_logging, obter_logger
from bibliotecas.severity import load_severity_table

VERSAO = "1.0.0"
LinhaPose = Annotated[List[float], Field(min_length=8, max_length=8)]  # t tx ty tz qx qy qz qw

configuracao = carregar_configuracao()
logger_app = obter_logger("servidor_api")


@asynccontextmanager
async def ciclo_de_vida(_app: FastAPI):
    # Handlers de arquivo só na inicialização; importar o módulo não toca em ./logs
    atual = carregar_configuracao()
    configurar_logging(atual.log_level, atual.log_dir)
    logger_app.info("🚀 Serviço iniciado", extra={"log_record_json": {"log_dir": str(atual.log_dir)}})
    yield


app = FastAPI(
    title="perturb_forge - Serviço de Avaliação",
    description="Avaliação de trajetórias (ATE / SR), planejamento do benchmark e curvas CSR.",
    version=VERSAO,
    lifespan=ciclo_de_vida,
)
app.add_middleware(
    CORSMiddleware,
    allow_origins=list(configuracao.cors_origins),
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# 📦 Modelos de requisição / resposta

class AvaliacaoEntrada(BaseModel):  # Corpo da rota /avaliar
    est: List[LinhaPose]
    gt: List[LinhaPose]
    alinhamento: Alignment = Alignment.NONE
    metricas: List[Literal["ate", "sr"]] = ["ate", "sr"]
    model_config = ConfigDict(json_schema_extra={
        "examples": [{
            "est": [[0.0, 0, 0, 0, 0, 0, 0, 1], [1.0, 1, 0, 0, 0, 0, 0, 1]],
            "gt": [[0.0, 0, 0, 0, 0, 0, 0, 1], [1.0, 1, 0, 0, 0, 0, 0, 1]],
            "alinhamento": "none",
            "metricas": ["ate", "sr"],
        }]
    })


class AvaliacaoResponse(BaseModel):
    ate: Optional[float] = None
    sse: Optional[float] = None
    per_frame_errors: List[float] = []
    alignment: str
    rotulo: str
    sr: Optional[float] = None
    falha: bool = False
    model_config = ConfigDict(json_schema_extra={
        "examples": [{"ate": 0.0, "sse": 0.0, "per_frame_errors": [0.0, 0.0], "alignment": "none",
                      "rotulo": "ATE", "sr": 1.0, "falha": False}]
    })


class PlanoEntrada(BaseModel):  # Corpo da rota /plano
    cenas: List[str] = Field(default_factory=lambda: list(DEFAULT_SCENES))
    semente: int = Field(0, ge=0, lt=2**64)
    model_config = ConfigDict(json_schema_extra={"examples": [{"cenas": list(DEFAULT_SCENES), "semente": 42}]})


class PlanoResponse(BaseModel):
    total: int
    contagens: dict[str, int]
    semente: int


class ComposicaoEntrada(BaseModel):  # Corpo da rota /compor
    cena: str
    specs: List[str] = Field(min_length=1)
    semente: Optional[int] = Field(None, ge=0, lt=2**64)
    model_config = ConfigDict(json_schema_extra={
        "examples": [{"cena": "room0", "specs": ["fog:medium:static:7", "faster_motion:low:static:7"], "semente": None}]
    })


class ComposicaoResponse(BaseModel):
    entry_id: str
    dir_name: str
    semente: int
    etapas: List[dict]


class CsrEntrada(BaseModel):  # Corpo da rota /csr
    ates: List[float]
    limiares: List[float]
    model_config = ConfigDict(json_schema_extra={"examples": [{"ates": [0.01, 0.05, 1.0], "limiares": [0.02, 0.1, 1.0]}]})


class PontoCsr(BaseModel):
    limiar: float
    csr: float


class SaudeResponse(BaseModel):  # Modelo para resposta da rota /saude
    status: str
    versao: str
    mensagem: str
    tabela_severidade: str
    model_config = ConfigDict(json_schema_extra={
        "examples": [{"status": "OK", "versao": VERSAO, "mensagem": "Serviço operacional", "tabela_severidade": "2026.10-2"}]
    })


class ErrorResponse(BaseModel):  # Modelo para respostas de erro
    erro: str
    detalhes: Any


# 🚨 Mapeamento de erros

@app.exception_handler(PerturbForgeError)
async def tratar_erro_dominio(request: Request, exc: PerturbForgeError):
    codigo = status.HTTP_422_UNPROCESSABLE_ENTITY if isinstance(exc, ValueError) else status.HTTP_400_BAD_REQUEST
    logger_app.warning(f"⚠️ {type(exc).__name__} em '{request.url.path}': {exc}",
                       extra={'log_record_json': {"erro": type(exc).__name__, "rota": request.url.path, "status_code": codigo}})
    return JSONResponse(status_code=codigo, content={"erro": type(exc).__name__, "detalhes": str(exc)})


@app.exception_handler(Exception)
async def tratar_erro_inesperado(request: Request, exc: Exception):
    msg_detalhe_erro = f"Erro inesperado no servidor: {exc}"
    logger_app.critical(f"💥 Erro Crítico no Servidor: {msg_detalhe_erro}", exc_info=exc,
                        extra={'log_record_json': {"erro_servidor": msg_detalhe_erro, "rota": request.url.path}})
    return JSONResponse(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
                        content={"erro": "Erro interno do servidor", "detalhes": msg_detalhe_erro})


# 📏 Rotas

@app.post("/avaliar", tags=["avaliacao"], response_model=AvaliacaoResponse, responses={422: {"model": ErrorResponse}}, summary="Calcula ATE / SR de uma trajetória",
          description="Associa estimativa e referência por timestamp e calcula ATE (bruto, rígido ou sim3) e SR. Estimativa vazia segue a política de falha.")
async def avaliar(request: Request, entrada: AvaliacaoEntrada):
    logger_app.info(f"➡️  Requisição POST em '/avaliar' ({len(entrada.est)} poses estimadas, {len(entrada.gt)} de referência)",
                    extra={'log_record_json': {"alinhamento": entrada.alinhamento.value, "metricas": entrada.metricas}})
    est = trajectory_from_rows(entrada.est, "est")
    gt = trajectory_from_rows(entrada.gt, "gt")
    rotulo = ROTULOS_ALINHAMENTO[entrada.alinhamento]
    if len(est) == 0:
        return AvaliacaoResponse(
            ate=ATE_FALHA if "ate" in entrada.metricas else None,
            sr=SR_FALHA if "sr" in entrada.metricas else None,
            alignment=entrada.alinhamento.value, rotulo=rotulo, falha=True,
        )
    resposta = {"alignment": entrada.alinhamento.value, "rotulo": rotulo}
    if "ate" in entrada.metricas:
        relatorio = compute_ate(est, gt, entrada.alinhamento, configuracao.assoc_tolerance)
        resposta.update(ate=relatorio.ate, sse=relatorio.sse, per_frame_errors=relatorio.per_frame_errors)
    if "sr" in entrada.metricas:
        resposta["sr"] = compute_sr(est, gt).sr
    return AvaliacaoResponse(**resposta)


@app.post("/plano", tags=["benchmark"], response_model=PlanoResponse, responses={422: {"model": ErrorResponse}}, summary="Enumera o plano do benchmark",
          description="Gera as 1.000 entradas (125 por cena) a partir de 8 cenas e da semente mestre e devolve as contagens por categoria.")
async def planejar(entrada: PlanoEntrada):
    logger_app.info(f"➡️  Requisição POST em '/plano' com {len(entrada.cenas)} cenas", extra={'log_record_json': {"semente": entrada.semente}})
    plano = build_plan(entrada.cenas, entrada.semente)
    return PlanoResponse(total=len(plano.entries), contagens=plano.counts(), semente=plano.master_seed)


@app.post("/compor", tags=["benchmark"], response_model=ComposicaoResponse, responses={422: {"model": ErrorResponse}}, summary="Descreve uma composição de perturbações",
          description="Recebe perturbações inline (tipo:nivel:modo:semente) na ordem de aplicação e devolve o identificador da receita, os parâmetros resolvidos e o caminho aleatório de cada etapa.")
async def compor(entrada: ComposicaoEntrada):
    logger_app.info(f"➡️  Requisição POST em '/compor' com {len(entrada.specs)} etapas para '{entrada.cena}'",
                    extra={'log_record_json': {"cena": entrada.cena, "specs": entrada.specs}})
    specs = [PerturbationSpec.parse_inline(texto) for texto in entrada.specs]
    if entrada.semente is not None:
        specs = [spec.model_copy(update={"seed": entrada.semente}) for spec in specs]
    composicao = compose_entry(entrada.cena, specs)
    etapas = severity_record(composicao, load_severity_table(configuracao.severity_table))["stages"]
    return ComposicaoResponse(entry_id=composicao.entry_id, dir_name=composicao.dir_name, semente=composicao.seed, etapas=etapas)


@app.post("/csr", tags=["avaliacao"], response_model=List[PontoCsr], responses={422: {"model": ErrorResponse}}, summary="Curva de taxa de sucesso cumulativa",
          description="Percentual de ATEs menores ou iguais a cada limiar, em ordem crescente de limiar.")
async def curva_csr(entrada: CsrEntrada):
    logger_app.info(f"➡️  Requisição POST em '/csr' ({len(entrada.ates)} ATEs, {len(entrada.limiares)} limiares)", extra={'log_record_json': {}})
    return [PontoCsr(limiar=limiar, csr=csr) for limiar, csr in csr_curve(entrada.ates, entrada.limiares)]


@app.get("/saude", tags=["sistema"], response_model=SaudeResponse, summary="Verifica a saúde do serviço",
         description="Endpoint público para verificar se o serviço está online e qual tabela de severidade está carregada.")
async def verificar_saude():
    tabela = load_severity_table(configuracao.severity_table)
    return SaudeResponse(status="OK", versao=VERSAO, mensagem="Serviço de avaliação perturb_forge operacional.",
                         tabela_severidade=tabela.table_version)


# ⚙️ Execução do Servidor Uvicorn
if __name__ == "__main__":
    import uvicorn

    print(f"✅ Servidor FastAPI inicializado em http://{configuracao.api_host}:{configuracao.api_port}")
    print(f"➡️  Documentação interativa Swagger UI em: http://localhost:{configuracao.api_port}/docs")
    uvicorn.run(app, host=configuracao.api_host, port=configuracao.api_port)
