import os
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict

from bibliotecas.erros import InvalidParameter

# ⚙️ Configurações do perturb_forge (variáveis de ambiente ou valores padrão)
RAIZ_PROJETO = Path(__file__).resolve().parent.parent
TABELA_SEVERIDADE_PADRAO = RAIZ_PROJETO / "config" / "severity_table.json"
ENV_TABELA_SEVERIDADE = "PERTURB_FORGE_SEVERITY_TABLE"


class Configuracao(BaseModel):
    model_config = ConfigDict(frozen=True)

    severity_table: Path = TABELA_SEVERIDADE_PADRAO
    log_dir: Path = Path("logs")
    log_level: str = "INFO"
    depth_scale: float = 5000.0
    assoc_tolerance: float = 0.02
    api_host: str = "0.0.0.0"
    api_port: int = 8882
    cors_origins: tuple[str, ...] = ("http://localhost",)


def _ler_float(nome: str, padrao: float) -> float:
    bruto = os.environ.get(nome)
    if bruto is None or bruto.strip() == "":
        return padrao
    try:
        valor = float(bruto)
    except ValueError:
        raise InvalidParameter(f"Variável de ambiente {nome}='{bruto}' não é um número válido.")
    if not valor > 0:
        raise InvalidParameter(f"Variável de ambiente {nome}='{bruto}' deve ser positiva.")
    return valor


def _ler_int(nome: str, padrao: int) -> int:
    bruto = os.environ.get(nome)
    if bruto is None or bruto.strip() == "":
        return padrao
    try:
        return int(bruto)
    except ValueError:
        raise InvalidParameter(f"Variável de ambiente {nome}='{bruto}' não é um inteiro válido.")


def carregar_configuracao() -> Configuracao:
    load_dotenv(override=False)
    nivel = os.environ.get("PERTURB_FORGE_LOG_LEVEL", "INFO").upper()
    if nivel not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise InvalidParameter(f"Variável de ambiente PERTURB_FORGE_LOG_LEVEL='{nivel}' não é um nível de log válido.")
    origens = os.environ.get("PERTURB_FORGE_CORS_ORIGINS", "http://localhost").split(",")
    return Configuracao(
        severity_table=Path(os.environ.get(ENV_TABELA_SEVERIDADE) or TABELA_SEVERIDADE_PADRAO),
        log_dir=Path(os.environ.get("PERTURB_FORGE_LOG_DIR", "logs")),
        log_level=nivel,
        depth_scale=_ler_float("PERTURB_FORGE_DEPTH_SCALE", 5000.0),
        assoc_tolerance=_ler_float("PERTURB_FORGE_ASSOC_TOLERANCE", 0.02),
        api_host=os.environ.get("PERTURB_FORGE_API_HOST", "0.0.0.0"),
        api_port=_ler_int("PERTURB_FORGE_API_PORT", 8882),
        cors_origins=tuple(o.strip() for o in origens if o.strip()),
    )
