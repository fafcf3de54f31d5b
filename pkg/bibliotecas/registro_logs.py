import json
import logging
import os
from datetime import datetime

from colorama import Back, Fore, Style

LOGGER_RAIZ = "perturb_forge"
ARQUIVO_LOG = "perturb-forge-logs.json"
ARQUIVO_LOG_DETALHADO = "perturb-forge-detailed-logs.json"


class FormatterColorido(logging.Formatter):  # ✨ Formatter para logs coloridos no console
    CORES = {
        'DEBUG': Fore.BLUE, 'INFO': Fore.GREEN, 'WARNING': Fore.YELLOW,
        'ERROR': Fore.RED, 'CRITICAL': Fore.WHITE + Back.RED,
    }
    EMOJIS = {
        'DEBUG': '🐛', 'INFO': '✅', 'WARNING': '⚠️', 'ERROR': '🔥', 'CRITICAL': '🚨'
    }

    def format(self, record):
        cor_log = self.CORES.get(record.levelname, Fore.GREEN)
        emoji = self.EMOJIS.get(record.levelname, '')
        nivel_log = f"{cor_log}{record.levelname}{Style.RESET_ALL}"
        mensagem = f"{cor_log}{record.getMessage()}{Style.RESET_ALL}"
        timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
        return f"{timestamp} - {emoji} {nivel_log} - {record.name}:{record.lineno} - {mensagem}"


class FormatterJson(logging.Formatter):  # ✍️ Uma linha JSON por registro
    def __init__(self, detalhado: bool = False):
        super().__init__()
        self.detalhado = detalhado

    def format(self, record):
        detalhes = getattr(record, "log_record_json", {}) or {}
        registro = {
            "timestamp": datetime.fromtimestamp(record.created).isoformat(),
            "level": record.levelname,
            "message": record.getMessage(),
        }
        if self.detalhado:
            registro["name"] = record.name
            registro["line"] = record.lineno
            registro["record"] = detalhes
            if record.exc_info:
                registro["exception"] = self.formatException(record.exc_info)
        else:
            registro["detalhes"] = detalhes
        return json.dumps(registro, ensure_ascii=False, default=str)


def configurar_logging(nivel: str = "INFO", diretorio_logs: str | os.PathLike | None = "logs") -> logging.Logger:
    logger = logging.getLogger(LOGGER_RAIZ)
    logger.setLevel(nivel)
    logger.propagate = False
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(FormatterColorido())
    logger.addHandler(console_handler)

    if diretorio_logs is not None:
        os.makedirs(diretorio_logs, exist_ok=True)
        handler_resumo = logging.FileHandler(os.path.join(diretorio_logs, ARQUIVO_LOG), encoding='utf-8')
        handler_resumo.setFormatter(FormatterJson(detalhado=False))
        handler_detalhado = logging.FileHandler(os.path.join(diretorio_logs, ARQUIVO_LOG_DETALHADO), encoding='utf-8')
        handler_detalhado.setFormatter(FormatterJson(detalhado=True))
        logger.addHandler(handler_resumo)
        logger.addHandler(handler_detalhado)
    return logger


def obter_logger(nome_modulo: str) -> logging.Logger:
    return logging.getLogger(f"{LOGGER_RAIZ}.{nome_modulo.rsplit('.', 1)[-1]}")
