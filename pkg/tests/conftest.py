import sys
import os
import json
import datetime

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from bibliotecas.domain_model import DepthFrame, RgbFrame, SensorSequence, Trajectory  # noqa: E402

DIRETORIO_LOGS_TESTE = "test_logs"
_resultados_teste = []


def obter_proximo_nome_arquivo_log():
    contador_logs = 1
    while True:
        nome_arquivo_log = os.path.join(DIRETORIO_LOGS_TESTE, f"log_teste_{contador_logs}.json")
        if not os.path.exists(nome_arquivo_log):
            return nome_arquivo_log
        contador_logs += 1


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and not report.passed):
        if report.passed:
            status_teste = "PASSOU"
        elif report.failed and report.when == "call":
            status_teste = "FALHOU"
        elif report.skipped:
            status_teste = "PULADO"
        else:
            status_teste = "ERRO"
        _resultados_teste.append({
            "nome_teste": report.nodeid,
            "status_teste": status_teste,
            "duracao_segundos": round(report.duration, 4),
        })


def pytest_sessionfinish(session, exitstatus):
    if not _resultados_teste:
        return
    os.makedirs(DIRETORIO_LOGS_TESTE, exist_ok=True)
    nome_arquivo_log = obter_proximo_nome_arquivo_log()
    dados_log = {"timestamp_execucao_teste": datetime.datetime.now().isoformat(), "resultados_teste": _resultados_teste}
    with open(nome_arquivo_log, 'w', encoding='utf-8') as arquivo:
        json.dump(dados_log, arquivo, indent=4, ensure_ascii=False)


# 🧪 Fixtures compartilhadas

def trajetoria_linear(n: int = 10, passo: float = 0.1, dt: float = 0.1, inicio: float = 0.0) -> Trajectory:
    tempos = inicio + dt * np.arange(n)
    posicoes = np.stack([passo * np.arange(n), np.zeros(n), np.zeros(n)], axis=1)
    quats = np.tile([1.0, 0.0, 0.0, 0.0], (n, 1))
    return Trajectory(tempos, posicoes, quats)


def sequencia_sintetica(n: int = 6, altura: int = 16, largura: int = 20, seed: int = 0, extrinsics: bool = False,
                        nome: str = "sintetica") -> SensorSequence:
    gerador = np.random.default_rng(seed)
    traj = trajetoria_linear(n)
    rgb = tuple(RgbFrame(t, gerador.uniform(0.1, 0.9, (altura, largura, 3))) for t in traj.timestamps)
    depth = tuple(DepthFrame(t, gerador.uniform(0.5, 4.0, (altura, largura))) for t in traj.timestamps)
    extr = np.tile([0.05, 0.0, 0.0], (n, 1)) if extrinsics else None
    return SensorSequence(rgb_frames=rgb, depth_frames=depth, trajectory=traj, extrinsics=extr, name=nome)


def assert_sequencias_iguais(a: SensorSequence, b: SensorSequence) -> None:
    assert len(a) == len(b)
    np.testing.assert_array_equal(a.trajectory.timestamps, b.trajectory.timestamps)
    np.testing.assert_array_equal(a.trajectory.positions, b.trajectory.positions)
    np.testing.assert_array_equal(a.trajectory.orientations, b.trajectory.orientations)
    for x, y in zip(a.rgb_frames, b.rgb_frames):
        assert x.timestamp == y.timestamp
        np.testing.assert_array_equal(x.pixels, y.pixels)
    for x, y in zip(a.depth_frames, b.depth_frames):
        assert x.timestamp == y.timestamp
        np.testing.assert_array_equal(x.depths, y.depths)
    assert (a.extrinsics is None) == (b.extrinsics is None)
    if a.extrinsics is not None:
        np.testing.assert_array_equal(a.extrinsics, b.extrinsics)


@pytest.fixture
def trajetoria():
    return trajetoria_linear()


@pytest.fixture
def sequencia():
    return sequencia_sintetica()


@pytest.fixture(autouse=True)
def _ambiente_isolado(monkeypatch, tmp_path):
    monkeypatch.setenv("PERTURB_FORGE_LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.delenv("PERTURB_FORGE_SEVERITY_TABLE", raising=False)
