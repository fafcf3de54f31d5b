"""
Leitura e escrita de sequências no layout estilo TUM RGB-D, além dos documentos
JSON de plano, manifesto e tabela de severidade.

Layout de uma sequência:
    rgb/<indice>_<timestamp>.png     imagens 8 bits, 3 canais
    depth/<indice>_<timestamp>.png   imagens 16 bits, metros × escala (0 = VOID)
    rgb.txt / depth.txt              "timestamp caminho" por linha
    groundtruth.txt                  "timestamp tx ty tz qx qy qz qw" por linha
    extrinsics.txt (opcional)        "timestamp tx ty tz" por linha (par estéreo)
"""
import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import cv2
import numpy as np
from pydantic import BaseModel, ValidationError

from bibliotecas.domain_model import DepthFrame, RgbFrame, SensorSequence, Trajectory, canonicalize_quaternions
from bibliotecas.erros import DecodeError, IoError, LayoutError, SchemaError
from bibliotecas.metrics import TOLERANCIA_ASSOCIACAO, associate_timestamps
from bibliotecas.registro_logs import obter_logger
from bibliotecas.rgb_perturb import to_uint8
from bibliotecas.sequence_stream import SequenceStream
from bibliotecas.severity import SeverityTable, table_from_document

logger = obter_logger(__name__)

ESCALA_PROFUNDIDADE_PADRAO = 5000.0
MAX_BRUTO_16_BITS = 65535
ARQUIVOS_INDICE = ("rgb.txt", "depth.txt", "groundtruth.txt")


def frame_file_name(index: int, timestamp: float) -> str:
    return f"{index:06d}_{timestamp:.6f}.png"


# 📄 Arquivos de texto

def _linhas_dados(caminho: Path) -> list[tuple[int, list[str]]]:
    try:
        texto = caminho.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise LayoutError(f"Arquivo de índice ausente: {caminho}", str(caminho))
    except OSError as e:
        raise IoError(f"Falha ao ler {caminho}: {e}", str(caminho))
    linhas = []
    for numero, linha in enumerate(texto.splitlines(), start=1):
        linha = linha.strip()
        if linha and not linha.startswith("#"):
            linhas.append((numero, linha.replace(",", " ").split()))
    return linhas


def read_index(caminho: Path) -> list[tuple[float, str]]:
    entradas = []
    for numero, campos in _linhas_dados(Path(caminho)):
        if len(campos) < 2:
            raise DecodeError(f"{caminho}:{numero}: esperado 'timestamp caminho', recebido {' '.join(campos)!r}.", str(caminho))
        try:
            entradas.append((float(campos[0]), campos[1]))
        except ValueError:
            raise DecodeError(f"{caminho}:{numero}: timestamp inválido {campos[0]!r}.", str(caminho))
    tempos = [t for t, _ in entradas]
    if any(b <= a for a, b in zip(tempos, tempos[1:])):
        raise LayoutError(f"Arquivo de índice {caminho} não está ordenado por timestamp.", str(caminho))
    return entradas


def _ler_tabela_numerica(caminho: Path, colunas: int) -> np.ndarray:
    linhas = []
    for numero, campos in _linhas_dados(Path(caminho)):
        if len(campos) != colunas:
            raise DecodeError(f"{caminho}:{numero}: esperadas {colunas} colunas, recebidas {len(campos)}.", str(caminho))
        try:
            linhas.append([float(c) for c in campos])
        except ValueError:
            raise DecodeError(f"{caminho}:{numero}: valor numérico inválido.", str(caminho))
    return np.array(linhas, dtype=np.float64).reshape(-1, colunas)


def trajectory_from_rows(dados, origem: str) -> Trajectory:
    """Converte linhas 'timestamp tx ty tz qx qy qz qw' em Trajectory; quaternions renormalizados e guardados como (qw, qx, qy, qz)."""
    dados = np.asarray(dados, dtype=np.float64).reshape(-1, 8)
    if len(dados) == 0:
        return Trajectory.empty()
    quats = dados[:, [7, 4, 5, 6]]
    normas = np.linalg.norm(quats, axis=1, keepdims=True)
    if np.any(normas == 0):
        raise DecodeError(f"{origem}: quaternion nulo na linha de dados {int(np.argmax(normas[:, 0] == 0)) + 1}.", origem)
    return Trajectory(dados[:, 0], dados[:, 1:4], quats / normas)


def read_trajectory(caminho) -> Trajectory:
    return trajectory_from_rows(_ler_tabela_numerica(Path(caminho), 8), str(caminho))


def _escrever_texto(caminho: Path, texto: str) -> None:
    try:
        caminho.parent.mkdir(parents=True, exist_ok=True)
        caminho.write_text(texto, encoding="utf-8")
    except OSError as e:
        raise IoError(f"Falha ao escrever {caminho}: {e}", str(caminho))


def write_trajectory(traj: Trajectory, caminho) -> None:
    quats = canonicalize_quaternions(traj.orientations) if len(traj) else traj.orientations
    linhas = ["# timestamp tx ty tz qx qy qz qw"]
    for t, p, q in zip(traj.timestamps, traj.positions, quats):
        linhas.append(f"{t:.6f} {p[0]:.6f} {p[1]:.6f} {p[2]:.6f} {q[1]:.6f} {q[2]:.6f} {q[3]:.6f} {q[0]:.6f}")
    _escrever_texto(Path(caminho), "\n".join(linhas) + "\n")


# 🖼️ Imagens

def _ler_rgb(caminho: Path, timestamp: float) -> RgbFrame:
    if not caminho.is_file():
        raise LayoutError(f"Imagem listada no índice não existe: {caminho}", str(caminho))
    bgr = cv2.imread(str(caminho), cv2.IMREAD_COLOR)
    if bgr is None:
        raise DecodeError(f"Não foi possível decodificar a imagem RGB {caminho.name}.", str(caminho))
    return RgbFrame(timestamp, bgr[..., ::-1].astype(np.float64) / 255.0)


def _ler_profundidade(caminho: Path, timestamp: float, escala: float) -> DepthFrame:
    if not caminho.is_file():
        raise LayoutError(f"Imagem listada no índice não existe: {caminho}", str(caminho))
    bruto = cv2.imread(str(caminho), cv2.IMREAD_UNCHANGED)
    if bruto is None or bruto.ndim != 2:
        raise DecodeError(f"Não foi possível decodificar a imagem de profundidade {caminho.name}.", str(caminho))
    metros = bruto.astype(np.float64) / escala
    metros[bruto == 0] = np.nan
    return DepthFrame(timestamp, metros)


def encode_depth(depths: np.ndarray, escala: float) -> tuple[np.ndarray, int]:
    """Converte metros para unidades de 16 bits; valores fora da faixa viram VOID (0) e são contados."""
    bruto = np.floor(np.nan_to_num(depths, nan=0.0) * escala + 0.5)
    estouro = bruto > MAX_BRUTO_16_BITS
    bruto[estouro] = 0
    return bruto.astype(np.uint16), int(np.count_nonzero(estouro))


def _gravar_png(caminho: Path, imagem: np.ndarray) -> None:
    try:
        ok = cv2.imwrite(str(caminho), imagem)
    except cv2.error as e:
        raise IoError(f"Falha ao escrever {caminho}: {e}", str(caminho))
    if not ok:
        raise IoError(f"Falha ao escrever {caminho}.", str(caminho))


# 📦 Sequências

def open_sequence(raiz, depth_scale: float = ESCALA_PROFUNDIDADE_PADRAO,
                  tolerance: float = TOLERANCIA_ASSOCIACAO) -> SequenceStream:
    """Lê índices, trajetória e extrínsecas; as imagens são decodificadas só quando cada quadro é pedido."""
    raiz = Path(raiz)
    if not raiz.is_dir():
        raise LayoutError(f"Diretório de sequência não encontrado: {raiz}", str(raiz))
    if depth_scale <= 0:
        raise LayoutError(f"Escala de profundidade deve ser positiva, recebido {depth_scale}.", str(raiz))
    indice_rgb = read_index(raiz / "rgb.txt")
    indice_depth = read_index(raiz / "depth.txt")
    if not (raiz / "groundtruth.txt").is_file():
        raise LayoutError(f"Arquivo de índice ausente: {raiz / 'groundtruth.txt'}", str(raiz / "groundtruth.txt"))
    gt = read_trajectory(raiz / "groundtruth.txt")

    t_rgb = np.array([t for t, _ in indice_rgb])
    pares_depth = dict(associate_timestamps(t_rgb, [t for t, _ in indice_depth], tolerance))
    pares_gt = dict(associate_timestamps(t_rgb, gt.timestamps, tolerance))
    mantidos = [i for i in range(len(indice_rgb)) if i in pares_depth and i in pares_gt]
    descartados = (len(indice_rgb) - len(mantidos)) + (len(indice_depth) - len(mantidos)) + (len(gt) - len(mantidos))

    rgb = [indice_rgb[i] for i in mantidos]
    depth = [indice_depth[pares_depth[i]] for i in mantidos]
    for _, nome in rgb + depth:
        if not (raiz / nome).is_file():
            raise LayoutError(f"Imagem listada no índice não existe: {raiz / nome}", str(raiz / nome))

    extrinsecas = None
    if (raiz / "extrinsics.txt").is_file():
        dados = _ler_tabela_numerica(raiz / "extrinsics.txt", 4)
        pares_ext = dict(associate_timestamps(t_rgb, dados[:, 0], tolerance))
        faltando = [i for i in mantidos if i not in pares_ext]
        if faltando:
            raise LayoutError(f"extrinsics.txt sem entrada para o quadro RGB em t={t_rgb[faltando[0]]:.6f}.", str(raiz / "extrinsics.txt"))
        extrinsecas = dados[[pares_ext[i] for i in mantidos], 1:4]

    if descartados:
        logger.warning(f"⚠️ {descartados} quadros sem par dentro de {tolerance} s foram descartados ao carregar {raiz}.",
                       extra={'log_record_json': {'raiz': str(raiz), 'descartados': descartados, 'mantidos': len(mantidos)}})
    return SequenceStream(
        rgb_timestamps=np.array([t for t, _ in rgb]),
        depth_timestamps=np.array([t for t, _ in depth]),
        rgb_at=lambda i: _ler_rgb(raiz / rgb[i][1], rgb[i][0]),
        depth_at=lambda i: _ler_profundidade(raiz / depth[i][1], depth[i][0], depth_scale),
        trajectory=gt.select([pares_gt[i] for i in mantidos]),
        extrinsics=extrinsecas,
        name=raiz.name,
        dropped_frames=descartados,
    )


def load_sequence(raiz, depth_scale: float = ESCALA_PROFUNDIDADE_PADRAO,
                  tolerance: float = TOLERANCIA_ASSOCIACAO, workers: int | None = None) -> SensorSequence:
    return open_sequence(raiz, depth_scale, tolerance).materialize(workers)


def write_stream(fluxo: SequenceStream, raiz, depth_scale: float = ESCALA_PROFUNDIDADE_PADRAO,
                 workers: int | None = None) -> int:
    """
    Escreve o fluxo quadro a quadro e devolve quantos pixels de profundidade
    estouraram 16 bits (gravados como VOID).

    Cada worker lê, perturba e grava um quadro por vez, então ficam em memória
    no máximo `workers` pares RGB-D.
    """
    raiz = Path(raiz)
    if depth_scale <= 0:
        raise LayoutError(f"Escala de profundidade deve ser positiva, recebido {depth_scale}.", str(raiz))
    try:
        (raiz / "rgb").mkdir(parents=True, exist_ok=True)
        (raiz / "depth").mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoError(f"Falha ao criar o layout em {raiz}: {e}", str(raiz))
    t_rgb, t_depth = fluxo.rgb_timestamps, fluxo.depth_timestamps

    def gravar(indice: int) -> int:
        rgb = fluxo.rgb_at(indice)
        _gravar_png(raiz / "rgb" / frame_file_name(indice, t_rgb[indice]), np.ascontiguousarray(to_uint8(rgb.pixels)[..., ::-1]))
        bruto, estouro = encode_depth(fluxo.depth_at(indice).depths, depth_scale)
        _gravar_png(raiz / "depth" / frame_file_name(indice, t_depth[indice]), bruto)
        return estouro

    with ThreadPoolExecutor(max_workers=workers) as executor:
        estouros = sum(executor.map(gravar, range(len(fluxo))))

    linhas_rgb = ["# color images", "# timestamp filename"]
    linhas_rgb += [f"{t:.6f} rgb/{frame_file_name(i, t)}" for i, t in enumerate(t_rgb)]
    linhas_depth = ["# depth maps", "# timestamp filename"]
    linhas_depth += [f"{t:.6f} depth/{frame_file_name(i, t)}" for i, t in enumerate(t_depth)]
    _escrever_texto(raiz / "rgb.txt", "\n".join(linhas_rgb) + "\n")
    _escrever_texto(raiz / "depth.txt", "\n".join(linhas_depth) + "\n")
    write_trajectory(fluxo.trajectory, raiz / "groundtruth.txt")
    if fluxo.extrinsics is not None:
        linhas_ext = ["# timestamp tx ty tz"]
        linhas_ext += [f"{t:.6f} {e[0]:.6f} {e[1]:.6f} {e[2]:.6f}" for t, e in zip(fluxo.trajectory.timestamps, fluxo.extrinsics)]
        _escrever_texto(raiz / "extrinsics.txt", "\n".join(linhas_ext) + "\n")

    if estouros:
        logger.warning(f"⚠️ {estouros} pixels de profundidade acima da faixa de 16 bits gravados como VOID em {raiz}.",
                       extra={'log_record_json': {'raiz': str(raiz), 'estouros': estouros, 'escala': depth_scale}})
    return estouros


def write_sequence(seq: SensorSequence, raiz, depth_scale: float = ESCALA_PROFUNDIDADE_PADRAO,
                   workers: int | None = None) -> int:
    return write_stream(SequenceStream.from_sequence(seq), raiz, depth_scale, workers)


# 🔐 Digests

def sha256_file(caminho) -> str:
    digest = hashlib.sha256()
    try:
        with open(caminho, "rb") as arquivo:
            for bloco in iter(lambda: arquivo.read(1 << 20), b""):
                digest.update(bloco)
    except OSError as e:
        raise IoError(f"Falha ao ler {caminho} para o digest: {e}", str(caminho))
    return digest.hexdigest()


def digest_tree(raiz) -> dict[str, str]:
    """Digest SHA-256 de cada arquivo sob `raiz`, indexado pelo caminho relativo com '/'."""
    raiz = Path(raiz)
    digests = {}
    for pasta, _, arquivos in os.walk(raiz):
        for nome in arquivos:
            caminho = Path(pasta) / nome
            digests[caminho.relative_to(raiz).as_posix()] = sha256_file(caminho)
    return dict(sorted(digests.items()))


# 🗂️ Documentos JSON

def _json_deterministico(documento) -> str:
    return json.dumps(documento, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _ler_json(caminho: Path):
    try:
        return json.loads(Path(caminho).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise IoError(f"Documento não encontrado: {caminho}", str(caminho))
    except json.JSONDecodeError as e:
        raise SchemaError(f"Documento {caminho} truncado ou inválido (linha {e.lineno}, coluna {e.colno}): {e.msg}.")


def write_document(modelo: BaseModel, caminho) -> None:
    _escrever_texto(Path(caminho), _json_deterministico(modelo.model_dump(mode="json")))


def read_document(caminho, classe: type[BaseModel]):
    dados = _ler_json(Path(caminho))
    if not isinstance(dados, dict) or "schema_version" not in dados:
        raise SchemaError(f"Documento {caminho} sem o campo obrigatório 'schema_version'.")
    try:
        return classe.model_validate(dados)
    except ValidationError as e:
        problemas = "; ".join(f"{'.'.join(str(p) for p in erro['loc']) or '(raiz)'}: {erro['msg']}" for erro in e.errors())
        raise SchemaError(f"Documento {caminho} não segue o esquema de {classe.__name__}: {problemas}.")


def write_plan(plano, caminho) -> None:
    write_document(plano, caminho)


def read_plan(caminho):
    from bibliotecas.benchmark_composer import BenchmarkPlan
    return read_document(caminho, BenchmarkPlan)


def write_manifest(manifesto, caminho) -> None:
    write_document(manifesto, caminho)


def read_manifest(caminho):
    from bibliotecas.benchmark_composer import Manifest
    return read_document(caminho, Manifest)


def write_severity_table(tabela: SeverityTable, caminho) -> None:
    _escrever_texto(Path(caminho), _json_deterministico(tabela.to_document()))


def read_severity_table(caminho) -> SeverityTable:
    return table_from_document(_ler_json(Path(caminho)))
