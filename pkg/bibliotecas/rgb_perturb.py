"""
Corrupções de imagem RGB em quatro grupos: ruído, desfoque, interferência
ambiental e pós-processamento (16 tipos no total).

Toda operação recebe o quadro, o tipo, a severidade (Severity ou parâmetros já
resolvidos), o fluxo aleatório e o índice do quadro, e devolve um novo RgbFrame
com os canais limitados a [0, 1]. O limite é sempre o último passo.
"""
import math
from dataclasses import dataclass

import cv2
import numpy as np

from bibliotecas.domain_model import (
    BLUR_KINDS,
    ENVIRONMENT_KINDS,
    NOISE_KINDS,
    POSTPROCESS_KINDS,
    RGB_KINDS,
    Mode,
    PerturbationKind,
    PerturbationSpec,
    RgbFrame,
)
from bibliotecas.erros import InvalidParameter, KernelTooLarge, KindMismatch
from bibliotecas.registro_logs import obter_logger
from bibliotecas.rng_stream import RngStream
from bibliotecas.severity import SeverityTable, load_severity_table, resolve_params

logger = obter_logger(__name__)

K = PerturbationKind
TOLERANCIA_KERNEL = 1e-9


@dataclass(frozen=True, slots=True)
class BlurKernel:
    weights: np.ndarray

    def __post_init__(self):
        pesos = np.array(self.weights, dtype=np.float64)
        if pesos.ndim != 2 or pesos.shape[0] != pesos.shape[1] or pesos.shape[0] % 2 == 0:
            raise InvalidParameter(f"Kernel de desfoque deve ser quadrado com lado ímpar, recebido {pesos.shape}.")
        if np.any(pesos < 0):
            raise InvalidParameter("Kernel de desfoque não pode ter pesos negativos.")
        if abs(pesos.sum() - 1.0) > TOLERANCIA_KERNEL:
            raise InvalidParameter(f"Pesos do kernel somam {pesos.sum()!r}, esperado 1.0.")
        pesos.setflags(write=False)
        object.__setattr__(self, "weights", pesos)

    @property
    def size(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True, slots=True)
class WeatherLayer:
    pixels: np.ndarray
    alpha: float
    mask: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidParameter(f"alpha da camada climática deve estar em [0, 1], recebido {self.alpha}.")
        if self.mask is not None:
            mascara = np.asarray(self.mask)
            if not np.all((mascara == 0) | (mascara == 1)):
                raise InvalidParameter("Máscara da camada climática deve conter apenas 0 e 1.")
            object.__setattr__(self, "mask", mascara.astype(bool))


def _clamp(pixels: np.ndarray) -> np.ndarray:
    return np.clip(pixels, 0.0, 1.0)


# 🌫️ Ruído

def apply_noise(frame: RgbFrame, kind: PerturbationKind, severity, rng: RngStream, frame_index: int = 0) -> RgbFrame:
    frame.require_not_empty()
    params = resolve_params(kind, severity)
    imagem = frame.pixels
    gerador = rng.generator(frame_index, kind)

    if kind == K.GAUSSIAN_NOISE:
        if params.sigma == 0:
            return frame
        saida = imagem + gerador.normal(0.0, params.sigma, imagem.shape)
    elif kind == K.SHOT_NOISE:
        saida = gerador.poisson(imagem * params.lam) / params.lam
    elif kind == K.IMPULSE_NOISE:
        if params.p == 0:
            return frame
        u = gerador.random(imagem.shape[:2])
        saida = imagem.copy()
        saida[u < params.p / 2.0] = 0.0
        saida[(u >= params.p / 2.0) & (u < params.p)] = 1.0
    elif kind == K.SPECKLE_NOISE:
        if params.rho == 0:
            return frame
        saida = imagem * (1.0 + params.rho * gerador.normal(0.0, 1.0, imagem.shape))
    else:
        raise KindMismatch(f"'{kind.value}' não é um tipo de ruído RGB.")
    return frame.with_pixels(_clamp(saida))


# 🔍 Desfoque

def disc_kernel(radius: int) -> BlurKernel:
    r = int(radius)
    eixo = np.arange(-r, r + 1)
    x, y = np.meshgrid(eixo, eixo)
    disco = (x**2 + y**2 <= r**2).astype(np.float64)
    return BlurKernel(disco / disco.sum())


def gaussian_kernel(sigma: float) -> BlurKernel:
    if sigma <= 1e-12:
        return BlurKernel(np.ones((1, 1)))
    meia_largura = int(math.ceil(3.0 * sigma))
    eixo = np.arange(-meia_largura, meia_largura + 1, dtype=np.float64)
    x, y = np.meshgrid(eixo, eixo)
    pesos = np.exp(-(x**2 + y**2) / (2.0 * sigma**2))
    return BlurKernel(pesos / pesos.sum())


def motion_kernel(length: int, angle_deg: float) -> BlurKernel:
    lado = int(length) if int(length) % 2 == 1 else int(length) + 1
    if lado == 1:
        return BlurKernel(np.ones((1, 1)))
    centro = lado // 2
    theta = math.radians(angle_deg)
    dx, dy = centro * math.cos(theta), -centro * math.sin(theta)
    linha = np.zeros((lado, lado), dtype=np.float32)
    inicio = (int(round(centro - dx)), int(round(centro - dy)))
    fim = (int(round(centro + dx)), int(round(centro + dy)))
    cv2.line(linha, inicio, fim, 1.0, thickness=1, lineType=cv2.LINE_8)
    linha = linha.astype(np.float64)
    return BlurKernel(linha / linha.sum())


def build_kernel(kind: PerturbationKind, severity, rng: RngStream, frame_index: int = 0) -> BlurKernel:
    params = resolve_params(kind, severity)
    if kind == K.DEFOCUS_BLUR:
        return disc_kernel(params.radius)
    if kind in (K.GAUSSIAN_BLUR, K.GLASS_BLUR):
        # glass blur só usa o kernel na passada gaussiana final
        return gaussian_kernel(params.sigma)
    if kind == K.MOTION_BLUR:
        angulo = float(rng.uniform(frame_index, f"{kind.value}:angle")) * 180.0
        return motion_kernel(params.length, angulo)
    raise KindMismatch(f"'{kind.value}' não possui kernel de desfoque.")


def convolve(pixels: np.ndarray, kernel: BlurKernel) -> np.ndarray:
    if kernel.size == 1:
        return pixels.copy()
    altura, largura = pixels.shape[:2]
    if kernel.size > min(altura, largura):
        raise KernelTooLarge(f"Kernel {kernel.size}x{kernel.size} maior que a imagem {largura}x{altura}.")
    # filter2D calcula correlação; o kernel invertido dá a convolução
    return cv2.filter2D(np.array(pixels), -1, np.ascontiguousarray(kernel.weights[::-1, ::-1]), borderType=cv2.BORDER_REPLICATE)


def glass_swap(pixels: np.ndarray, delta: int, iterations: int, gerador: np.random.Generator) -> np.ndarray:
    """
    Troca cada pixel com um vizinho em deslocamento uniforme de [-delta, delta]², repetido `iterations` vezes.

    As trocas dependem umas das outras (ordem raster), então o laço é sequencial em Python:
    custo de `iterations × altura × largura` trocas por quadro, o que faz do glass blur o tipo RGB
    mais lento (na ordem de segundos por quadro em 1200×680). Os sorteios de deslocamento e a
    cópia final dos pixels são vetorizados; só a composição da permutação fica no laço.
    """
    saida = pixels.copy()
    if delta == 0 or iterations == 0:
        return saida
    altura, largura = saida.shape[:2]
    deslocamentos = gerador.integers(-delta, delta + 1, size=(iterations, altura, largura, 2))
    ys, xs = np.meshgrid(np.arange(altura), np.arange(largura), indexing="ij")
    alvos_y = np.clip(ys[None] + deslocamentos[..., 0], 0, altura - 1)
    alvos_x = np.clip(xs[None] + deslocamentos[..., 1], 0, largura - 1)
    alvos = (alvos_y * largura + alvos_x).reshape(iterations, -1)
    # as trocas são sequenciais em ordem raster; trocar índices de uma permutação evita copiar pixels
    permutacao = list(range(altura * largura))
    for it in range(iterations):
        for origem, destino in enumerate(alvos[it].tolist()):
            permutacao[origem], permutacao[destino] = permutacao[destino], permutacao[origem]
    return saida.reshape(altura * largura, -1)[permutacao].reshape(saida.shape)


def apply_blur(frame: RgbFrame, kind: PerturbationKind, severity, rng: RngStream, frame_index: int = 0) -> RgbFrame:
    frame.require_not_empty()
    params = resolve_params(kind, severity)
    if kind == K.GLASS_BLUR:
        trocado = glass_swap(frame.pixels, params.delta, params.iterations, rng.generator(frame_index, kind))
        saida = convolve(trocado, gaussian_kernel(params.sigma))
    elif kind in BLUR_KINDS:
        kernel = build_kernel(kind, params, rng, frame_index)
        if kernel.size == 1:
            return frame
        saida = convolve(frame.pixels, kernel)
    else:
        raise KindMismatch(f"'{kind.value}' não é um tipo de desfoque.")
    return frame.with_pixels(_clamp(saida))


# ❄️ Interferência ambiental

def blend_weather(pixels: np.ndarray, camada: WeatherLayer) -> np.ndarray:
    if camada.alpha == 0 or (camada.mask is not None and not camada.mask.any()):
        return pixels
    misturado = (1.0 - camada.alpha) * pixels + camada.alpha * camada.pixels
    if camada.mask is None:
        return misturado
    return np.where(camada.mask[..., None], misturado, pixels)


def _campo_baixa_frequencia(gerador: np.random.Generator, altura: int, largura: int, celula: int) -> np.ndarray:
    grosso = gerador.random((altura // celula + 2, largura // celula + 2)).astype(np.float32)
    campo = cv2.resize(grosso, (largura, altura), interpolation=cv2.INTER_LINEAR)
    return np.clip(campo.astype(np.float64), 0.0, 1.0)


def weather_layer(kind: PerturbationKind, severity, rng: RngStream, shape: tuple, frame_index: int = 0) -> WeatherLayer:
    params = resolve_params(kind, severity)
    altura, largura = shape[:2]
    gerador = rng.generator(frame_index, kind)

    if kind == K.FOG:
        return WeatherLayer(np.full((altura, largura, 3), params.gray), params.alpha)
    if kind == K.FROST:
        campo = _campo_baixa_frequencia(gerador, altura, largura, celula=16)
        return WeatherLayer(np.repeat((0.8 + 0.2 * campo)[..., None], 3, axis=2), params.alpha)
    if kind == K.SNOW:
        sementes = (gerador.random((altura, largura)) > params.threshold).astype(np.uint8)
        if params.dilation > 0 and sementes.any():
            disco = (disc_kernel(params.dilation).weights > 0).astype(np.uint8)
            sementes = cv2.dilate(sementes, disco)
        return WeatherLayer(np.ones((altura, largura, 3)), params.alpha, sementes)
    if kind == K.SPATTER:
        campo = _campo_baixa_frequencia(gerador, altura, largura, celula=8)
        if params.coverage <= 0:
            mascara = np.zeros((altura, largura), dtype=np.uint8)
        else:
            mascara = (campo <= np.quantile(campo, params.coverage)).astype(np.uint8)
        cor = np.broadcast_to(np.asarray(params.color, dtype=np.float64), (altura, largura, 3))
        return WeatherLayer(np.array(cor), params.alpha, mascara)
    raise KindMismatch(f"'{kind.value}' não é um tipo de interferência ambiental.")


def apply_environment(frame: RgbFrame, kind: PerturbationKind, severity, rng: RngStream, frame_index: int = 0) -> RgbFrame:
    frame.require_not_empty()
    if kind not in ENVIRONMENT_KINDS:
        raise KindMismatch(f"'{kind.value}' não é um tipo de interferência ambiental.")
    camada = weather_layer(kind, severity, rng, frame.pixels.shape, frame_index)
    saida = blend_weather(frame.pixels, camada)
    if saida is frame.pixels:
        return frame
    return frame.with_pixels(_clamp(saida))


# 🎞️ Pós-processamento

def to_uint8(pixels: np.ndarray) -> np.ndarray:
    # arredondamento com metade para longe de zero (valores já são não negativos)
    return np.floor(np.clip(pixels, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def jpeg_round_trip(pixels: np.ndarray, quality: int) -> np.ndarray:
    bgr = np.ascontiguousarray(to_uint8(pixels)[..., ::-1])
    ok, buffer = cv2.imencode(".jpg", bgr, [cv2.IMWRITE_JPEG_QUALITY, int(quality)])
    if not ok:
        raise InvalidParameter(f"Falha ao codificar JPEG com qualidade {quality}.")
    decodificado = cv2.imdecode(buffer, cv2.IMREAD_COLOR)
    return decodificado[..., ::-1].astype(np.float64) / 255.0


def pixelate(pixels: np.ndarray, block: int) -> np.ndarray:
    altura, largura = pixels.shape[:2]
    inicios_y = np.arange(0, altura, block)
    inicios_x = np.arange(0, largura, block)
    tam_y = np.diff(np.append(inicios_y, altura))
    tam_x = np.diff(np.append(inicios_x, largura))
    somas = np.add.reduceat(np.add.reduceat(pixels, inicios_y, axis=0), inicios_x, axis=1)
    medias = somas / np.outer(tam_y, tam_x)[..., None]
    return np.repeat(np.repeat(medias, tam_y, axis=0), tam_x, axis=1)


def apply_postprocess(frame: RgbFrame, kind: PerturbationKind, severity, rng: RngStream, frame_index: int = 0) -> RgbFrame:
    frame.require_not_empty()
    params = resolve_params(kind, severity)
    imagem = frame.pixels

    if kind == K.BRIGHTNESS:
        if params.b == 0:
            return frame
        saida = imagem + params.b
    elif kind == K.CONTRAST:
        if params.alpha == 1:
            return frame
        media = imagem.mean()
        saida = params.alpha * (imagem - media) + media
    elif kind == K.JPEG_COMPRESSION:
        saida = jpeg_round_trip(imagem, params.quality)
    elif kind == K.PIXELATE:
        if params.block == 1:
            return frame
        saida = pixelate(imagem, params.block)
    else:
        raise KindMismatch(f"'{kind.value}' não é um tipo de pós-processamento.")
    return frame.with_pixels(_clamp(saida))


# 🎯 Despacho

def apply_rgb(
    frame: RgbFrame,
    spec: PerturbationSpec,
    frame_index: int,
    rng: RngStream | None = None,
    table: SeverityTable | None = None,
) -> RgbFrame:
    if spec.kind not in RGB_KINDS:
        raise KindMismatch(f"Tipo '{spec.kind.value}' não é uma corrupção RGB.")
    rng = rng or RngStream(spec.seed)
    table = table or load_severity_table()
    nivel = rng.level(frame_index, spec.kind) if spec.mode == Mode.DYNAMIC else spec.severity.level
    params = table.params_for(spec, nivel)

    if spec.kind in NOISE_KINDS:
        operacao = apply_noise
    elif spec.kind in BLUR_KINDS:
        operacao = apply_blur
    elif spec.kind in ENVIRONMENT_KINDS:
        operacao = apply_environment
    elif spec.kind in POSTPROCESS_KINDS:
        operacao = apply_postprocess
    logger.debug(f"🎨 Aplicando '{spec.kind.value}' nível '{nivel.value}' no quadro {frame_index}.",
                 extra={'log_record_json': {'kind': spec.kind.value, 'level': nivel.value, 'frame_index': frame_index}})
    return operacao(frame, spec.kind, params, rng, frame_index)
