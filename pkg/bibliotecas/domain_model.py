"""
Tipos de valor compartilhados por todos os módulos do perturb_forge.

Quadros RGB / profundidade, poses, trajetórias, sequências de sensores e os
descritores de perturbação (tipo, severidade, modo, semente). Todos os tipos são
imutáveis: os arrays numpy internos são marcados como somente leitura e toda
operação de perturbação devolve um novo valor.

Convenções:
    - Quaternions são armazenados como (qw, qx, qy, qz), normalizados.
    - Intensidades RGB são reais normalizados em [0, 1], layout (altura, largura, 3).
    - Profundidade em metros; medida ausente (VOID) é NaN em memória.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.spatial.transform import Rotation

from bibliotecas.erros import EmptyFrame, FrameShapeError, InvalidParameter, InvalidQuaternion

VOID = float("nan")
TOLERANCIA_QUATERNION = 1e-9
MAX_SEED = 2**64 - 1


def is_void(depths: np.ndarray) -> np.ndarray:
    return np.isnan(depths)


# 🏷️ Enumerações

class Level(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


LEVELS = (Level.LOW, Level.MEDIUM, Level.HIGH)


class Mode(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


class PerturbationKind(str, Enum):
    # ruído
    GAUSSIAN_NOISE = "gaussian_noise"
    SHOT_NOISE = "shot_noise"
    IMPULSE_NOISE = "impulse_noise"
    SPECKLE_NOISE = "speckle_noise"
    # desfoque
    DEFOCUS_BLUR = "defocus_blur"
    GLASS_BLUR = "glass_blur"
    MOTION_BLUR = "motion_blur"
    GAUSSIAN_BLUR = "gaussian_blur"
    # interferência ambiental
    SNOW = "snow"
    FROST = "frost"
    FOG = "fog"
    SPATTER = "spatter"
    # pós-processamento
    BRIGHTNESS = "brightness"
    CONTRAST = "contrast"
    JPEG_COMPRESSION = "jpeg_compression"
    PIXELATE = "pixelate"
    # profundidade
    DEPTH_GAUSSIAN_NOISE = "depth_gaussian_noise"
    EDGE_EROSION = "edge_erosion"
    RANDOM_MISSING = "random_missing"
    RANGE_CLIPPING = "range_clipping"
    # trajetória
    ROTATION_DEVIATION = "rotation_deviation"
    TRANSLATION_DEVIATION = "translation_deviation"
    FASTER_MOTION = "faster_motion"
    # multi-sensor / extrínseca
    MISALIGNMENT = "misalignment"
    EXTRINSIC_BASELINE = "extrinsic_baseline"


K = PerturbationKind
NOISE_KINDS = (K.GAUSSIAN_NOISE, K.SHOT_NOISE, K.IMPULSE_NOISE, K.SPECKLE_NOISE)
BLUR_KINDS = (K.DEFOCUS_BLUR, K.GLASS_BLUR, K.MOTION_BLUR, K.GAUSSIAN_BLUR)
ENVIRONMENT_KINDS = (K.SNOW, K.FROST, K.FOG, K.SPATTER)
POSTPROCESS_KINDS = (K.BRIGHTNESS, K.CONTRAST, K.JPEG_COMPRESSION, K.PIXELATE)
RGB_KINDS = NOISE_KINDS + BLUR_KINDS + ENVIRONMENT_KINDS + POSTPROCESS_KINDS
DEPTH_KINDS = (K.DEPTH_GAUSSIAN_NOISE, K.EDGE_EROSION, K.RANDOM_MISSING, K.RANGE_CLIPPING)
TRAJECTORY_KINDS = (K.ROTATION_DEVIATION, K.TRANSLATION_DEVIATION, K.FASTER_MOTION)
# tipos em que o modo dinâmico não tem definição
STATIC_ONLY_KINDS = TRAJECTORY_KINDS + (K.EXTRINSIC_BASELINE,)


# 🔄 Quaternions

def normalize_quaternion(q) -> np.ndarray:
    vetor = np.asarray(q, dtype=np.float64).reshape(4)
    norma = float(np.linalg.norm(vetor))
    if not np.isfinite(norma) or norma == 0.0:
        raise InvalidQuaternion(f"Quaternion {vetor.tolist()} tem norma nula ou não finita e não pode ser normalizado.")
    return vetor / norma


def canonicalize_quaternions(quats: np.ndarray) -> np.ndarray:
    quats = np.asarray(quats, dtype=np.float64)
    sinal = np.where(quats[..., :1] < 0.0, -1.0, 1.0)
    return quats * sinal


def quats_to_rotmats(quats: np.ndarray) -> np.ndarray:
    """Matrizes de rotação de quaternions (qw, qx, qy, qz); aceita qualquer forma (..., 4)."""
    q = np.asarray(quats, dtype=np.float64)
    if q.size == 0:
        return np.empty(q.shape[:-1] + (3, 3))
    # scipy usa a ordem escalar por último
    planos = q.reshape(-1, 4)[:, [1, 2, 3, 0]]
    return Rotation.from_quat(planos).as_matrix().reshape(q.shape[:-1] + (3, 3))


def compose_quaternions(a, b) -> np.ndarray:
    """Produto a·b (rotação de a seguida de b no referencial de a), renormalizado e com qw >= 0."""
    qa, qb = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    forma = np.broadcast_shapes(qa.shape, qb.shape)
    if int(np.prod(forma)) == 0:
        return np.empty(forma)
    ra = Rotation.from_quat(np.broadcast_to(qa, forma).reshape(-1, 4)[:, [1, 2, 3, 0]])
    rb = Rotation.from_quat(np.broadcast_to(qb, forma).reshape(-1, 4)[:, [1, 2, 3, 0]])
    produto = (ra * rb).as_quat()[:, [3, 0, 1, 2]]
    produto /= np.linalg.norm(produto, axis=1, keepdims=True)
    return canonicalize_quaternions(produto).reshape(forma)


def quat_to_rotmat(q) -> np.ndarray:
    vetor = np.asarray(q, dtype=np.float64).reshape(4)
    norma = float(np.linalg.norm(vetor))
    if abs(norma - 1.0) > TOLERANCIA_QUATERNION:
        raise InvalidQuaternion(f"Quaternion {vetor.tolist()} não é unitário (norma={norma!r}).")
    return quats_to_rotmats(vetor)


def _congelar(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


# 📍 Pose e trajetória

@dataclass(frozen=True, slots=True)
class Pose:
    timestamp: float
    translation: tuple[float, float, float]
    orientation: tuple[float, float, float, float]

    def __post_init__(self):
        if not np.isfinite(self.timestamp) or self.timestamp < 0:
            raise InvalidParameter(f"Timestamp da pose deve ser finito e não negativo, recebido {self.timestamp!r}.")
        if len(self.translation) != 3 or len(self.orientation) != 4:
            raise FrameShapeError("Pose exige translação com 3 componentes e orientação com 4 componentes.")
        norma = float(np.linalg.norm(self.orientation))
        if abs(norma - 1.0) > TOLERANCIA_QUATERNION:
            raise InvalidQuaternion(f"Orientação {tuple(self.orientation)} da pose em t={self.timestamp} não é unitária (norma={norma!r}).")

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_rotmat(self.orientation)


@dataclass(frozen=True, slots=True)
class Trajectory:
    """Sequência ordenada de poses, armazenada como arrays (N,), (N,3) e (N,4)."""
    timestamps: np.ndarray
    positions: np.ndarray
    orientations: np.ndarray

    def __post_init__(self):
        tempos = np.array(self.timestamps, dtype=np.float64).reshape(-1)
        posicoes = np.array(self.positions, dtype=np.float64).reshape(-1, 3) if np.size(self.positions) else np.empty((0, 3))
        quats = np.array(self.orientations, dtype=np.float64).reshape(-1, 4) if np.size(self.orientations) else np.empty((0, 4))
        if not (len(tempos) == len(posicoes) == len(quats)):
            raise FrameShapeError(f"Trajetória com tamanhos inconsistentes: {len(tempos)} timestamps, {len(posicoes)} posições, {len(quats)} orientações.")
        if len(tempos):
            if not np.all(np.isfinite(tempos)) or np.any(tempos < 0):
                raise InvalidParameter("Timestamps da trajetória devem ser finitos e não negativos.")
            if np.any(np.diff(tempos) <= 0):
                indice = int(np.argmax(np.diff(tempos) <= 0)) + 1
                raise InvalidParameter(f"Timestamps da trajetória devem ser estritamente crescentes (violação no índice {indice}).")
            if not np.all(np.isfinite(posicoes)):
                raise InvalidParameter("Posições da trajetória devem ser finitas.")
            normas = np.linalg.norm(quats, axis=1)
            ruins = np.abs(normas - 1.0) > TOLERANCIA_QUATERNION
            if np.any(ruins):
                indice = int(np.argmax(ruins))
                raise InvalidQuaternion(f"Orientação não unitária no índice {indice} (norma={normas[indice]!r}).")
        object.__setattr__(self, "timestamps", _congelar(tempos))
        object.__setattr__(self, "positions", _congelar(posicoes))
        object.__setattr__(self, "orientations", _congelar(quats))

    @classmethod
    def from_poses(cls, poses) -> "Trajectory":
        poses = list(poses)
        return cls(
            timestamps=np.array([p.timestamp for p in poses], dtype=np.float64),
            positions=np.array([p.translation for p in poses], dtype=np.float64).reshape(-1, 3),
            orientations=np.array([p.orientation for p in poses], dtype=np.float64).reshape(-1, 4),
        )

    @classmethod
    def empty(cls) -> "Trajectory":
        return cls(np.empty(0), np.empty((0, 3)), np.empty((0, 4)))

    @property
    def poses(self) -> list[Pose]:
        return [
            Pose(float(t), tuple(float(v) for v in p), tuple(float(v) for v in q))
            for t, p, q in zip(self.timestamps, self.positions, self.orientations)
        ]

    @property
    def frame_count(self) -> int:
        return len(self.timestamps)

    def __len__(self) -> int:
        return len(self.timestamps)

    def select(self, indices) -> "Trajectory":
        indices = np.asarray(indices, dtype=np.int64)
        return Trajectory(self.timestamps[indices], self.positions[indices], self.orientations[indices])

    def rotation_matrices(self) -> np.ndarray:
        return quats_to_rotmats(self.orientations)


# 🖼️ Quadros de sensores

@dataclass(frozen=True, slots=True)
class RgbFrame:
    timestamp: float
    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.array(self.pixels, dtype=np.float64)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise FrameShapeError(f"Quadro RGB deve ter forma (altura, largura, 3), recebido {pixels.shape}.")
        if pixels.size and (not np.all(np.isfinite(pixels)) or pixels.min() < 0.0 or pixels.max() > 1.0):
            raise InvalidParameter(f"Intensidades do quadro RGB em t={self.timestamp} devem estar em [0, 1].")
        object.__setattr__(self, "pixels", _congelar(pixels))

    @classmethod
    def from_flat(cls, timestamp: float, width: int, height: int, values) -> "RgbFrame":
        valores = np.asarray(values, dtype=np.float64).reshape(-1)
        if width * height * 3 != valores.size:
            raise FrameShapeError(f"Quadro RGB {width}x{height} exige {width * height * 3} valores, recebidos {valores.size}.")
        return cls(timestamp, valores.reshape(height, width, 3))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def require_not_empty(self) -> None:
        if self.pixels.size == 0:
            raise EmptyFrame(f"Quadro RGB em t={self.timestamp} está vazio ({self.width}x{self.height}).")

    def with_pixels(self, pixels: np.ndarray) -> "RgbFrame":
        return RgbFrame(self.timestamp, pixels)


@dataclass(frozen=True, slots=True)
class DepthFrame:
    timestamp: float
    depths: np.ndarray

    def __post_init__(self):
        depths = np.array(self.depths, dtype=np.float64)
        if depths.ndim != 2:
            raise FrameShapeError(f"Quadro de profundidade deve ter forma (altura, largura), recebido {depths.shape}.")
        validos = depths[~np.isnan(depths)]
        if validos.size and (not np.all(np.isfinite(validos)) or validos.min() <= 0.0):
            raise InvalidParameter(f"Profundidades não VOID em t={self.timestamp} devem ser positivas e finitas.")
        object.__setattr__(self, "depths", _congelar(depths))

    @classmethod
    def from_flat(cls, timestamp: float, width: int, height: int, values) -> "DepthFrame":
        valores = np.asarray(values, dtype=np.float64).reshape(-1)
        if width * height != valores.size:
            raise FrameShapeError(f"Quadro de profundidade {width}x{height} exige {width * height} valores, recebidos {valores.size}.")
        return cls(timestamp, valores.reshape(height, width))

    @property
    def height(self) -> int:
        return self.depths.shape[0]

    @property
    def width(self) -> int:
        return self.depths.shape[1]

    def void_mask(self) -> np.ndarray:
        return np.isnan(self.depths)

    def with_depths(self, depths: np.ndarray) -> "DepthFrame":
        return DepthFrame(self.timestamp, depths)


@dataclass(frozen=True, slots=True)
class SensorSequence:
    rgb_frames: tuple[RgbFrame, ...]
    depth_frames: tuple[DepthFrame, ...]
    trajectory: Trajectory
    extrinsics: np.ndarray | None = None
    name: str = ""
    dropped_frames: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "rgb_frames", tuple(self.rgb_frames))
        object.__setattr__(self, "depth_frames", tuple(self.depth_frames))
        n = len(self.trajectory)
        if len(self.rgb_frames) != n or len(self.depth_frames) != n:
            raise FrameShapeError(
                f"Sequência '{self.name}' não é consistente por índice: {len(self.rgb_frames)} RGB, "
                f"{len(self.depth_frames)} profundidade, {n} poses."
            )
        if self.extrinsics is not None:
            extr = np.array(self.extrinsics, dtype=np.float64).reshape(-1, 3)
            if len(extr) != n:
                raise FrameShapeError(f"Sequência '{self.name}' tem {len(extr)} extrínsecas para {n} quadros.")
            object.__setattr__(self, "extrinsics", _congelar(extr))

    def __len__(self) -> int:
        return len(self.trajectory)

    def is_aligned(self, tolerance: float = 0.02) -> bool:
        for rgb, depth, t in zip(self.rgb_frames, self.depth_frames, self.trajectory.timestamps):
            if abs(rgb.timestamp - t) > tolerance or abs(depth.timestamp - t) > tolerance:
                return False
        return True

    def require_aligned(self, tolerance: float = 0.02) -> None:
        if not self.is_aligned(tolerance):
            raise InvalidParameter(f"Sequência '{self.name}' não está alinhada por timestamp entre RGB, profundidade e trajetória.")

    def select(self, indices) -> "SensorSequence":
        indices = [int(i) for i in indices]
        return SensorSequence(
            rgb_frames=tuple(self.rgb_frames[i] for i in indices),
            depth_frames=tuple(self.depth_frames[i] for i in indices),
            trajectory=self.trajectory.select(indices),
            extrinsics=None if self.extrinsics is None else self.extrinsics[indices],
            name=self.name,
        )

    def replace(self, **mudancas) -> "SensorSequence":
        campos = {
            "rgb_frames": self.rgb_frames,
            "depth_frames": self.depth_frames,
            "trajectory": self.trajectory,
            "extrinsics": self.extrinsics,
            "name": self.name,
        }
        campos.update(mudancas)
        return SensorSequence(**campos)


# 🎚️ Descritores de perturbação

class Severity(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    level: Level
    params: dict[str, float | int | list[float]] = Field(default_factory=dict)


class PerturbationSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: PerturbationKind
    severity: Severity
    mode: Mode = Mode.STATIC
    seed: int = Field(default=0, ge=0, le=MAX_SEED)

    @model_validator(mode="after")
    def _modo_permitido(self):
        if self.mode == Mode.DYNAMIC and self.kind in STATIC_ONLY_KINDS:
            raise ValueError(f"O tipo '{self.kind.value}' não aceita modo dinâmico.")
        return self

    @classmethod
    def parse_inline(cls, texto: str) -> "PerturbationSpec":
        """Interpreta 'tipo:nivel:modo:semente', por exemplo 'gaussian_noise:medium:static:42'."""
        partes = texto.strip().split(":")
        if len(partes) != 4:
            raise InvalidParameter(f"Especificação inline '{texto}' deve ter o formato tipo:nivel:modo:semente.")
        tipo, nivel, modo, semente = partes
        try:
            return cls(kind=PerturbationKind(tipo), severity=Severity(level=Level(nivel)), mode=Mode(modo), seed=int(semente))
        except ValueError as e:
            raise InvalidParameter(f"Especificação inline '{texto}' inválida: {e}")

    def inline(self) -> str:
        return f"{self.kind.value}:{self.severity.level.value}:{self.mode.value}:{self.seed}"
