import numpy as np
import pytest
from pydantic import ValidationError

from bibliotecas.domain_model import (
    DEPTH_KINDS,
    RGB_KINDS,
    STATIC_ONLY_KINDS,
    DepthFrame,
    Level,
    Mode,
    PerturbationKind,
    PerturbationSpec,
    Pose,
    RgbFrame,
    SensorSequence,
    Severity,
    Trajectory,
    canonicalize_quaternions,
    compose_quaternions,
    is_void,
    normalize_quaternion,
    quat_to_rotmat,
    quats_to_rotmats,
)
from bibliotecas.erros import EmptyFrame, FrameShapeError, InvalidParameter, InvalidQuaternion
from conftest import sequencia_sintetica, trajetoria_linear


def test_contagem_de_tipos():
    assert len(PerturbationKind) == 25
    assert len(RGB_KINDS) == 16
    assert len(DEPTH_KINDS) == 4


@pytest.mark.parametrize("quat, esperado", [
    ([2.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]),
    ([0.0, 0.0, 3.0, 4.0], [0.0, 0.0, 0.6, 0.8]),
], ids=["identidade_escalada", "rotacao_yz"])
def test_normalizar_quaternion(quat, esperado):
    np.testing.assert_allclose(normalize_quaternion(quat), esperado, atol=1e-15)


@pytest.mark.parametrize("quat", [[0, 0, 0, 0], [np.nan, 0, 0, 1], [np.inf, 0, 0, 0]], ids=["nulo", "nan", "infinito"])
def test_normalizar_quaternion_invalido(quat):
    with pytest.raises(InvalidQuaternion):
        normalize_quaternion(quat)


def test_quat_to_rotmat_exige_norma_unitaria():
    with pytest.raises(InvalidQuaternion):
        quat_to_rotmat([1.0, 0.1, 0.0, 0.0])
    rot = quat_to_rotmat([np.cos(np.pi / 4), 0.0, 0.0, np.sin(np.pi / 4)])
    np.testing.assert_allclose(rot, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-12)


@pytest.mark.parametrize("quat, esperado", [
    ([1.0, 0.0, 0.0, 0.0], np.eye(3)),
    ([0.0, 1.0, 0.0, 0.0], np.diag([1.0, -1.0, -1.0])),
], ids=["identidade", "meia_volta_em_x"])
def test_quat_to_rotmat_casos_conhecidos(quat, esperado):
    np.testing.assert_allclose(quat_to_rotmat(quat), esperado, atol=1e-15)


def _quats_aleatorios(n: int, seed: int) -> np.ndarray:
    quats = np.random.default_rng(seed).normal(size=(n, 4))
    return quats / np.linalg.norm(quats, axis=1, keepdims=True)


def test_quat_e_oposto_dao_a_mesma_matriz():
    quats = _quats_aleatorios(500, 1)
    np.testing.assert_allclose(quats_to_rotmats(quats), quats_to_rotmats(-quats), atol=1e-12)


def test_matrizes_ortogonais_com_determinante_um():
    rots = quats_to_rotmats(_quats_aleatorios(1000, 2))
    identidades = np.einsum("nij,nkj->nik", rots, rots)
    np.testing.assert_allclose(identidades, np.broadcast_to(np.eye(3), identidades.shape), atol=1e-12)
    np.testing.assert_allclose(np.linalg.det(rots), 1.0, atol=1e-12)
    assert quats_to_rotmats(np.empty((0, 4))).shape == (0, 3, 3)


def test_composicao_preserva_norma_unitaria():
    a, b = _quats_aleatorios(1_000_000, 3), _quats_aleatorios(1_000_000, 4)
    produto = compose_quaternions(a, b)
    assert np.max(np.abs(np.linalg.norm(produto, axis=1) - 1.0)) <= 1e-9
    assert np.all(produto[:, 0] >= 0)


def test_composicao_equivale_ao_produto_de_matrizes():
    a, b = _quats_aleatorios(200, 5), _quats_aleatorios(200, 6)
    np.testing.assert_allclose(quats_to_rotmats(compose_quaternions(a, b)),
                               quats_to_rotmats(a) @ quats_to_rotmats(b), atol=1e-12)
    np.testing.assert_allclose(compose_quaternions(a, [1.0, 0.0, 0.0, 0.0]), canonicalize_quaternions(a), atol=1e-12)


def test_canonicalizar_quaternion_escalar_nao_negativo():
    quats = canonicalize_quaternions(np.array([[-0.5, 0.5, 0.5, 0.5], [0.5, -0.5, 0.5, 0.5]]))
    assert np.all(quats[:, 0] >= 0)
    np.testing.assert_allclose(quats[0], [0.5, -0.5, -0.5, -0.5])


def test_pose_rejeita_orientacao_nao_unitaria():
    with pytest.raises(InvalidQuaternion):
        Pose(0.0, (0.0, 0.0, 0.0), (1.0, 1.0, 0.0, 0.0))


def test_trajetoria_timestamps_crescentes():
    with pytest.raises(InvalidParameter):
        Trajectory([0.0, 0.0], np.zeros((2, 3)), np.tile([1.0, 0, 0, 0], (2, 1)))


def test_trajetoria_imutavel_e_selecao():
    traj = trajetoria_linear(5)
    with pytest.raises(ValueError):
        traj.positions[0, 0] = 9.0
    sub = traj.select([0, 2, 4])
    np.testing.assert_array_equal(sub.timestamps, traj.timestamps[[0, 2, 4]])
    assert len(Trajectory.from_poses(traj.poses)) == 5
    assert len(Trajectory.empty()) == 0


def test_quadro_rgb_de_lista_plana():
    quadro = RgbFrame.from_flat(1.0, 2, 1, [0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    assert (quadro.height, quadro.width) == (1, 2)
    np.testing.assert_allclose(quadro.pixels[0, 1], [0.3, 0.4, 0.5])
    with pytest.raises(FrameShapeError):
        RgbFrame.from_flat(1.0, 2, 2, [0.0] * 6)


@pytest.mark.parametrize("valor", [-0.1, 1.5, np.nan], ids=["negativo", "acima_de_um", "nan"])
def test_quadro_rgb_fora_do_intervalo(valor):
    with pytest.raises(InvalidParameter):
        RgbFrame(0.0, np.full((2, 2, 3), valor))


def test_quadro_rgb_vazio():
    with pytest.raises(EmptyFrame):
        RgbFrame(0.0, np.zeros((0, 0, 3))).require_not_empty()


def test_quadro_profundidade_void_e_positivo():
    quadro = DepthFrame(0.0, np.array([[1.0, np.nan], [2.0, 3.0]]))
    np.testing.assert_array_equal(quadro.void_mask(), [[False, True], [False, False]])
    np.testing.assert_array_equal(is_void(quadro.depths), quadro.void_mask())
    with pytest.raises(InvalidParameter):
        DepthFrame(0.0, np.array([[0.0, 1.0]]))


def test_sequencia_consistente_por_indice():
    seq = sequencia_sintetica(4)
    with pytest.raises(FrameShapeError):
        SensorSequence(seq.rgb_frames[:3], seq.depth_frames, seq.trajectory)
    assert seq.is_aligned()
    assert len(seq.select([0, 2])) == 2


def test_sequencia_extrinsecas_por_quadro():
    seq = sequencia_sintetica(4, extrinsics=True)
    assert seq.extrinsics.shape == (4, 3)
    with pytest.raises(FrameShapeError):
        seq.replace(extrinsics=np.zeros((3, 3)))


@pytest.mark.parametrize("kind", STATIC_ONLY_KINDS, ids=lambda k: k.value)
def test_modo_dinamico_rejeitado_para_tipos_estaticos(kind):
    with pytest.raises(ValidationError):
        PerturbationSpec(kind=kind, severity=Severity(level=Level.LOW), mode=Mode.DYNAMIC)


def test_spec_inline():
    spec = PerturbationSpec.parse_inline("gaussian_noise:medium:dynamic:42")
    assert spec.kind == PerturbationKind.GAUSSIAN_NOISE
    assert spec.severity.level == Level.MEDIUM
    assert spec.mode == Mode.DYNAMIC
    assert spec.seed == 42
    assert spec.inline() == "gaussian_noise:medium:dynamic:42"


@pytest.mark.parametrize("texto", [
    "gaussian_noise:medium:static",
    "nao_existe:low:static:1",
    "gaussian_noise:extremo:static:1",
    "faster_motion:low:dynamic:1",
    "gaussian_noise:low:static:-1",
], ids=["campos_faltando", "tipo_desconhecido", "nivel_desconhecido", "dinamico_invalido", "semente_negativa"])
def test_spec_inline_invalido(texto):
    with pytest.raises(InvalidParameter):
        PerturbationSpec.parse_inline(texto)
