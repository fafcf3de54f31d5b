import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from bibliotecas.domain_model import Trajectory
from bibliotecas.erros import InvalidParameter
from bibliotecas.rng_stream import RngStream
from bibliotecas.traj_perturb import (
    DeviationParams,
    ExtrinsicSpec,
    downsample_faster_motion,
    perturb_extrinsic_baseline,
    perturb_rotation,
    perturb_se3,
    perturb_translation,
)
from conftest import sequencia_sintetica, trajetoria_linear

N_MOMENTOS = 100_000


@pytest.fixture(scope="module")
def trajetoria_longa():
    return trajetoria_linear(N_MOMENTOS, passo=0.001, dt=0.01)


def test_desvio_de_rotacao_momentos(trajetoria_longa):
    saida = perturb_rotation(trajetoria_longa, 3.0, RngStream(21, "rot"))
    normas = np.linalg.norm(saida.orientations, axis=1)
    assert np.max(np.abs(normas - 1.0)) <= 1e-9
    assert np.all(saida.orientations[:, 0] >= 0)
    # orientação original é a identidade, então a perturbação é a própria rotação
    angulos = Rotation.from_quat(saida.orientations[:, [1, 2, 3, 0]]).as_euler("XYZ", degrees=True)
    for eixo in range(3):
        assert np.std(angulos[:, eixo]) == pytest.approx(3.0, rel=0.02)
    np.testing.assert_array_equal(saida.positions, trajetoria_longa.positions)


def test_desvio_de_translacao_momentos(trajetoria_longa):
    saida = perturb_translation(trajetoria_longa, 0.025, RngStream(22, "trans"))
    delta = saida.positions - trajetoria_longa.positions
    for eixo in range(3):
        assert np.std(delta[:, eixo]) == pytest.approx(0.025, rel=0.02)
    np.testing.assert_array_equal(saida.orientations, trajetoria_longa.orientations)
    np.testing.assert_array_equal(saida.timestamps, trajetoria_longa.timestamps)


@pytest.mark.parametrize("funcao", [perturb_rotation, perturb_translation], ids=["rotacao", "translacao"])
def test_sigma_zero_identidade(trajetoria, funcao):
    assert funcao(trajetoria, 0.0, RngStream(1)) is trajetoria


@pytest.mark.parametrize("funcao", [perturb_rotation, perturb_translation], ids=["rotacao", "translacao"])
def test_sigma_negativo(trajetoria, funcao):
    with pytest.raises(InvalidParameter):
        funcao(trajetoria, -1.0, RngStream(1))


def test_trajetoria_vazia(trajetoria):
    assert len(perturb_rotation(Trajectory.empty(), 2.0, RngStream(0))) == 0


def test_subamostrar_depois_de_perturbar_equivale(trajetoria):
    fluxo = RngStream(5, "comut")
    perturbada = perturb_se3(trajetoria, DeviationParams(2.0, 0.01), fluxo)
    ids = [0, 3, 6, 9]
    subamostrada = perturb_se3(trajetoria.select(ids), DeviationParams(2.0, 0.01), fluxo, frame_ids=ids)
    np.testing.assert_array_equal(subamostrada.positions, perturbada.select(ids).positions)
    np.testing.assert_array_equal(subamostrada.orientations, perturbada.select(ids).orientations)


def test_desvio_combinado_deterministico(trajetoria):
    params = DeviationParams(rot_sigma_deg=1.0, trans_sigma_m=0.0125)
    a = perturb_se3(trajetoria, params, RngStream(3))
    b = perturb_se3(trajetoria, params, RngStream(3))
    np.testing.assert_array_equal(a.positions, b.positions)
    with pytest.raises(InvalidParameter):
        DeviationParams(-1.0, 0.0)


@pytest.mark.parametrize("k, esperado", [(2, 50), (4, 25), (8, 13)], ids=["k2", "k4", "k8"])
def test_movimento_rapido_tamanhos(k, esperado):
    seq = sequencia_sintetica(100, 2, 2)
    saida = downsample_faster_motion(seq, k)
    assert len(saida) == esperado
    np.testing.assert_array_equal(saida.trajectory.timestamps, seq.trajectory.timestamps[::k])
    assert saida.rgb_frames[1] is seq.rgb_frames[k]


def test_movimento_rapido_k1_e_invalido():
    seq = sequencia_sintetica(5, 2, 2)
    assert downsample_faster_motion(seq, 1) is seq
    with pytest.raises(InvalidParameter):
        downsample_faster_motion(seq, 0)


def test_linha_de_base_extrinseca():
    extr = np.tile([0.05, 0.0, 0.0], (2000, 1))
    spec = ExtrinsicSpec.along(extr, 0.005)
    assert spec.baseline_axis == (1.0, 0.0, 0.0)
    saida = perturb_extrinsic_baseline(extr, spec, RngStream(8))
    np.testing.assert_array_equal(saida[:, 1:], 0.0)
    assert np.std(saida[:, 0] - 0.05) == pytest.approx(0.005, rel=0.1)
    np.testing.assert_array_equal(perturb_extrinsic_baseline(extr, ExtrinsicSpec((1.0, 0.0, 0.0), 0.0), RngStream(8)), extr)


def test_linha_de_base_eixo_invalido():
    with pytest.raises(InvalidParameter):
        ExtrinsicSpec((1.0, 1.0, 0.0), 0.01)
    with pytest.raises(InvalidParameter):
        ExtrinsicSpec.along(np.zeros((3, 3)), 0.01)


def test_desvio_combinado_sem_translacao_igual_a_rotacao(trajetoria):
    combinado = perturb_se3(trajetoria, DeviationParams(rot_sigma_deg=2.0, trans_sigma_m=0.0), RngStream(12, "r"))
    so_rotacao = perturb_rotation(trajetoria, 2.0, RngStream(12, "r"))
    assert np.array_equal(combinado.orientations, so_rotacao.orientations)
    assert np.array_equal(combinado.positions, so_rotacao.positions)


def test_linha_de_base_desvio_em_cem_mil_quadros():
    extr = np.tile([0.0, 0.12, 0.0], (N_MOMENTOS, 1))
    saida = perturb_extrinsic_baseline(extr, ExtrinsicSpec.along(extr, 0.001), RngStream(13, "estereo"))
    assert np.std(saida[:, 1] - 0.12) == pytest.approx(0.001, rel=0.02)
    np.testing.assert_array_equal(saida[:, [0, 2]], 0.0)
