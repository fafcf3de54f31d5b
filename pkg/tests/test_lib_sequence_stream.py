import threading
import weakref

import numpy as np
import pytest

from bibliotecas.benchmark_composer import apply_spec
from bibliotecas.dataset_io import digest_tree, load_sequence, open_sequence, write_sequence, write_stream
from bibliotecas.domain_model import Level, PerturbationKind, PerturbationSpec, RgbFrame, Severity
from bibliotecas.erros import FrameShapeError, InvalidParameter, LayoutError
from bibliotecas.rng_stream import RngStream
from bibliotecas.sequence_stream import SequenceStream
from conftest import assert_sequencias_iguais, sequencia_sintetica

K = PerturbationKind


@pytest.fixture
def em_disco(tmp_path):
    write_sequence(sequencia_sintetica(12, 10, 12, seed=6), tmp_path / "cena")
    return tmp_path / "cena"


def test_abrir_nao_decodifica_imagens(em_disco):
    fluxo = open_sequence(em_disco)
    # apagado depois de abrir: só a leitura daquele quadro falha
    arquivo = sorted((em_disco / "rgb").iterdir())[3]
    arquivo.unlink()
    assert len(fluxo) == 12
    assert fluxo.rgb_at(2).pixels.shape == (10, 12, 3)
    with pytest.raises(LayoutError):
        fluxo.rgb_at(3)


def test_abrir_com_imagem_ausente_falha_cedo(em_disco):
    sorted((em_disco / "depth").iterdir())[0].unlink()
    with pytest.raises(LayoutError):
        open_sequence(em_disco)


def test_materializar_igual_a_carregar(em_disco):
    carregada = load_sequence(em_disco)
    materializada = open_sequence(em_disco).materialize(workers=1)
    assert_sequencias_iguais(carregada, materializada)
    assert materializada.dropped_frames == carregada.dropped_frames


def test_escrita_mantem_no_maximo_um_quadro_por_worker(tmp_path):
    seq = sequencia_sintetica(16, 6, 6, seed=1)
    trava = threading.Lock()
    estado = {"vivos": 0, "pico": 0}

    def liberar():
        with trava:
            estado["vivos"] -= 1

    def ler_rgb(i):
        quadro = RgbFrame(seq.rgb_frames[i].timestamp, seq.rgb_frames[i].pixels)
        weakref.finalize(quadro.pixels, liberar)
        with trava:
            estado["vivos"] += 1
            estado["pico"] = max(estado["pico"], estado["vivos"])
        return quadro

    fluxo = SequenceStream.from_sequence(seq).replace(rgb_at=ler_rgb)
    write_stream(fluxo, tmp_path / "um", workers=1)
    assert estado["pico"] == 1
    assert estado["vivos"] == 0
    estado["pico"] = 0
    write_stream(fluxo, tmp_path / "dois", workers=2)
    assert estado["pico"] <= 2


def test_escrita_em_fluxo_igual_a_escrita_em_memoria(tmp_path, em_disco):
    spec = PerturbationSpec(kind=K.GAUSSIAN_NOISE, severity=Severity(level=Level.HIGH), seed=9)
    rng = RngStream(spec.seed, "cena")
    write_sequence(apply_spec(load_sequence(em_disco), spec, rng=rng), tmp_path / "memoria")
    write_stream(apply_spec(open_sequence(em_disco), spec, rng=rng), tmp_path / "fluxo", workers=3)
    assert digest_tree(tmp_path / "memoria") == digest_tree(tmp_path / "fluxo")


def test_selecao_preserva_ids_de_origem():
    fluxo = SequenceStream.from_sequence(sequencia_sintetica(10, 2, 2))
    selecionado = fluxo.select([1, 4, 7]).select([0, 2])
    np.testing.assert_array_equal(selecionado.frame_ids, [1, 7])
    np.testing.assert_array_equal(selecionado.trajectory.timestamps, fluxo.trajectory.timestamps[[1, 7]])


def test_perturbacao_usa_o_id_de_origem_apos_subamostrar():
    seq = sequencia_sintetica(12, 4, 4, seed=2)
    fluxo = SequenceStream.from_sequence(seq)
    ruido = PerturbationSpec(kind=K.GAUSSIAN_NOISE, severity=Severity(level=Level.MEDIUM), seed=4)
    rotacao = PerturbationSpec(kind=K.ROTATION_DEVIATION, severity=Severity(level=Level.HIGH), seed=4)
    rng = RngStream(4, "ordem")
    ids = [0, 3, 6, 9]
    for spec in (ruido, rotacao):
        antes = apply_spec(fluxo, spec, rng=rng).select(ids).materialize(workers=1)
        depois = apply_spec(fluxo.select(ids), spec, rng=rng).materialize(workers=1)
        assert_sequencias_iguais(antes, depois)


def test_deslocamento_fora_da_sequencia():
    fluxo = SequenceStream.from_sequence(sequencia_sintetica(5, 2, 2))
    with pytest.raises(InvalidParameter):
        fluxo.shift("rgb", [1, 1, 1, 5])
    with pytest.raises(InvalidParameter):
        fluxo.shift("imu", [0])


def test_fluxo_inconsistente():
    seq = sequencia_sintetica(4, 2, 2)
    with pytest.raises(FrameShapeError):
        SequenceStream.from_sequence(seq).replace(rgb_timestamps=np.zeros(3))
