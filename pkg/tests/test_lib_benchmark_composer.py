import numpy as np
import pytest

from bibliotecas.benchmark_composer import (
    CONTAGENS_ESPERADAS,
    DEFAULT_SCENES,
    BenchmarkPlan,
    Category,
    CompositeDeviation,
    SequenceSpec,
    apply_composite,
    apply_spec,
    apply_specs,
    build_plan,
    canonical_recipe,
    category_for,
    compose_entry,
    derive_seed,
    execute_plan,
    materialize_entry,
)
from bibliotecas.dataset_io import load_sequence, read_manifest, read_plan, write_plan, write_sequence
from bibliotecas.domain_model import Level, Mode, PerturbationKind, PerturbationSpec, Severity
from bibliotecas.erros import InvalidParameter, MissingSource, PlanShapeError
from bibliotecas.severity import load_severity_table
from bibliotecas.rng_stream import RngStream
from conftest import assert_sequencias_iguais, sequencia_sintetica

K = PerturbationKind
TIPOS_REDUZIDOS = {K.GAUSSIAN_NOISE, K.BRIGHTNESS, K.RANDOM_MISSING, K.RANGE_CLIPPING,
                   K.FASTER_MOTION, K.ROTATION_DEVIATION, K.MISALIGNMENT}


def plano_reduzido(master_seed: int) -> BenchmarkPlan:
    """Subconjunto de uma cena com sementes idênticas às do plano completo."""
    completo = build_plan(master_seed=master_seed)
    cena = completo.scenes[0]
    entradas = [
        e for e in completo.entries
        if e.scene_id == cena and (
            e.category == Category.CLEAN
            or (e.spec is not None and e.spec.kind in TIPOS_REDUZIDOS)
            or (e.composite is not None and e.composite.rotation == Level.LOW)
        )
    ]
    return BenchmarkPlan(master_seed=master_seed, scenes=[cena], entries=entradas)


@pytest.fixture
def fonte(tmp_path):
    raiz = tmp_path / "src" / DEFAULT_SCENES[0]
    write_sequence(sequencia_sintetica(24, 16, 20, seed=2), raiz)
    return {DEFAULT_SCENES[0]: raiz}


def test_plano_completo_contagens():
    plano = build_plan(master_seed=0)
    assert len(plano.entries) == 1000
    assert plano.counts() == {c.value: n for c, n in CONTAGENS_ESPERADAS.items()}
    for cena in DEFAULT_SCENES:
        da_cena = [e for e in plano.entries if e.scene_id == cena]
        assert len(da_cena) == 125
        assert sum(1 for e in da_cena if e.category == Category.TRAJECTORY_DEVIATION) == 15


def test_plano_identificadores_unicos():
    plano = build_plan(master_seed=0)
    ids = [e.entry_id for e in plano.entries]
    assert len(set(ids)) == len(ids)
    assert "room0/image_perturb/fog/low/static" in ids
    assert "office4/trajectory_deviation/combined/high/low" in ids
    assert "room1/clean" in ids


def test_plano_deterministico_por_semente():
    assert build_plan(master_seed=7) == build_plan(master_seed=7)
    sementes_a = [e.seed for e in build_plan(master_seed=7).entries]
    sementes_b = [e.seed for e in build_plan(master_seed=8).entries]
    assert sementes_a != sementes_b


def test_semente_da_entrada_no_spec():
    plano = build_plan(master_seed=3)
    for entrada in plano.entries:
        assert entrada.seed == derive_seed(3, entrada.entry_id)
        if entrada.spec is not None:
            assert entrada.spec.seed == entrada.seed


@pytest.mark.parametrize("cenas", [DEFAULT_SCENES[:7], DEFAULT_SCENES[:7] + (DEFAULT_SCENES[0],)],
                         ids=["sete_cenas", "cena_repetida"])
def test_formato_de_plano_invalido(cenas):
    with pytest.raises(PlanShapeError):
        build_plan(cenas)


def test_plano_em_disco(tmp_path):
    plano = build_plan(master_seed=11)
    write_plan(plano, tmp_path / "plano.json")
    assert read_plan(tmp_path / "plano.json") == plano


def test_receita_canonica():
    spec = PerturbationSpec(kind=K.SNOW, severity=Severity(level=Level.HIGH), mode=Mode.DYNAMIC)
    assert canonical_recipe("room2", Category.IMAGE_PERTURB, spec) == "room2/image_perturb/snow/high/dynamic"
    entrada = SequenceSpec(scene_id="room2", category=Category.IMAGE_PERTURB, spec=spec, seed=1)
    assert entrada.dir_name == "room2__image_perturb__snow__high__dynamic"


@pytest.mark.parametrize("kind, categoria", [
    (K.FOG, Category.IMAGE_PERTURB),
    (K.EDGE_EROSION, Category.DEPTH_PERTURB),
    (K.FASTER_MOTION, Category.FASTER_MOTION),
    (K.MISALIGNMENT, Category.MISALIGNMENT),
    (K.TRANSLATION_DEVIATION, Category.TRAJECTORY_DEVIATION),
    (K.EXTRINSIC_BASELINE, Category.TRAJECTORY_DEVIATION),
], ids=lambda v: v.value)
def test_categoria_por_tipo(kind, categoria):
    assert category_for(PerturbationSpec(kind=kind, severity=Severity(level=Level.LOW))) == categoria


def test_aplicar_desvio_composto_muda_so_a_trajetoria():
    seq = sequencia_sintetica(8, 4, 4)
    saida = apply_composite(seq, CompositeDeviation(rotation=Level.LOW, translation=Level.HIGH), 5)
    assert all(a is b for a, b in zip(saida.rgb_frames, seq.rgb_frames))
    assert not np.array_equal(saida.trajectory.positions, seq.trajectory.positions)


def test_aplicar_spec_de_profundidade_preserva_rgb():
    seq = sequencia_sintetica(4, 8, 8)
    spec = PerturbationSpec(kind=K.RANDOM_MISSING, severity=Severity(level=Level.HIGH), seed=1)
    saida = apply_spec(seq, spec)
    assert all(a is b for a, b in zip(saida.rgb_frames, seq.rgb_frames))
    assert any(f.void_mask().any() for f in saida.depth_frames)


def test_execucao_deterministica(tmp_path, fonte):
    plano = plano_reduzido(42)
    a = execute_plan(plano, fonte, tmp_path / "a", jobs=1)
    b = execute_plan(plano, fonte, tmp_path / "b", jobs=4)
    assert a == b
    assert a.failed_count == 0
    assert read_manifest(tmp_path / "a" / "manifest.json") == a


def test_sementes_diferentes_produzem_saidas_diferentes(tmp_path, fonte):
    a = execute_plan(plano_reduzido(1), fonte, tmp_path / "a")
    b = execute_plan(plano_reduzido(2), fonte, tmp_path / "b")
    ruido_a = next(e for e in a.entries if "gaussian_noise/high/static" in e.entry_id)
    ruido_b = next(e for e in b.entries if "gaussian_noise/high/static" in e.entry_id)
    assert ruido_a.files != ruido_b.files
    limpo_a = next(e for e in a.entries if e.category == Category.CLEAN)
    limpo_b = next(e for e in b.entries if e.category == Category.CLEAN)
    assert limpo_a.files == limpo_b.files


def test_manifesto_registra_severidade_e_quadros(tmp_path, fonte):
    manifesto = execute_plan(plano_reduzido(0), fonte, tmp_path / "saida")
    rapido = next(e for e in manifesto.entries if e.entry_id.endswith("faster_motion/medium/static"))
    assert rapido.frames == 6
    assert rapido.severity["params"] == {"k": 4}
    desalinhado = next(e for e in manifesto.entries if e.entry_id.endswith("misalignment/low/static"))
    assert desalinhado.frames == 19
    assert len(load_sequence(tmp_path / "saida" / desalinhado.output)) == 19
    assert manifesto.table_version == load_severity_table().table_version


def test_fonte_ausente(tmp_path):
    with pytest.raises(MissingSource):
        execute_plan(plano_reduzido(0), {}, tmp_path / "saida")


def test_entrada_com_falha_fica_no_manifesto(tmp_path, fonte):
    seq = load_sequence(fonte[DEFAULT_SCENES[0]])
    spec = PerturbationSpec(kind=K.EXTRINSIC_BASELINE, severity=Severity(level=Level.LOW), seed=3)
    entrada = SequenceSpec(scene_id=DEFAULT_SCENES[0], category=category_for(spec), spec=spec, seed=3)
    item = materialize_entry(entrada, fonte[DEFAULT_SCENES[0]], seq, tmp_path / "saida", load_severity_table())
    assert item.status == "failed"
    assert item.error.startswith("LayoutError")
    assert item.files == {}


def test_linha_de_base_com_extrinsecas(tmp_path):
    raiz = tmp_path / "estereo"
    write_sequence(sequencia_sintetica(5, 4, 4, extrinsics=True), raiz)
    spec = PerturbationSpec(kind=K.EXTRINSIC_BASELINE, severity=Severity(level=Level.HIGH), seed=3)
    entrada = SequenceSpec(scene_id="estereo", category=category_for(spec), spec=spec, seed=3)
    item = materialize_entry(entrada, raiz, load_sequence(raiz), tmp_path / "saida", load_severity_table())
    assert item.status == "ok"
    assert "extrinsics.txt" in item.files


def _inline(*textos):
    return [PerturbationSpec.parse_inline(t) for t in textos]


def test_composicao_aplica_as_etapas_em_ordem():
    seq = sequencia_sintetica(24, 2, 2, seed=5)
    rapido_depois_desalinhado = apply_specs(seq, _inline("faster_motion:low:static:1", "misalignment:low:static:2"))
    desalinhado_depois_rapido = apply_specs(seq, _inline("misalignment:low:static:2", "faster_motion:low:static:1"))
    # k=2 e atraso de 5: 24 → 12 → 7 contra 24 → 19 → 10
    assert len(rapido_depois_desalinhado) == 7
    assert len(desalinhado_depois_rapido) == 10
    for i in range(7):
        np.testing.assert_array_equal(rapido_depois_desalinhado.rgb_frames[i].pixels, seq.rgb_frames[2 * (i + 5)].pixels)
        assert rapido_depois_desalinhado.depth_frames[i] is seq.depth_frames[2 * i]
    for i in range(10):
        np.testing.assert_array_equal(desalinhado_depois_rapido.rgb_frames[i].pixels, seq.rgb_frames[2 * i + 5].pixels)
        assert desalinhado_depois_rapido.depth_frames[i] is seq.depth_frames[2 * i]


def test_composicao_de_uma_etapa_igual_a_spec_isolada():
    seq = sequencia_sintetica(6, 8, 8, seed=1, nome="room0")
    spec = PerturbationSpec.parse_inline("fog:medium:dynamic:13")
    assert_sequencias_iguais(apply_specs(seq, [spec]), apply_spec(seq, spec, rng=RngStream(13, "room0")))


def test_etapas_repetidas_sorteiam_caminhos_distintos():
    seq = sequencia_sintetica(4, 8, 8, seed=3, nome="room0")
    ruido = PerturbationSpec.parse_inline("gaussian_noise:low:static:21")
    composta = apply_specs(seq, [ruido, ruido])
    mesmo_caminho = apply_spec(apply_spec(seq, ruido, rng=RngStream(21, "room0")), ruido, rng=RngStream(21, "room0"))
    segunda_etapa = apply_spec(apply_spec(seq, ruido, rng=RngStream(21, "room0")), ruido, rng=RngStream(21, "room0#1"))
    assert not np.array_equal(composta.rgb_frames[0].pixels, mesmo_caminho.rgb_frames[0].pixels)
    assert_sequencias_iguais(composta, segunda_etapa)


def test_entrada_composta():
    entrada = compose_entry("room0", _inline("fog:low:static:4", "faster_motion:high:static:9"))
    assert entrada.category == Category.COMPOSED
    assert entrada.entry_id == "room0/composed/fog.low.static+faster_motion.high.static"
    assert entrada.dir_name == "room0__composed__fog.low.static+faster_motion.high.static"
    assert entrada.seed == 4
    with pytest.raises(InvalidParameter):
        compose_entry("room0", [])
    with pytest.raises(ValueError):
        SequenceSpec(scene_id="room0", category=Category.COMPOSED, seed=1)
    with pytest.raises(ValueError):
        SequenceSpec(scene_id="room0", category=Category.IMAGE_PERTURB, chain=tuple(_inline("fog:low:static:4")), seed=1)


def test_plano_padrao_nao_lista_composicoes():
    assert Category.COMPOSED.value not in build_plan(master_seed=0).counts()


def test_materializar_entrada_composta(tmp_path, fonte):
    cena = DEFAULT_SCENES[0]
    entrada = compose_entry(cena, _inline("gaussian_noise:high:static:3", "faster_motion:medium:static:3", "random_missing:low:static:8"))
    item = materialize_entry(entrada, fonte[cena], None, tmp_path / "saida", load_severity_table(), workers=2)
    assert item.status == "ok"
    assert item.frames == 6
    etapas = item.severity["stages"]
    assert [e["kind"] for e in etapas] == ["gaussian_noise", "faster_motion", "random_missing"]
    assert [e["sequence_id"] for e in etapas] == [cena, f"{cena}#1", f"{cena}#2"]
    assert [e["seed"] for e in etapas] == [3, 3, 8]
    assert etapas[1]["params"] == {"k": 4}
    assert len(load_sequence(tmp_path / "saida" / entrada.dir_name)) == 6
    repetido = materialize_entry(entrada, fonte[cena], None, tmp_path / "outra", load_severity_table(), workers=1)
    assert repetido.files == item.files
