"""
Composição do benchmark: enumera as 1.000 receitas de sequências perturbadas
(125 por cena × 8 cenas) com sementes determinísticas e materializa o plano
sobre sequências limpas fornecidas pelo usuário, gerando um manifesto com
digests SHA-256 de cada arquivo produzido.

Fora do plano, `compose_entry` monta uma entrada com várias perturbações
aplicadas em ordem sobre a mesma sequência.
"""
import hashlib
import shutil
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, model_validator

from bibliotecas.dataset_io import (
    ESCALA_PROFUNDIDADE_PADRAO,
    digest_tree,
    open_sequence,
    write_manifest,
    write_stream,
)
from bibliotecas.depth_perturb import apply_depth
from bibliotecas.domain_model import (
    DEPTH_KINDS,
    LEVELS,
    RGB_KINDS,
    Level,
    Mode,
    PerturbationKind,
    PerturbationSpec,
    SensorSequence,
    Severity,
)
from bibliotecas.erros import InvalidParameter, IoError, LayoutError, MissingSource, PerturbForgeError, PlanShapeError
from bibliotecas.registro_logs import obter_logger
from bibliotecas.rgb_perturb import apply_rgb
from bibliotecas.rng_stream import RngStream
from bibliotecas.sequence_stream import SequenceStream, sobre_fluxo
from bibliotecas.severity import SeverityTable, load_severity_table
from bibliotecas.stream_misalign import MisalignSpec, apply_misalignment
from bibliotecas.traj_perturb import (
    DeviationParams,
    ExtrinsicSpec,
    downsample_faster_motion,
    perturb_extrinsic_baseline,
    perturb_rotation,
    perturb_se3,
    perturb_translation,
)

logger = obter_logger(__name__)

K = PerturbationKind
VERSAO_ESQUEMA = 1
NUMERO_CENAS = 8
DEFAULT_SCENES = ("room0", "room1", "room2", "office0", "office1", "office2", "office3", "office4")
NIVEL_PROFUNDIDADE = Level.MEDIUM


class Category(str, Enum):
    CLEAN = "clean"
    IMAGE_PERTURB = "image_perturb"
    DEPTH_PERTURB = "depth_perturb"
    FASTER_MOTION = "faster_motion"
    TRAJECTORY_DEVIATION = "trajectory_deviation"
    MISALIGNMENT = "misalignment"
    COMPOSED = "composed"


# composições são montadas sob demanda e nunca entram no plano padrão
CONTAGENS_ESPERADAS = {
    Category.CLEAN: 8,
    Category.IMAGE_PERTURB: 768,
    Category.DEPTH_PERTURB: 32,
    Category.FASTER_MOTION: 24,
    Category.TRAJECTORY_DEVIATION: 120,
    Category.MISALIGNMENT: 48,
}


class CompositeDeviation(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    rotation: Level
    translation: Level


class SequenceSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    scene_id: str
    category: Category
    spec: PerturbationSpec | None = None
    composite: CompositeDeviation | None = None
    chain: tuple[PerturbationSpec, ...] | None = None
    seed: int

    @model_validator(mode="after")
    def _cadeia_so_em_composicao(self):
        composta = self.category == Category.COMPOSED
        if composta != bool(self.chain):
            raise ValueError("Entradas 'composed' exigem uma cadeia não vazia de perturbações, e só elas a aceitam.")
        if composta and (self.spec is not None or self.composite is not None):
            raise ValueError("Entrada 'composed' descreve as etapas só em 'chain'.")
        return self

    @property
    def entry_id(self) -> str:
        return canonical_recipe(self.scene_id, self.category, self.spec, self.composite, self.chain)

    @property
    def dir_name(self) -> str:
        return self.entry_id.replace("/", "__")


class BenchmarkPlan(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    schema_version: Literal[1] = VERSAO_ESQUEMA
    master_seed: int
    scenes: list[str]
    entries: list[SequenceSpec]

    def counts(self) -> dict[str, int]:
        contagem = Counter(e.category for e in self.entries)
        return {c.value: contagem.get(c, 0) for c in Category if c in CONTAGENS_ESPERADAS or c in contagem}


class ManifestEntry(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    entry_id: str
    scene_id: str
    category: Category
    seed: int
    output: str
    status: Literal["ok", "failed"]
    frames: int = 0
    severity: dict = {}
    files: dict[str, str] = {}
    error: str | None = None


class Manifest(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    schema_version: Literal[1] = VERSAO_ESQUEMA
    master_seed: int
    table_version: str
    depth_scale: float
    entries: list[ManifestEntry]

    @property
    def failed_count(self) -> int:
        return sum(1 for e in self.entries if e.status == "failed")


# 🧾 Receitas

def canonical_recipe(scene_id: str, category: Category, spec: PerturbationSpec | None,
                     composite: CompositeDeviation | None = None, chain=None) -> str:
    if chain:
        etapas = "+".join(f"{s.kind.value}.{s.severity.level.value}.{s.mode.value}" for s in chain)
        return f"{scene_id}/{category.value}/{etapas}"
    if composite is not None:
        return f"{scene_id}/{category.value}/combined/{composite.rotation.value}/{composite.translation.value}"
    if spec is None:
        return f"{scene_id}/{category.value}"
    return f"{scene_id}/{category.value}/{spec.kind.value}/{spec.severity.level.value}/{spec.mode.value}"


def derive_seed(master_seed: int, canonico: str) -> int:
    digest = hashlib.sha256(f"{master_seed}|{canonico}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def category_for(spec: PerturbationSpec) -> Category:
    """Categoria do benchmark em que um tipo de perturbação isolado se encaixa."""
    if spec.kind in RGB_KINDS:
        return Category.IMAGE_PERTURB
    if spec.kind in DEPTH_KINDS:
        return Category.DEPTH_PERTURB
    if spec.kind == K.FASTER_MOTION:
        return Category.FASTER_MOTION
    if spec.kind == K.MISALIGNMENT:
        return Category.MISALIGNMENT
    return Category.TRAJECTORY_DEVIATION


def _entrada(scene_id: str, category: Category, master_seed: int, kind: PerturbationKind | None = None,
             level: Level | None = None, mode: Mode = Mode.STATIC,
             composite: CompositeDeviation | None = None) -> SequenceSpec:
    esboco = None if kind is None else PerturbationSpec(kind=kind, severity=Severity(level=level), mode=mode)
    semente = derive_seed(master_seed, canonical_recipe(scene_id, category, esboco, composite))
    spec = None if esboco is None else esboco.model_copy(update={"seed": semente})
    return SequenceSpec(scene_id=scene_id, category=category, spec=spec, composite=composite, seed=semente)


def build_plan(scenes=DEFAULT_SCENES, master_seed: int = 0) -> BenchmarkPlan:
    scenes = list(scenes)
    if len(scenes) != NUMERO_CENAS:
        raise PlanShapeError(f"O plano exige exatamente {NUMERO_CENAS} cenas, recebidas {len(scenes)}: {scenes}.")
    repetidas = sorted({s for s in scenes if scenes.count(s) > 1})
    if repetidas:
        raise PlanShapeError(f"Cenas repetidas no plano: {repetidas}.")

    entradas = []
    for cena in scenes:
        entradas.append(_entrada(cena, Category.CLEAN, master_seed))
        for kind in RGB_KINDS:
            for level in LEVELS:
                for mode in (Mode.STATIC, Mode.DYNAMIC):
                    entradas.append(_entrada(cena, Category.IMAGE_PERTURB, master_seed, kind, level, mode))
        for kind in DEPTH_KINDS:
            entradas.append(_entrada(cena, Category.DEPTH_PERTURB, master_seed, kind, NIVEL_PROFUNDIDADE))
        for level in LEVELS:
            entradas.append(_entrada(cena, Category.FASTER_MOTION, master_seed, K.FASTER_MOTION, level))
        for level in LEVELS:
            entradas.append(_entrada(cena, Category.TRAJECTORY_DEVIATION, master_seed, K.ROTATION_DEVIATION, level))
        for level in LEVELS:
            entradas.append(_entrada(cena, Category.TRAJECTORY_DEVIATION, master_seed, K.TRANSLATION_DEVIATION, level))
        for rot in LEVELS:
            for trans in LEVELS:
                entradas.append(_entrada(cena, Category.TRAJECTORY_DEVIATION, master_seed,
                                         composite=CompositeDeviation(rotation=rot, translation=trans)))
        for mode in (Mode.STATIC, Mode.DYNAMIC):
            for level in LEVELS:
                entradas.append(_entrada(cena, Category.MISALIGNMENT, master_seed, K.MISALIGNMENT, level, mode))

    return BenchmarkPlan(master_seed=master_seed, scenes=scenes, entries=entradas)


# ⚙️ Aplicação de perturbações a uma sequência

@sobre_fluxo
def apply_spec(seq: SequenceStream, spec: PerturbationSpec, table: SeverityTable | None = None,
               rng: RngStream | None = None) -> SequenceStream:
    table = table or load_severity_table()
    rng = rng or RngStream(spec.seed, seq.name)
    kind = spec.kind

    if kind in RGB_KINDS:
        return seq.map_rgb(lambda quadro, i: apply_rgb(quadro, spec, i, rng, table))
    if kind in DEPTH_KINDS:
        return seq.map_depth(lambda quadro, i: apply_depth(quadro, spec, i, rng, table))
    params = table.params_for(spec)
    if kind == K.FASTER_MOTION:
        return downsample_faster_motion(seq, params.k)
    if kind == K.ROTATION_DEVIATION:
        return seq.replace(trajectory=perturb_rotation(seq.trajectory, params.sigma_deg, rng, seq.frame_ids))
    if kind == K.TRANSLATION_DEVIATION:
        return seq.replace(trajectory=perturb_translation(seq.trajectory, params.sigma_m, rng, seq.frame_ids))
    if kind == K.MISALIGNMENT:
        return apply_misalignment(seq, MisalignSpec.from_perturbation(spec, table), rng)
    if seq.extrinsics is None:
        raise LayoutError(f"Sequência '{seq.name}' não tem extrinsics.txt para perturbar a linha de base.")
    extr = ExtrinsicSpec.along(seq.extrinsics, params.sigma)
    return seq.replace(extrinsics=perturb_extrinsic_baseline(seq.extrinsics, extr, rng, seq.frame_ids))


@sobre_fluxo
def apply_composite(seq: SequenceStream, composite: CompositeDeviation, seed: int,
                    table: SeverityTable | None = None) -> SequenceStream:
    table = table or load_severity_table()
    params = DeviationParams(
        rot_sigma_deg=table.params(K.ROTATION_DEVIATION, composite.rotation).sigma_deg,
        trans_sigma_m=table.params(K.TRANSLATION_DEVIATION, composite.translation).sigma_m,
    )
    return seq.replace(trajectory=perturb_se3(seq.trajectory, params, RngStream(seed, seq.name), seq.frame_ids))


def stage_sequence_id(scene_id: str, estagio: int) -> str:
    """Caminho aleatório da etapa: a primeira usa o da cena, as seguintes ganham o sufixo '#k'."""
    return scene_id if estagio == 0 else f"{scene_id}#{estagio}"


def compose_entry(scene_id: str, specs) -> SequenceSpec:
    """Entrada 'composed' com as perturbações na ordem em que serão aplicadas; cada etapa mantém a sua semente."""
    specs = tuple(specs)
    if not specs:
        raise InvalidParameter("Uma composição precisa de pelo menos uma perturbação.")
    return SequenceSpec(scene_id=scene_id, category=Category.COMPOSED, chain=specs, seed=specs[0].seed)


@sobre_fluxo
def apply_specs(seq: SequenceStream, specs, table: SeverityTable | None = None,
                scene_id: str | None = None) -> SequenceStream:
    """Aplica as perturbações em ordem; a etapa k sorteia no caminho `stage_sequence_id(cena, k)`."""
    table = table or load_severity_table()
    cena = seq.name if scene_id is None else scene_id
    for estagio, spec in enumerate(specs):
        seq = apply_spec(seq, spec, table, RngStream(spec.seed, stage_sequence_id(cena, estagio)))
        logger.debug(f"🧩 Etapa {estagio} '{spec.inline()}' aplicada em '{cena}' ({len(seq)} quadros).",
                     extra={'log_record_json': {'cena': cena, 'etapa': estagio, 'spec': spec.inline(), 'quadros': len(seq)}})
    return seq


def entry_stream(entrada: SequenceSpec, fluxo: SequenceStream, table: SeverityTable) -> SequenceStream:
    """Encadeia, sem ler quadros, as operações que materializam a entrada."""
    if entrada.category == Category.CLEAN:
        return fluxo
    if entrada.chain:
        return apply_specs(fluxo, entrada.chain, table, entrada.scene_id)
    if entrada.composite is not None:
        return apply_composite(fluxo, entrada.composite, entrada.seed, table)
    return apply_spec(fluxo, entrada.spec, table, RngStream(entrada.seed, entrada.scene_id))


def severity_record(entrada: SequenceSpec, table: SeverityTable) -> dict:
    if entrada.chain:
        etapas = []
        for estagio, spec in enumerate(entrada.chain):
            registro = table.resolve(spec.kind, spec.severity.level).model_dump(mode="json")
            registro.update(kind=spec.kind.value, mode=spec.mode.value, seed=spec.seed,
                            sequence_id=stage_sequence_id(entrada.scene_id, estagio))
            etapas.append(registro)
        return {"stages": etapas}
    if entrada.composite is not None:
        return {
            "rotation": table.resolve(K.ROTATION_DEVIATION, entrada.composite.rotation).model_dump(mode="json"),
            "translation": table.resolve(K.TRANSLATION_DEVIATION, entrada.composite.translation).model_dump(mode="json"),
        }
    if entrada.spec is None:
        return {}
    registro = table.resolve(entrada.spec.kind, entrada.spec.severity.level).model_dump(mode="json")
    registro["mode"] = entrada.spec.mode.value
    return registro


# 🏭 Execução do plano

def materialize_entry(entrada: SequenceSpec, fonte: Path, seq: SensorSequence | SequenceStream | None, destino_raiz: Path,
                      table: SeverityTable, depth_scale: float = ESCALA_PROFUNDIDADE_PADRAO,
                      workers: int | None = None) -> ManifestEntry:
    """Grava a entrada quadro a quadro; sem `seq`, a fonte é aberta sob demanda."""
    destino = destino_raiz / entrada.dir_name
    base = dict(entry_id=entrada.entry_id, scene_id=entrada.scene_id, category=entrada.category,
                seed=entrada.seed, output=entrada.dir_name, severity=severity_record(entrada, table))
    try:
        if destino.exists():
            shutil.rmtree(destino)
        if seq is None:
            fluxo = open_sequence(fonte, depth_scale).replace(name=entrada.scene_id)
        elif isinstance(seq, SensorSequence):
            fluxo = SequenceStream.from_sequence(seq)
        else:
            fluxo = seq
        if entrada.category == Category.CLEAN:
            shutil.copytree(fonte, destino)
            quadros = len(fluxo)
        else:
            resultado = entry_stream(entrada, fluxo, table)
            write_stream(resultado, destino, depth_scale, workers)
            quadros = len(resultado)
        arquivos = digest_tree(destino)
    except (PerturbForgeError, OSError) as e:
        logger.error(f"🔥 Entrada '{entrada.entry_id}' falhou: {e}",
                     extra={'log_record_json': {'entry_id': entrada.entry_id, 'erro': str(e), 'tipo': type(e).__name__}})
        return ManifestEntry(**base, status="failed", error=f"{type(e).__name__}: {e}")
    return ManifestEntry(**base, status="ok", frames=quadros, files=arquivos)


def execute_plan(plan: BenchmarkPlan, sources: dict, out_dir, jobs: int = 1, table: SeverityTable | None = None,
                 depth_scale: float = ESCALA_PROFUNDIDADE_PADRAO, manifest_name: str = "manifest.json") -> Manifest:
    """
    Materializa cada entrada do plano; `sources` mapeia scene_id → diretório da sequência limpa.

    Cada cena é aberta uma vez (índices e trajetória); os quadros são lidos,
    perturbados e gravados um por vez dentro de cada entrada, com `jobs`
    entradas em paralelo.
    """
    table = table or load_severity_table()
    out_dir = Path(out_dir)
    fontes = {cena: Path(caminho) for cena, caminho in sources.items()}
    ausentes = [cena for cena in plan.scenes if cena not in fontes or not fontes[cena].is_dir()]
    if ausentes:
        raise MissingSource(f"Sequências limpas ausentes para as cenas: {ausentes}.", ", ".join(ausentes))
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoError(f"Falha ao criar o diretório de saída {out_dir}: {e}", str(out_dir))

    logger.info(f"🚀 Executando plano com {len(plan.entries)} entradas em {out_dir} (jobs={jobs}).",
                extra={'log_record_json': {'entradas': len(plan.entries), 'jobs': jobs, 'master_seed': plan.master_seed}})
    resultados: dict[str, ManifestEntry] = {}
    for cena in plan.scenes:
        fluxo = open_sequence(fontes[cena], depth_scale).replace(name=cena)
        entradas = [e for e in plan.entries if e.scene_id == cena]
        with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
            feitos = executor.map(lambda e: materialize_entry(e, fontes[cena], fluxo, out_dir, table, depth_scale, workers=1), entradas)
            for entrada, item in zip(entradas, feitos):
                resultados[entrada.entry_id] = item
        logger.info(f"✅ Cena '{cena}' concluída ({len(entradas)} entradas).",
                    extra={'log_record_json': {'cena': cena, 'entradas': len(entradas)}})

    manifesto = Manifest(
        master_seed=plan.master_seed,
        table_version=table.table_version,
        depth_scale=depth_scale,
        entries=[resultados[e.entry_id] for e in plan.entries],
    )
    write_manifest(manifesto, out_dir / manifest_name)
    if manifesto.failed_count:
        logger.warning(f"⚠️ {manifesto.failed_count} entradas falharam; veja o manifesto.",
                       extra={'log_record_json': {'falhas': manifesto.failed_count}})
    return manifesto
