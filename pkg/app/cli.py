import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import argparse
import csv
import json
from pathlib import Path

from bibliotecas.benchmark_composer import (
    DEFAULT_SCENES,
    Manifest,
    ManifestEntry,
    SequenceSpec,
    build_plan,
    category_for,
    compose_entry,
    execute_plan,
    materialize_entry,
)
from bibliotecas.config import carregar_configuracao
from bibliotecas.dataset_io import (
    open_sequence,
    read_manifest,
    read_plan,
    read_trajectory,
    write_manifest,
    write_plan,
)
from bibliotecas.domain_model import PerturbationSpec
from bibliotecas.erros import DegenerateGeometry, InvalidParameter, PerturbForgeError
from bibliotecas.metrics import (
    ATE_FALHA,
    SR_FALHA,
    Alignment,
    FailureReason,
    SettingResult,
    aggregate,
    average_runs,
    compute_ate,
    compute_sr,
    csr_curve,
)
from bibliotecas.registro_logs import configurar_logging, obter_logger
from bibliotecas.severity import load_severity_table

logger = obter_logger("cli")

EXIT_OK = 0
EXIT_USO = 1
EXIT_DADOS = 2
EXIT_PARCIAL = 3
LIMIARES_CSR_PADRAO = "0.01,0.02,0.03,0.05,0.1,0.2,0.5,1.0"


class ParserPerturbForge(argparse.ArgumentParser):  # 🚦 Erros de uso saem com código 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USO, f"{self.prog}: erro: {message}\n")


def _lista(texto: str) -> list[str]:
    return [item.strip() for item in texto.split(",") if item.strip()]


def _limiares(texto: str) -> list[float]:
    try:
        return [float(v) for v in _lista(texto)]
    except ValueError:
        raise InvalidParameter(f"Lista de limiares inválida: '{texto}'.")


def _semente(texto: str) -> int:
    valor = int(texto)
    if not 0 <= valor < 2**64:
        raise argparse.ArgumentTypeError(f"semente {valor} fora do intervalo de 64 bits sem sinal")
    return valor


def _imprimir_semente(semente: int) -> None:
    print(f"seed {semente}")


# 🗺️ plan

def cmd_plan(args) -> int:
    semente = args.seed if args.seed is not None else 0
    cenas = _lista(args.scenes) if args.scenes else list(DEFAULT_SCENES)
    plano = build_plan(cenas, semente)
    write_plan(plano, args.out)
    _imprimir_semente(semente)
    for categoria, total in plano.counts().items():
        print(f"{categoria} {total}")
    print(f"total {len(plano.entries)}")
    logger.info(f"🗺️ Plano com {len(plano.entries)} entradas gravado em {args.out}.",
                extra={'log_record_json': {'saida': str(args.out), 'entradas': len(plano.entries), 'seed': semente}})
    return EXIT_OK


# 🎨 perturb

def cmd_perturb(args) -> int:
    tabela = load_severity_table(args.severity_table)
    src, out = Path(args.src), Path(args.out)

    if args.plan:
        plano = read_plan(args.plan)
        if args.seed is not None and args.seed != plano.master_seed:
            plano = build_plan(plano.scenes, args.seed)
        _imprimir_semente(plano.master_seed)
        fontes = {cena: src / cena for cena in plano.scenes}
        manifesto = execute_plan(plano, fontes, out, jobs=args.jobs, table=tabela, depth_scale=args.depth_scale)
    else:
        specs = [PerturbationSpec.parse_inline(texto) for texto in args.spec]
        if args.seed is not None:
            specs = [spec.model_copy(update={"seed": args.seed}) for spec in specs]
        _imprimir_semente(specs[0].seed)
        manifesto = _perturbar_fonte(specs, src, out, tabela, args.depth_scale, args.jobs)

    for entrada in manifesto.entries:
        print(f"{entrada.status} {entrada.entry_id}")
    if manifesto.failed_count:
        print(f"falhas {manifesto.failed_count}", file=sys.stderr)
        return EXIT_PARCIAL
    return EXIT_OK


def _perturbar_fonte(specs: list[PerturbationSpec], src: Path, out: Path, tabela, depth_scale: float, jobs: int) -> Manifest:
    if len(specs) == 1:
        spec = specs[0]
        entrada = SequenceSpec(scene_id=src.name, category=category_for(spec), spec=spec, seed=spec.seed)
    else:
        entrada = compose_entry(src.name, specs)
    fluxo = open_sequence(src, depth_scale).replace(name=src.name)
    out.mkdir(parents=True, exist_ok=True)
    registro = materialize_entry(entrada, src, fluxo, out, tabela, depth_scale, workers=jobs)
    manifesto = Manifest(master_seed=entrada.seed, table_version=tabela.table_version, depth_scale=depth_scale, entries=[registro])
    write_manifest(manifesto, out / "manifest.json")
    return manifesto


# 📏 evaluate

def cmd_evaluate(args) -> int:
    semente = args.seed if args.seed is not None else 0
    metricas = set(_lista(args.metrics))
    desconhecidas = metricas - {"ate", "sr"}
    if desconhecidas:
        raise InvalidParameter(f"Métricas desconhecidas: {sorted(desconhecidas)} (use ate,sr).")
    alinhamento = Alignment(args.align)
    est, gt = read_trajectory(args.est), read_trajectory(args.gt)
    tolerancia = args.tolerance if args.tolerance is not None else carregar_configuracao().assoc_tolerance

    relatorio = {"seed": semente, "alignment": alinhamento.value, "falha": len(est) == 0}
    if "ate" in metricas:
        if len(est) == 0:
            relatorio.update(ate=ATE_FALHA, label="ATE", per_frame_errors=[], sse=None, pairs=0)
        else:
            ate = compute_ate(est, gt, alinhamento, tolerancia)
            relatorio.update(ate=ate.ate, label=ate.label, per_frame_errors=ate.per_frame_errors,
                             sse=ate.sse, pairs=ate.pairs, scale=ate.scale)
    if "sr" in metricas:
        relatorio["sr"] = SR_FALHA if len(est) == 0 else compute_sr(est, gt).sr

    if args.format == "structured":
        print(json.dumps(relatorio, sort_keys=True))
        return EXIT_OK
    _imprimir_semente(semente)
    if "ate" in relatorio:
        print(f"{relatorio['label']} {relatorio['ate']:.6f}" + (" (falha)" if relatorio["falha"] else ""))
        if relatorio.get("sse") is not None:
            print(f"SSE {relatorio['sse']:.6f}")
            print(f"pairs {relatorio['pairs']}")
    if "sr" in relatorio:
        print(f"SR {relatorio['sr']:.6f}")
    return EXIT_OK


# 📊 report

def _grupo_tipo(entrada: ManifestEntry) -> str:
    partes = entrada.entry_id.split("/")
    return partes[2] if len(partes) > 2 else partes[1]


def _resultado_entrada(entrada: ManifestEntry, raiz_manifesto: Path, resultados: Path,
                       alinhamento: Alignment, tolerancia: float) -> tuple[SettingResult, bool]:
    """Devolve o resultado da configuração e se o arquivo de resultado estava ausente."""
    nome = entrada.output
    marcador = resultados / f"{nome}.failed"
    if entrada.status == "failed":
        return SettingResult(name=entrada.entry_id, failed=True), False
    if marcador.is_file():
        motivo = FailureReason.from_code(marcador.read_text(encoding="utf-8"))
        return SettingResult(name=entrada.entry_id, failed=True, reason=motivo), False

    execucoes = sorted(resultados.glob(f"{nome}.run*.txt"))
    principal = resultados / f"{nome}.txt"
    if principal.is_file():
        execucoes.insert(0, principal)
    if not execucoes:
        return SettingResult(name=entrada.entry_id, failed=True), True

    gt = read_trajectory(raiz_manifesto / nome / "groundtruth.txt")
    medidas = []
    for arquivo in execucoes:
        est = read_trajectory(arquivo)
        if len(est) == 0:
            medidas.append(SettingResult(name=entrada.entry_id, failed=True, reason=FailureReason.TRACKING_LOSS))
            continue
        try:
            ate = compute_ate(est, gt, alinhamento, tolerancia).ate
            sr = compute_sr(est, gt).sr
        except PerturbForgeError as e:
            # alinhamento impossível não é perda de rastreamento do SLAM
            motivo = FailureReason.DEGENERATE_GEOMETRY if isinstance(e, DegenerateGeometry) else FailureReason.TRACKING_LOSS
            logger.warning(f"⚠️ Resultado {arquivo.name} tratado como falha: {e}", extra={'log_record_json': {'arquivo': str(arquivo), 'erro': str(e)}})
            medidas.append(SettingResult(name=entrada.entry_id, failed=True, reason=motivo))
            continue
        medidas.append(SettingResult(name=entrada.entry_id, ate=ate, sr=sr))
    return average_runs(medidas), False


def build_report(manifesto: Manifest, raiz_manifesto: Path, resultados: Path, limiares: list[float],
                 alinhamento: Alignment = Alignment.NONE, tolerancia: float = 0.02) -> tuple[list[dict], list[dict], list[str]]:
    grupos: dict[str, list[SettingResult]] = {}
    ausentes = []
    for entrada in manifesto.entries:
        resultado, ausente = _resultado_entrada(entrada, raiz_manifesto, resultados, alinhamento, tolerancia)
        if ausente:
            ausentes.append(entrada.entry_id)
        categoria = entrada.category.value
        grupos.setdefault("all", []).append(resultado)
        grupos.setdefault(categoria, []).append(resultado)
        grupos.setdefault(f"{categoria}/{_grupo_tipo(entrada)}", []).append(resultado)

    tabela_agregada, tabela_csr = [], []
    for grupo in sorted(grupos):
        relatorio = aggregate(grupos[grupo])
        tabela_agregada.append({
            "group": grupo,
            "settings": relatorio.setting_count,
            "mean_ate": relatorio.mean_ate,
            "max_ate": relatorio.max_ate,
            "mean_sr": relatorio.mean_sr,
            "min_sr": relatorio.min_sr,
            "failures": relatorio.failure_count,
            "tracking_loss": relatorio.failures_by_reason.get(FailureReason.TRACKING_LOSS.value, 0),
            "resource_exhaustion": relatorio.failures_by_reason.get(FailureReason.RESOURCE_EXHAUSTION.value, 0),
            "degenerate_geometry": relatorio.failures_by_reason.get(FailureReason.DEGENERATE_GEOMETRY.value, 0),
        })
        ates = [ATE_FALHA if r.failed else r.ate for r in grupos[grupo]]
        for limiar, csr in csr_curve(ates, limiares):
            tabela_csr.append({"group": grupo, "threshold": limiar, "csr": csr})
    return tabela_agregada, tabela_csr, ausentes


def _escrever_csv(linhas: list[dict], destino) -> None:
    if not linhas:
        return
    escritor = csv.DictWriter(destino, fieldnames=list(linhas[0]), lineterminator="\n")
    escritor.writeheader()
    for linha in linhas:
        escritor.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in linha.items()})


def cmd_report(args) -> int:
    semente = args.seed if args.seed is not None else 0
    manifesto = read_manifest(args.manifest)
    tolerancia = carregar_configuracao().assoc_tolerance
    agregada, csr, ausentes = build_report(
        manifesto, Path(args.manifest).parent, Path(args.results), _limiares(args.csr_thresholds),
        Alignment(args.align), tolerancia,
    )
    _imprimir_semente(semente)
    if ausentes:
        logger.warning(f"⚠️ {len(ausentes)} resultados ausentes tratados como falha.", extra={'log_record_json': {'ausentes': ausentes}})
        for entry_id in ausentes:
            print(f"missing {entry_id}", file=sys.stderr)
    _escrever_csv(agregada, sys.stdout)
    print()
    _escrever_csv(csr, sys.stdout)
    if args.out:
        saida = Path(args.out)
        saida.mkdir(parents=True, exist_ok=True)
        with open(saida / "aggregate.csv", "w", encoding="utf-8", newline="") as arquivo:
            _escrever_csv(agregada, arquivo)
        with open(saida / "csr.csv", "w", encoding="utf-8", newline="") as arquivo:
            _escrever_csv(csr, arquivo)
    return EXIT_OK


# 🧰 parser

def criar_parser() -> argparse.ArgumentParser:
    parser = ParserPerturbForge(prog="perturb_forge", description="Gerador de benchmarks de robustez para SLAM RGB-D.")
    parser.add_argument("--seed", type=_semente, default=None, help="semente global (sobrepõe a do plano/spec)")
    parser.add_argument("--severity-table", default=None, help="caminho da tabela de severidade")
    sub = parser.add_subparsers(dest="comando", required=True, parser_class=ParserPerturbForge)

    p_plan = sub.add_parser("plan", help="gera o plano de 1.000 sequências")
    p_plan.add_argument("--scenes", default=None, help="lista de 8 cenas separadas por vírgula")
    p_plan.add_argument("--seed", type=_semente, default=argparse.SUPPRESS)
    p_plan.add_argument("--out", required=True)
    p_plan.set_defaults(func=cmd_plan)

    p_perturb = sub.add_parser("perturb", help="materializa um plano, uma perturbação ou uma composição")
    origem = p_perturb.add_mutually_exclusive_group(required=True)
    origem.add_argument("--plan")
    origem.add_argument("--spec", action="append", help="tipo:nivel:modo:semente; repetido, as perturbações são compostas na ordem dada")
    p_perturb.add_argument("--src", required=True)
    p_perturb.add_argument("--out", required=True)
    p_perturb.add_argument("--jobs", type=int, default=1)
    p_perturb.add_argument("--depth-scale", type=float, default=None)
    p_perturb.add_argument("--seed", type=_semente, default=argparse.SUPPRESS)
    p_perturb.set_defaults(func=cmd_perturb)

    p_eval = sub.add_parser("evaluate", help="calcula ATE / SR de uma trajetória")
    p_eval.add_argument("--est", required=True)
    p_eval.add_argument("--gt", required=True)
    p_eval.add_argument("--align", choices=[a.value for a in Alignment], default=Alignment.NONE.value)
    p_eval.add_argument("--metrics", default="ate,sr")
    p_eval.add_argument("--format", choices=["text", "structured"], default="text")
    p_eval.add_argument("--tolerance", type=float, default=None)
    p_eval.add_argument("--seed", type=_semente, default=argparse.SUPPRESS)
    p_eval.set_defaults(func=cmd_evaluate)

    p_report = sub.add_parser("report", help="agrega resultados e gera curvas CSR")
    p_report.add_argument("--manifest", required=True)
    p_report.add_argument("--results", required=True)
    p_report.add_argument("--csr-thresholds", default=LIMIARES_CSR_PADRAO)
    p_report.add_argument("--align", choices=[a.value for a in Alignment], default=Alignment.NONE.value)
    p_report.add_argument("--out", default=None)
    p_report.add_argument("--seed", type=_semente, default=argparse.SUPPRESS)
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = criar_parser().parse_args(argv)
    try:
        configuracao = carregar_configuracao()
        configurar_logging(configuracao.log_level, configuracao.log_dir)
        if getattr(args, "depth_scale", 0) is None:
            args.depth_scale = configuracao.depth_scale
        if args.severity_table is None:
            args.severity_table = configuracao.severity_table
        return args.func(args)
    except PerturbForgeError as e:
        logger.error(f"🔥 {type(e).__name__}: {e}", extra={'log_record_json': {'erro': type(e).__name__, 'comando': args.comando}})
        print(f"erro: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error(f"🔥 Erro de E/S: {e}", extra={'log_record_json': {'erro': str(e), 'comando': args.comando}})
        print(f"erro: IoError: {e}", file=sys.stderr)
        return EXIT_DADOS


if __name__ == "__main__":
    sys.exit(main())
