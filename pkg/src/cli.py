"""
命令行入口
invariants / compare / gen / fixture / suite 五个子命令，
结果 JSON 写到 stdout，日志写到 stderr
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence, Tuple

from src.config import ToleranceConfig, get_settings
from src.data_models import RandomSpecModel, StagedOutcome, StateClass, WitnessPayload, round_sig
from src.errors import BadCut, BadDimension, LUEquivalenceError, NotMultiplicityFree, OutOfClass
from src.generation.fixtures import d_computable_fixture, random_d_computable_fixture, werner_fixture
from src.generation.random_states import generate_state
from src.invariants.class_f import compute_invariants_f
from src.invariants.class_g import compute_invariants_g, detect_class_g
from src.invariants.sigma import SigmaDomain
from src.pipeline import PropertySuitePipeline, RunConfig
from src.state_io import StateFile, dump_json, pair_to_payload, read_local_pair, read_state, state_to_payload
from src.states.bipartite import DensityMatrix, EigenEnsemble, eigen_decompose
from src.states.multipartite import Bipartition, staged_equivalence
from src.verification.equivalence_verifier import EquivalenceVerifier

logger = logging.getLogger(__name__)

EXIT_EQUIVALENT = 0
EXIT_INEQUIVALENT = 1
EXIT_OUT_OF_CLASS = 2
EXIT_ERROR = 3


class _Parser(argparse.ArgumentParser):
    """参数错误也按库错误处理，退出码 3"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: 错误: {message}\n")


def setup_logging(level: Optional[str] = None) -> None:
    log = get_settings().log
    logging.basicConfig(
        level=getattr(logging, (level or log.level).upper(), logging.WARNING),
        format=log.format,
        stream=sys.stderr,
    )


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n", encoding="utf-8")
        logger.info(f"已写入 {path}")
    else:
        sys.stdout.write(text + "\n")


def _tolerances(args) -> ToleranceConfig:
    return get_settings().tolerances_with(tol=args.tol)


def _require_bipartite(state: StateFile, path: str) -> DensityMatrix:
    if state.rho is None:
        raise BadDimension(f"{path} 是多体态文件，此命令只接受二体态")
    return state.rho


# ==================== invariants ====================


def _invariants_f(rho: DensityMatrix, ensemble: Optional[EigenEnsemble], args, tols):
    ensemble = ensemble or eigen_decompose(rho, tols=tols)
    if ensemble.is_degenerate and not ensemble.supplied:
        raise OutOfClass("degenerate_spectrum", f"μ 简并组 {ensemble.degenerate_groups}")
    try:
        inv = compute_invariants_f(
            ensemble,
            SigmaDomain(args.sigma_domain),
            tols=tols,
            allow_large=args.allow_large,
        )
    except NotMultiplicityFree as e:
        raise OutOfClass("not_multiplicity_free", str(e)) from e
    return inv.to_payload()


def _invariants_g(rho: DensityMatrix, ensemble: Optional[EigenEnsemble], tols):
    ensemble = ensemble or eigen_decompose(rho, tols=tols)
    form = detect_class_g(ensemble, tols)
    if ensemble.is_degenerate and not ensemble.supplied:
        raise OutOfClass("degenerate_spectrum", f"μ 简并组 {ensemble.degenerate_groups}")
    return compute_invariants_g(form, ensemble, tols).to_payload()


def cmd_invariants(args) -> int:
    tols = _tolerances(args)
    state = read_state(args.state, tols)
    rho = _require_bipartite(state, args.state)
    cls = StateClass(args.state_class)

    try:
        if cls is StateClass.G:
            payload = _invariants_g(rho, state.ensemble, tols)
        elif cls is StateClass.F:
            payload = _invariants_f(rho, state.ensemble, args, tols)
        else:
            try:
                payload = _invariants_f(rho, state.ensemble, args, tols)
            except OutOfClass as first:
                try:
                    payload = _invariants_g(rho, state.ensemble, tols)
                except OutOfClass as second:
                    raise OutOfClass(
                        f"F: {first.reason}; G: {second.reason}", f"{first}; {second}"
                    ) from second
    except OutOfClass as e:
        sys.stderr.write(f"不属于所选类: {e.reason}: {e}\n")
        return EXIT_OUT_OF_CLASS

    _emit(dump_json(payload), args.output)
    return EXIT_EQUIVALENT


# ==================== compare ====================


def _subsystem_indices(side: str) -> Tuple[int, ...]:
    return tuple(ord(ch) - ord("A") for ch in side)


def parse_cut(text: str, parties: int) -> Bipartition:
    """'A|BC' → Bipartition((0,), (1, 2))"""
    if text.count("|") != 1:
        raise BadCut(f"二分写法应为 'A|BC'，实际为 '{text}'")
    left, right = (side.strip().upper() for side in text.split("|"))
    cut = Bipartition(_subsystem_indices(left), _subsystem_indices(right))
    if any(i < 0 or i >= parties for i in cut.left + cut.right):
        raise BadCut(f"二分 '{text}' 含不存在的子系统")
    return cut


def _compare_multipartite(a: StateFile, b: StateFile, args, tols) -> int:
    if a.multipartite is None or b.multipartite is None:
        raise BadDimension("多体态只能与多体态比较")
    cuts = [parse_cut(c, a.multipartite.parties) for c in args.cut] if args.cut else None
    staged = staged_equivalence(a.multipartite, b.multipartite, cuts, tols, jobs=args.jobs)
    _emit(dump_json(staged.to_report()), args.output)
    return {
        StagedOutcome.EQUIVALENT_PER_STAGES: EXIT_EQUIVALENT,
        StagedOutcome.INEQUIVALENT: EXIT_INEQUIVALENT,
        StagedOutcome.INCONCLUSIVE: EXIT_OUT_OF_CLASS,
    }[staged.overall]


def cmd_compare(args) -> int:
    tols = _tolerances(args)
    a, b = read_state(args.a, tols), read_state(args.b, tols)
    if a.multipartite is not None or b.multipartite is not None:
        return _compare_multipartite(a, b, args, tols)

    W = read_local_pair(args.w_conj, tols) if args.w_conj else None
    verifier = EquivalenceVerifier(tols, SigmaDomain(args.sigma_domain), args.allow_large)
    result = verifier.decide(
        a.rho, b.rho, StateClass(args.state_class), W, (a.ensemble, b.ensemble)
    )
    _emit(dump_json(result.to_report()), args.output)

    if args.witness and result.witness is not None:
        pair = pair_to_payload(result.witness)
        witness = WitnessPayload(U=pair.U, V=pair.V, residual=round_sig(result.residual))
        _emit(dump_json(witness), args.witness)
    elif args.witness:
        logger.warning("⚠️ 未判定等价，不写见证文件")
    return result.verdict.exit_code


# ==================== gen / fixture ====================


def cmd_gen(args) -> int:
    tols = _tolerances(args)
    spec = RandomSpecModel.from_cli(args.spec)
    state = generate_state(spec, tols)
    label = f"gen {args.spec}"
    _emit(dump_json(state_to_payload(state.rho, state.ensemble, label)), args.output)
    return EXIT_EQUIVALENT


def parse_params(text: str) -> Tuple[Tuple[complex, complex, complex], Tuple[complex, complex, complex]]:
    """'a1,b1,d1;a1,b1,d1' → 两组 (a₁, b₁, d₁)，复数可写作 0.1+0.2j 或 0.1+0.2i"""
    groups = [g for g in text.split(";") if g.strip()]
    if len(groups) != 2:
        raise ValueError(f"--params 需要两组参数，以 ';' 分隔: '{text}'")
    parsed = []
    for group in groups:
        values = [complex(v.strip().replace("i", "j")) for v in group.split(",")]
        if len(values) != 3:
            raise ValueError(f"每组需要 a1,b1,d1 三个数: '{group}'")
        parsed.append(tuple(values))
    return parsed[0], parsed[1]


def cmd_fixture(args) -> int:
    tols = _tolerances(args)
    if args.kind == "werner":
        fixture = werner_fixture(args.p, tols)
        label = f"werner p={args.p}"
    elif args.params:
        first, second = parse_params(args.params)
        fixture = d_computable_fixture(first, second, args.mu, tols)
        label = f"dcomp params={args.params} mu={args.mu}"
    else:
        fixture = random_d_computable_fixture(args.mu, args.seed, tols)
        label = f"dcomp seed={args.seed} mu={args.mu}"
    _emit(dump_json(state_to_payload(fixture.rho, fixture.ensemble, label)), args.output)
    if fixture.W is not None and args.w_output:
        _emit(dump_json(pair_to_payload(fixture.W)), args.w_output)
    return EXIT_EQUIVALENT


# ==================== suite ====================


def cmd_suite(args) -> int:
    suite_cfg = get_settings().suite
    run_config = RunConfig(
        cases=suite_cfg.cases if args.cases is None else args.cases,
        seed=suite_cfg.seed if args.seed is None else args.seed,
        jobs=suite_cfg.jobs if args.jobs is None else args.jobs,
        inject_fault=args.inject_fault,
        suites=args.suite or None,
        show_progress=not args.no_progress,
    )
    pipeline = PropertySuitePipeline(run_config, _tolerances(args))
    results = pipeline.run()
    sys.stdout.write(pipeline.summary_tsv(results))
    return EXIT_EQUIVALENT if pipeline.all_passed(results) else EXIT_INEQUIVALENT


# ==================== 解析 ====================


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lu-equiv", description="二体混合态局部幺正等价判定")
    parser.add_argument("--tol", type=float, default=None, help="数值相等容差 τ_eq（覆盖 LU_EQUIV_TOL）")
    parser.add_argument("--log-level", default=None, help="日志级别（覆盖 LOG_LEVEL）")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_class(p, default: str):
        p.add_argument(
            "--class", dest="state_class", choices=["f", "g", "auto"], default=default, help="判定器选择"
        )

    def add_sigma(p):
        p.add_argument(
            "--sigma-domain", choices=[d.value for d in SigmaDomain], default=SigmaDomain.MATCHED.value,
            help="Σ 取法：默认 matched 用于判定；open 给出 Werner p=1/2 的 12 项表",
        )
        p.add_argument("--allow-large", action="store_true", help="放开 Σ 枚举规模上限")

    p = sub.add_parser("invariants", help="输出不变量集合")
    p.add_argument("state")
    add_class(p, "auto")
    add_sigma(p)
    p.add_argument("-o", "--output", help="输出文件（默认 stdout）")
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("compare", help="判定两个态是否局部幺正等价")
    p.add_argument("a")
    p.add_argument("b")
    add_class(p, "auto")
    add_sigma(p)
    p.add_argument("--witness", help="等价时写出见证 (U, V)")
    p.add_argument("--w-conj", help="G_W 类的 W = (W_U, W_V) 文件")
    p.add_argument("--cut", action="append", help="多体态的二分，如 'A|BC'，可重复")
    p.add_argument("--jobs", type=int, default=None, help="多体阶段并行线程数")
    p.add_argument("-o", "--output", help="报告输出文件（默认 stdout）")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen", help="生成随机态")
    p.add_argument("--spec", default="", help="如 n=3,rank=2,seed=7,class=F")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fixture", help="生成样例态")
    p.add_argument("kind", choices=["werner", "dcomp"])
    p.add_argument("--p", type=float, default=0.5, help="Werner 参数")
    p.add_argument("--params", help="d-可计算参数 'a1,b1,d1;a1,b1,d1'")
    p.add_argument("--mu", type=float, default=0.7, help="d-可计算态的权重 μ")
    p.add_argument("--seed", type=int, default=0, help="随机 d-可计算参数的种子")
    p.add_argument("-o", "--output")
    p.add_argument("--w-output", help="写出 W = T⊗I₄")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("suite", help="运行性质测试套件")
    p.add_argument("--cases", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--suite", action="append", help="只运行指定套件，可重复")
    p.add_argument("--inject-fault", action="store_true", help="比较前翻转一个 I 值（自检）")
    p.add_argument("--no-progress", action="store_true", help="不显示进度条")
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.func(args)
    except (LUEquivalenceError, ValueError, OSError) as e:
        sys.stderr.write(f"错误 ({type(e).__name__}): {e}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
