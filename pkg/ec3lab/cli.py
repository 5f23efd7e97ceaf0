#!/usr/bin/env python3
"""
ec3lab command-line interface
Solves instances, runs dressed and randomized-Trotter evolutions, sweeps and verifications
"""

import re
import sys
import math
import time
import logging
import argparse
from typing import Any, Callable, Dict, List, Optional, Sequence
from pathlib import Path

import pandas as pd
from pydantic import BaseModel, Field

from . import __version__
from .config import LogFormat, LogLevel, LoggingConfig, configure_logging, get_config_manager
from .errors import EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK, Ec3LabError, UsageError, classify_error
from .evolve import (
    CSV_FLOAT_FORMAT,
    Backend,
    ScheduleConfig,
    converge_steps,
    default_steps,
    parse_rtf_rule,
    propagate,
    rtf_run,
    rtf_seed_average,
    scale_check,
    strength_sweep,
    threshold_sweep,
)
from .hamiltonian import Ec3Hamiltonian, HbWeighting, build_hb, hp_to_pauli, term_table
from .msgates import (
    IDENTITY_TOLERANCE,
    SLICE_TOLERANCE,
    compile_slice,
    distance_up_to_phase,
    slice_operator,
    verify_ms_identity,
)
from .problem import Ec3Instance, brute_force_solutions, load_instance, sorted_assignments, to_document
from .signals import parse_signal

logger = logging.getLogger(__name__)

SCALE_TOLERANCE = 1e-6


class RunManifest(BaseModel):
    """Everything needed to regenerate one output file"""
    command: str
    tool_version: str = __version__
    parameters: Dict[str, Any] = Field(default_factory=dict)
    instance: Optional[Dict[str, Any]] = None
    numerics: Dict[str, Any] = Field(default_factory=dict)
    results: Dict[str, Any] = Field(default_factory=dict)
    wall_time_seconds: float = 0.0

    def write_next_to(self, output: Path) -> Path:
        path = output.with_name(output.name + ".manifest.json")
        path.write_text(self.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return path


def _instance_of(args: argparse.Namespace) -> Ec3Instance:
    source = args.instance_opt or args.instance
    if not source:
        raise UsageError("no instance given; pass a path or a built-in such as @paper")
    return load_instance(source)


def _output_path(args: argparse.Namespace, default_name: str) -> Path:
    if args.out:
        path = Path(args.out)
    else:
        path = Path(get_config_manager().get_runtime_config().output_dir) / default_name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _manifest(args: argparse.Namespace, inst: Optional[Ec3Instance], started: float, **results) -> RunManifest:
    skip = {"handler", "log_level", "log_format"}
    parameters = {
        key: (value.value if hasattr(value, "value") else value)
        for key, value in vars(args).items()
        if key not in skip
    }
    return RunManifest(
        command=args.command,
        parameters=parameters,
        instance=None if inst is None else {"document": to_document(inst)},
        numerics=get_config_manager().as_dict()["numerics"],
        results=results,
        wall_time_seconds=time.perf_counter() - started,
    )


def _write_table(frame: pd.DataFrame, path: Path, manifest: RunManifest) -> None:
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    manifest.write_next_to(path)
    logger.info(f"Wrote {len(frame)} rows to {path}")


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from e


def _range_pair(text: str) -> tuple:
    values = _float_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected 'low,high', got '{text}'")
    return tuple(values)


def _int_range(text: str) -> List[int]:
    """'1-5' or '1,3,4'"""
    match = re.fullmatch(r"\s*(\d+)\s*-\s*(\d+)\s*", text)
    if match:
        return list(range(int(match.group(1)), int(match.group(2)) + 1))
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected 'a-b' or a comma-separated list, got '{text}'") from e


_ANGLE = re.compile(r"^(?P<coef>[-+]?\d*\.?\d*)\*?pi(?:/(?P<den>\d+(?:\.\d*)?))?$")


def _angle(text: str) -> float:
    """A float, or a multiple of pi such as 'pi/2' or '-0.5pi'"""
    text = text.strip()
    match = _ANGLE.match(text)
    if match:
        coef = match.group("coef")
        coef = -1.0 if coef == "-" else float(coef) if coef not in ("", "+") else 1.0
        return coef * math.pi / float(match.group("den") or 1.0)
    try:
        return float(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"'{text}' is not an angle") from e


def _angle_list(text: str) -> List[float]:
    return [_angle(part) for part in text.split(",") if part.strip()]


def cmd_solve(args: argparse.Namespace) -> int:
    inst = _instance_of(args)
    energy, winners = brute_force_solutions(inst, jobs=args.jobs)
    print(f"energy={energy}")
    for assignment in sorted_assignments(winners):
        print(assignment)
    if energy == 0:
        logger.info(f"Satisfiable: {len(winners)} solution(s)")
        return EXIT_OK
    logger.info(f"Unsatisfiable: best assignments violate {energy} clause(s)")
    return EXIT_NEGATIVE


def cmd_evolve(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    inst = _instance_of(args)
    signal = parse_signal(args.signal)
    steps = args.steps or default_steps(args.T, signal)
    cfg = ScheduleConfig(
        total_time=args.T,
        steps=steps,
        signal=signal,
        backend=Backend(args.backend),
        record_every=args.record_every,
        strength=args.strength,
    )
    weighting = HbWeighting(args.hb_weights)
    logger.info(f"Evolving T={args.T:g} steps={steps} signal={signal.to_syntax()} backend={args.backend}")
    converge = args.steps is None if args.converge is None else args.converge
    if converge:
        trace, cfg = converge_steps(inst, cfg, weighting=weighting)
    else:
        trace = propagate(inst, cfg, weighting=weighting)

    out = _output_path(args, "evolve.csv")
    manifest = _manifest(
        args, inst, started,
        final_fidelity=trace.final_fidelity, steps_used=cfg.steps, signal=signal.to_syntax(),
    )
    _write_table(trace.to_frame(), out, manifest)
    print(f"final_fidelity={trace.final_fidelity:.12g}")
    return EXIT_OK


def cmd_rtf(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    inst = _instance_of(args)
    schedule = parse_rtf_rule(args.rule, args.T, args.k, args.seed)
    trace = rtf_run(inst, schedule)
    results: Dict[str, Any] = {"final_fidelity": trace.final_fidelity, "rule": schedule.rule}
    print(f"final_fidelity={trace.final_fidelity:.12g}")

    if args.seeds:
        seeds = list(range(args.seed, args.seed + args.seeds))
        average = rtf_seed_average(inst, args.T, args.k, args.rule, seeds, jobs=args.jobs)
        results.update(seed_mean=average.mean, seed_stderr=average.stderr, seed_values=list(average.values))
        print(f"seed_mean={average.mean:.12g} seed_stderr={average.stderr:.3g} seeds={len(seeds)}")

    out = _output_path(args, "rtf.csv")
    _write_table(trace.to_frame(), out, _manifest(args, inst, started, **results))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    inst = _instance_of(args)
    family = parse_signal(args.family)
    backend = Backend(args.backend)
    out = _output_path(args, "sweep.csv")

    if args.threshold is None:
        if args.T is None:
            raise UsageError("sweep needs --T (fixed runtime) or --threshold (runtime search)")
        rows = strength_sweep(inst, family, args.strengths, args.T, backend=backend, jobs=args.jobs)
        frame = pd.DataFrame([(r.strength, r.final_fidelity) for r in rows], columns=["s", "final_fidelity"])
        _write_table(frame, out, _manifest(args, inst, started))
        for row in rows:
            print(f"s={row.strength:g} final_fidelity={row.final_fidelity:.12g}")
        return EXIT_OK

    records = []
    results = threshold_sweep(
        inst, family, args.strengths, args.threshold, args.t_range, backend=backend, jobs=args.jobs,
    )
    for result in results:
        s = result.strength
        records.append({
            "s": s,
            "T_star": result.t_star if result.found else float("nan"),
            "found": result.found,
            "best_T": result.best_time,
            "best_fidelity": result.best_fidelity,
            "monotone": result.monotone,
        })
        status = f"T_star={result.t_star:.6g}" if result.found else (
            f"unreachable best_T={result.best_time:.6g} best_fidelity={result.best_fidelity:.6g}"
        )
        print(f"s={s:g} {status}")

    frame = pd.DataFrame.from_records(records)
    _write_table(frame, out, _manifest(args, inst, started))
    return EXIT_OK if all(r["found"] for r in records) else EXIT_NEGATIVE


def cmd_scale_check(args: argparse.Namespace) -> int:
    inst = _instance_of(args)
    steps = args.steps or default_steps(args.T0)
    result = scale_check(
        inst, args.J, args.T0, steps, sample_every=args.sample_every, scaled_steps=args.scaled_steps
    )
    print(f"max_deviation={result.max_deviation:.3e}")
    print(f"reference_final_fidelity={result.reference_fidelity:.12g}")
    print(f"scaled_final_fidelity={result.scaled_fidelity:.12g}")
    return EXIT_OK if result.max_deviation <= args.tolerance else EXIT_NEGATIVE


def cmd_ms_verify(args: argparse.Namespace) -> int:
    passed = True
    print("n phi global_dev subspace_dev passing")
    for n in args.n:
        for phi in args.phi:
            report = verify_ms_identity(phi, n)
            passing = report.passing_embedding or "none"
            passed &= report.passing_embedding is not None
            print(f"{n} {phi:.12g} {report.global_dev:.3e} {report.subspace_dev:.3e} {passing}")
    if not passed:
        logger.warning(f"Some MS identities exceed tolerance {IDENTITY_TOLERANCE:g}")
    return EXIT_OK if passed else EXIT_NEGATIVE


def cmd_dump_hamiltonian(args: argparse.Namespace) -> int:
    inst = _instance_of(args)
    print("# H_P")
    for line in term_table(hp_to_pauli(inst)):
        print(line)
    print("# H_B")
    for line in term_table(build_hb(inst, HbWeighting(args.hb_weights))):
        print(line)
    return EXIT_OK


def cmd_compile(args: argparse.Namespace) -> int:
    inst = _instance_of(args)
    model = Ec3Hamiltonian(inst)
    tau_j = args.tau_j if args.tau_j is not None else args.T / args.k
    sequence = compile_slice(inst, args.j, args.k, tau_j, model)
    for line in sequence.listing():
        print(line)
    counts = " ".join(f"{kind}={count}" for kind, count in sequence.counts().items())
    logger.info(f"Slice j={args.j}/{args.k}: {len(sequence)} ops ({counts})")

    if args.verify:
        deviation = distance_up_to_phase(sequence.system_unitary(), slice_operator(model, args.j, args.k, tau_j))
        print(f"# deviation={deviation:.3e}")
        if deviation > SLICE_TOLERANCE:
            return EXIT_NEGATIVE
    return EXIT_OK


def _add_instance(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('instance', nargs='?', help='Instance document path or built-in name (@paper or @reference)')
    parser.add_argument('--instance', dest='instance_opt', help='Same as the positional instance argument')


def build_parser() -> argparse.ArgumentParser:
    runtime = get_config_manager().get_runtime_config()

    parser = argparse.ArgumentParser(
        prog='ec3lab',
        description='Fast-signal adiabatic EC3 laboratory',
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--log-level', choices=[level.value for level in LogLevel], help='Override LOG_LEVEL')
    parser.add_argument('--log-format', choices=[f.value for f in LogFormat], help='Override LOG_FORMAT')
    parser.add_argument('--jobs', type=int, default=runtime.jobs, help='Worker processes for independent runs')
    sub = parser.add_subparsers(dest='command', required=True)

    def command(name: str, handler: Callable[[argparse.Namespace], int], help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p.set_defaults(handler=handler)
        return p

    p = command('solve', cmd_solve, 'Brute-force minimal energy and minimizing assignments')
    _add_instance(p)

    p = command('evolve', cmd_evolve, 'Dressed adiabatic evolution with a fidelity trace')
    _add_instance(p)
    p.add_argument('--T', type=float, required=True, help='Runtime T')
    p.add_argument('--steps', type=int, help='Integration sub-steps (default from steps per unit time)')
    p.add_argument('--signal', default='zero', help='Signal syntax, e.g. pulse:s=2,delta=0.08,duty=0.5')
    p.add_argument('--backend', choices=[b.value for b in Backend], default=Backend.DENSE_MIDPOINT.value)
    p.add_argument('--strength', type=float, default=1.0, help='Overall strength J0 of H0')
    p.add_argument('--record-every', type=int, default=1, help='Record every N-th sub-step')
    p.add_argument('--hb-weights', choices=[w.value for w in HbWeighting], default=HbWeighting.MULTIPLICITY.value)
    p.add_argument(
        '--converge',
        action=argparse.BooleanOptionalAction,
        default=None,
        help='Double steps until the final state settles (default: on unless --steps is given)'
    )
    p.add_argument('--out', help='CSV trace path')

    p = command('rtf', cmd_rtf, 'Randomized Trotter formula run')
    _add_instance(p)
    p.add_argument('--T', type=float, required=True, help='Runtime T = k tau')
    p.add_argument('--k', type=int, required=True, help='Number of slices')
    p.add_argument('--rule', default='fixed', help='fixed | uniform:lo=<f>,hi=<f> | signal:<signal syntax>')
    p.add_argument('--seed', type=int, default=0, help='Seed of the uniform rule')
    p.add_argument('--seeds', type=int, default=0, help='Also average the final fidelity over this many seeds')
    p.add_argument('--out', help='CSV trace path')

    p = command('sweep', cmd_sweep, 'Final fidelity or minimal runtime across signal strengths')
    _add_instance(p)
    p.add_argument('--family', required=True, help='Signal syntax; its strength is replaced by each sweep value')
    p.add_argument('--strengths', type=_float_list, required=True, help='Comma-separated strengths')
    p.add_argument('--T', type=float, help='Fixed runtime mode')
    p.add_argument('--threshold', type=float, help='Runtime-search mode: target final fidelity')
    p.add_argument('--t-range', type=_range_pair, default=(1.0, 400.0), help='Runtime search range low,high')
    p.add_argument('--backend', choices=[b.value for b in Backend], default=Backend.DENSE_MIDPOINT.value)
    p.add_argument('--out', help='CSV table path')

    p = command('scale-check', cmd_scale_check, 'Compare a J-scaled run with the reference run')
    _add_instance(p)
    p.add_argument('--J', type=float, required=True, help='Scaling factor')
    p.add_argument('--T0', type=float, required=True, help='Reference runtime')
    p.add_argument('--steps', type=int, help='Sub-steps of the reference run')
    p.add_argument('--scaled-steps', type=int, help='Sub-steps of the scaled run (default: twice --steps)')
    p.add_argument('--sample-every', type=int, default=1, help='Compare states every N-th sub-step')
    p.add_argument('--tolerance', type=float, default=SCALE_TOLERANCE)

    p = command('ms-verify', cmd_ms_verify, 'Check the two-MS-gate X-string identity')
    p.add_argument('--n', type=_int_range, default=_int_range('1-5'), help="Qubit counts, '1-5' or '2,4'")
    p.add_argument('--phi', type=_angle_list, default=_angle_list('0.3,pi/2,1.7'), help='Angles')

    p = command('dump-hamiltonian', cmd_dump_hamiltonian, 'Print the Pauli term tables of H_P and H_B')
    _add_instance(p)
    p.add_argument('--hb-weights', choices=[w.value for w in HbWeighting], default=HbWeighting.MULTIPLICITY.value)

    p = command('compile', cmd_compile, 'Print the MS gate listing of one Trotter slice')
    _add_instance(p)
    p.add_argument('--j', type=int, required=True, help='Slice index')
    p.add_argument('--k', type=int, required=True, help='Number of slices')
    p.add_argument('--tau-j', type=float, help='Slice duration (default T/k)')
    p.add_argument('--T', type=float, default=1.0, help='Runtime used when --tau-j is absent')
    p.add_argument('--verify', action='store_true', help='Report the deviation from the dense slice operator')

    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    config = get_config_manager().get_logging_config()
    configure_logging(LoggingConfig(
        level=LogLevel(args.log_level) if args.log_level else config.level,
        format=LogFormat(args.log_format) if args.log_format else config.format,
    ))


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        parser = build_parser()
    except Ec3LabError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR

    args = parser.parse_args(argv)
    _configure_logging(args)

    try:
        return args.handler(args)
    except (Ec3LabError, OSError, ValueError) as e:
        category = classify_error(e)
        logger.error(f"{args.command} failed ({category.value}): {e}")
        return EXIT_ERROR


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
