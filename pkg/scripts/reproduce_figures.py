#!/usr/bin/env python3
"""
Figure Reproduction Script for ec3lab
Runs every reference numeric scenario on the built-in 4-bit instance and
writes CSV traces, manifests and a JSON summary
"""

import sys
import math
import json
import time
import logging
import argparse
from typing import Any, Callable, Dict, List, Optional
from pathlib import Path

import pandas as pd

# Setup logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from ec3lab import __version__
from ec3lab.cli import RunManifest
from ec3lab.config import get_config_manager
from ec3lab.errors import Ec3LabError
from ec3lab.evolve import (
    CSV_FLOAT_FORMAT,
    FidelityTrace,
    ScheduleConfig,
    default_steps,
    parse_rtf_rule,
    propagate,
    rtf_run,
    rtf_seed_average,
    scale_check,
    threshold_sweep,
)
from ec3lab.hamiltonian import Ec3Hamiltonian
from ec3lab.msgates import verify_ms_identity
from ec3lab.problem import REFERENCE_INSTANCE, to_document
from ec3lab.signals import Cos2Signal, PulseTrain, Sin2Signal, ZeroSignal

SCENARIOS = ['reference', 'pulse-t40', 'pulse-t20', 'oscillating', 'rtf', 'runtime', 'scaling', 'ms-identity']

# Rows kept per trace CSV
TRACE_ROWS = 400


class FigureReproductionManager:
    """Runs the scenarios and keeps their outputs together"""

    def __init__(self, out_dir: Path, jobs: int = 1, seeds: int = 10, steps_per_unit: Optional[int] = None):
        self.out_dir = out_dir
        self.jobs = jobs
        self.seeds = seeds
        self.steps_per_unit = steps_per_unit
        self.inst = REFERENCE_INSTANCE
        self.model = Ec3Hamiltonian(self.inst)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def _write(self, name: str, frame: pd.DataFrame, parameters: Dict[str, Any],
               results: Dict[str, Any], started: float) -> Path:
        path = self.out_dir / name
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
        RunManifest(
            command=f"reproduce:{name}",
            parameters=parameters,
            instance={"document": to_document(self.inst)},
            numerics=get_config_manager().as_dict()["numerics"],
            results=results,
            wall_time_seconds=time.perf_counter() - started,
        ).write_next_to(path)
        logger.info(f"   Wrote {path}")
        return path

    def _trace(self, name: str, total_time: float, signal=None) -> FidelityTrace:
        started = time.perf_counter()
        signal = signal or ZeroSignal()
        steps = default_steps(total_time, signal, self.steps_per_unit)
        cfg = ScheduleConfig(total_time, steps, signal=signal, record_every=max(1, steps // TRACE_ROWS))
        trace = propagate(self.inst, cfg, model=self.model)
        self._write(
            name, trace.to_frame(),
            {"T": total_time, "steps": steps, "signal": signal.to_syntax()},
            {"final_fidelity": trace.final_fidelity},
            started,
        )
        return trace

    def reference(self) -> Dict[str, Any]:
        """Slow adiabatic run without a signal"""
        trace = self._trace("reference_T160.csv", 160.0)
        return {"T": 160.0, "final_fidelity": trace.final_fidelity}

    def _pulse_family(self, total_time: float, interval: float, strengths: List[float]) -> Dict[str, Any]:
        finals = {}
        for s in strengths:
            pulse = PulseTrain(strength_value=s, interval=interval, duty=0.5)
            trace = self._trace(f"pulse_T{total_time:g}_delta{interval:g}_s{s:g}.csv", total_time, pulse)
            finals[f"{s:g}"] = trace.final_fidelity
        values = [finals[f"{s:g}"] for s in strengths]
        return {
            "T": total_time,
            "delta": interval,
            "final_fidelity": finals,
            "non_decreasing": all(b >= a for a, b in zip(values, values[1:])),
        }

    def pulse_t40(self) -> Dict[str, Any]:
        return self._pulse_family(40.0, 0.08, [0.0, 0.5, 1.0, 2.0])

    def pulse_t20(self) -> Dict[str, Any]:
        return self._pulse_family(20.0, 0.04, [0.0, 1.0, 2.0, 5.0])

    def oscillating(self) -> Dict[str, Any]:
        """2cos^2(10t) and 2sin^2(10t) against the bare run at T=40"""
        baseline = self._trace("zero_T40.csv", 40.0).final_fidelity
        cos2 = self._trace("cos2_T40.csv", 40.0, Cos2Signal(amplitude=2.0, frequency=10.0)).final_fidelity
        sin2 = self._trace("sin2_T40.csv", 40.0, Sin2Signal(amplitude=2.0, frequency=10.0)).final_fidelity
        return {"zero": baseline, "cos2": cos2, "sin2": sin2}

    def rtf(self, total_time: float = 20.0, k: int = 200) -> Dict[str, Any]:
        """Fixed slices against random slices in [2tau, 3tau] and [4tau, 8tau]"""
        started = time.perf_counter()
        rules = {"fixed": "fixed", "uniform_2_3": "uniform:lo=2,hi=3", "uniform_4_8": "uniform:lo=4,hi=8"}
        seeds = list(range(self.seeds))
        summary = {}
        rows = []
        for label, rule in rules.items():
            trace = rtf_run(self.inst, parse_rtf_rule(rule, total_time, k, seed=0), model=self.model)
            self._write(
                f"rtf_{label}.csv", trace.to_frame(),
                {"T": total_time, "k": k, "rule": rule, "seed": 0},
                {"final_fidelity": trace.final_fidelity},
                started,
            )
            if rule == "fixed":
                summary[label] = {"mean": trace.final_fidelity, "stderr": 0.0}
                rows.append((label, trace.final_fidelity, 0.0, 1))
                continue
            average = rtf_seed_average(self.inst, total_time, k, rule, seeds, jobs=self.jobs)
            summary[label] = {"mean": average.mean, "stderr": average.stderr}
            rows.append((label, average.mean, average.stderr, len(seeds)))

        self._write(
            "rtf_seed_average.csv",
            pd.DataFrame(rows, columns=["rule", "mean_final_fidelity", "stderr", "seeds"]),
            {"T": total_time, "k": k, "seeds": seeds},
            summary,
            started,
        )
        return summary

    def runtime(self, threshold: float = 0.999) -> Dict[str, Any]:
        """Shortest runtime reaching the threshold for pulse strengths 0, 1, 5, 15, 30"""
        started = time.perf_counter()
        family = PulseTrain(strength_value=0.0, interval=0.04, duty=0.5)
        strengths = [0.0, 1.0, 5.0, 15.0, 30.0]
        results = threshold_sweep(
            self.inst, family, strengths, threshold, (1.0, 400.0),
            steps_per_unit=self.steps_per_unit, jobs=self.jobs,
        )
        frame = pd.DataFrame.from_records([
            {
                "s": r.strength,
                "T_star": r.t_star if r.found else float("nan"),
                "found": r.found,
                "best_T": r.best_time,
                "best_fidelity": r.best_fidelity,
                "monotone": r.monotone,
            }
            for r in results
        ])
        table = {f"{r.strength:g}": (r.t_star if r.found else None) for r in results}
        self._write("runtime_threshold.csv", frame, {"threshold": threshold, "family": family.to_syntax()},
                    {"T_star": table}, started)
        return {"threshold": threshold, "T_star": table}

    def scaling(self, T0: float = 160.0) -> Dict[str, Any]:
        """J-scaled runs against the T0 reference; the scaled runs use twice the steps"""
        steps = default_steps(T0, steps_per_unit=self.steps_per_unit)
        sample_every = max(1, steps // TRACE_ROWS)
        steps = sample_every * math.ceil(steps / sample_every)
        out = {}
        for J in (2.0, 4.0, 16.0):
            result = scale_check(self.inst, J, T0, steps, sample_every=sample_every, model=self.model)
            out[f"{J:g}"] = {
                "max_deviation": result.max_deviation,
                "scaled_final_fidelity": result.scaled_fidelity,
            }
        return {"T0": T0, "steps": steps, "J": out}

    def ms_identity(self) -> Dict[str, Any]:
        started = time.perf_counter()
        rows = []
        for n in range(1, 6):
            for phi in (0.3, math.pi / 2, 1.7):
                report = verify_ms_identity(phi, n)
                rows.append((n, phi, report.global_dev, report.subspace_dev, report.passing_embedding or "none"))
        frame = pd.DataFrame(rows, columns=["n", "phi", "global_dev", "subspace_dev", "passing"])
        all_pass = bool((frame["passing"] != "none").all())
        self._write("ms_identity.csv", frame, {"n": "1-5"}, {"all_pass": all_pass}, started)
        return {"all_pass": all_pass}

    def run(self, scenarios: List[str]) -> Dict[str, Any]:
        handlers: Dict[str, Callable[[], Dict[str, Any]]] = {
            'reference': self.reference,
            'pulse-t40': self.pulse_t40,
            'pulse-t20': self.pulse_t20,
            'oscillating': self.oscillating,
            'rtf': self.rtf,
            'runtime': self.runtime,
            'scaling': self.scaling,
            'ms-identity': self.ms_identity,
        }
        summary: Dict[str, Any] = {"tool_version": __version__, "scenarios": {}}
        for name in scenarios:
            logger.info(f"Scenario {name}")
            started = time.perf_counter()
            try:
                result = handlers[name]()
                result["status"] = "completed"
            except Ec3LabError as e:
                logger.error(f"Scenario {name} failed: {e}")
                result = {"status": "failed", "error": str(e)}
            result["wall_time_seconds"] = time.perf_counter() - started
            summary["scenarios"][name] = result
        return summary


def main():
    """Reproduce the reference scenarios"""

    parser = argparse.ArgumentParser(
        description='Reproduce the fast-signal EC3 reference scenarios',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python reproduce_figures.py                                  # Every scenario
  python reproduce_figures.py --only pulse-t40 oscillating     # A subset
  python reproduce_figures.py --seeds 20 --jobs 8              # Wider RTF averages
        """
    )

    parser.add_argument(
        '--out-dir',
        default='figures',
        help='Directory for CSV traces, manifests and the summary'
    )

    parser.add_argument(
        '--only',
        nargs='+',
        choices=SCENARIOS,
        default=SCENARIOS,
        help='Scenarios to run'
    )

    parser.add_argument(
        '--seeds',
        type=int,
        default=10,
        help='Seeds per randomized Trotter rule'
    )

    parser.add_argument(
        '--jobs',
        type=int,
        default=get_config_manager().get_runtime_config().jobs,
        help='Worker processes'
    )

    parser.add_argument(
        '--steps-per-unit',
        type=int,
        help='Integration steps per unit time (default from EC3LAB_STEPS_PER_UNIT)'
    )

    parser.add_argument(
        '--quiet',
        action='store_true',
        help='Reduce logging output'
    )

    args = parser.parse_args()

    if args.quiet:
        logging.getLogger().setLevel(logging.WARNING)

    manager = FigureReproductionManager(Path(args.out_dir), args.jobs, args.seeds, args.steps_per_unit)
    summary = manager.run(args.only)

    summary_path = Path(args.out_dir) / 'summary.json'
    summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    logger.info(f"Summary written to {summary_path}")

    failed = [name for name, result in summary["scenarios"].items() if result["status"] != "completed"]
    if failed:
        logger.error(f"Failed scenarios: {', '.join(failed)}")
        sys.exit(1)


if __name__ == "__main__":
    main()
