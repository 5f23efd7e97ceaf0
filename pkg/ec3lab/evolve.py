"""
Time evolution under the dressed Hamiltonian H(t) = J (1 + c(t)/J0) H0(t/T)

Propagation backends, fidelity against instantaneous ground states, the
randomized Trotter formula, the time-scaling check and runtime search.
"""

import math
import time
import logging
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd
import scipy.linalg

from .config import get_numerics
from .errors import DomainError, NormDriftError, ScheduleValidationError, SignalSyntaxError
from .hamiltonian import Ec3Hamiltonian, GroundSpace, HbWeighting
from .parallel import parallel_map
from .problem import Ec3Instance
from .signals import RandomHold, SignalSpec, ZeroSignal, dressed_coefficient, parse_signal

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["t_over_T", "fidelity", "coefficient"]
CSV_FLOAT_FORMAT = "%.15g"


class Backend(Enum):
    DENSE_MIDPOINT = "dense_midpoint"
    SPLIT_STRANG = "split_strang"


class TraceRow(NamedTuple):
    t_over_T: float
    fidelity: float
    coefficient: float


def uniform_superposition(n_bits: int) -> np.ndarray:
    """|+>^n, the ground state of H_B"""
    dim = 1 << n_bits
    return np.full(dim, 1.0 / math.sqrt(dim), dtype=complex)


def fidelity(state: np.ndarray, gs: GroundSpace) -> float:
    """Norm of the projection of state onto the ground space; |<psi|psi0>| when non-degenerate"""
    if state.shape[-1] != gs.basis.shape[1]:
        raise DomainError(
            f"state dimension {state.shape[-1]} does not match ground space {gs.basis.shape[1]}"
        )
    return float(np.linalg.norm(gs.basis.conj() @ state))


def state_distance(a: np.ndarray, b: np.ndarray, up_to_phase: bool = False) -> float:
    """Euclidean distance, optionally minimized over a global phase"""
    if up_to_phase:
        overlap = np.vdot(b, a)
        if abs(overlap) > 0.0:
            b = b * (overlap / abs(overlap))
    return float(np.linalg.norm(a - b))


def _check_norm(state: np.ndarray, tolerance: float, step: Optional[int] = None) -> None:
    norm = float(np.linalg.norm(state))
    if abs(norm - 1.0) > tolerance:
        raise NormDriftError(norm, tolerance, step)


def apply_hb_exponential(
    state: np.ndarray, weights: np.ndarray, identity: float, angle: float
) -> np.ndarray:
    """
    exp(-i angle H_B) |state>, with H_B = identity - sum_q (w_q / 2) X_q.

    Applied as commuting single-qubit x rotations plus a global phase.
    """
    n_bits = len(weights)
    out = state * np.exp(-1j * angle * identity)
    for pos, w in enumerate(weights):
        if w == 0.0:
            continue
        theta = 0.5 * angle * w
        view = out.reshape(1 << pos, 2, 1 << (n_bits - pos - 1))
        out = (math.cos(theta) * view + 1j * math.sin(theta) * view[:, ::-1, :]).reshape(-1)
    return out


def apply_hp_exponential(state: np.ndarray, hp_entries: np.ndarray, angle: float) -> np.ndarray:
    """exp(-i angle H_P) |state> as a diagonal phase"""
    return np.exp(-1j * angle * hp_entries) * state


@dataclass(frozen=True)
class ScheduleConfig:
    """Runtime, integration grid, signal and backend of one propagation"""
    total_time: float
    steps: int
    signal: SignalSpec = field(default_factory=ZeroSignal)
    backend: Backend = Backend.DENSE_MIDPOINT
    record_every: int = 1
    strength: float = 1.0  # J0
    keep_states: bool = False

    @property
    def step_size(self) -> float:
        return self.total_time / self.steps

    def validate(self) -> None:
        problems = []
        if not self.total_time > 0.0 or not math.isfinite(self.total_time):
            problems.append(f"total time must be positive and finite, got {self.total_time}")
        if self.steps < 1:
            problems.append(f"steps must be a positive integer, got {self.steps}")
        if self.record_every < 1:
            problems.append(f"record_every must be a positive integer, got {self.record_every}")
        if not self.strength > 0.0:
            problems.append(f"strength must be positive, got {self.strength}")
        if problems:
            raise ScheduleValidationError(problems)

        h = self.step_size
        slack = 1.0 + 1e-12
        interval = self.signal.hold_interval
        if interval is not None and h > slack * interval / 4.0:
            problems.append(
                f"sub-step {h:.6g} exceeds Delta/4 = {interval / 4.0:.6g} for a piecewise signal"
            )
        period = self.signal.period
        if period is not None and h > slack * period / 20.0:
            problems.append(
                f"sub-step {h:.6g} exceeds period/20 = {period / 20.0:.6g} for an oscillating signal"
            )
        if problems:
            raise ScheduleValidationError(problems)


def default_steps(
    total_time: float,
    signal: Optional[SignalSpec] = None,
    steps_per_unit: Optional[int] = None,
) -> int:
    """Sub-step count: steps_per_unit per unit time, raised to meet the signal's grid rules"""
    steps_per_unit = get_numerics().steps_per_unit_time if steps_per_unit is None else steps_per_unit
    steps = max(1, math.ceil(steps_per_unit * total_time - 1e-9))
    if signal is not None:
        if signal.hold_interval is not None:
            steps = max(steps, math.ceil(4.0 * total_time / signal.hold_interval - 1e-9))
        if signal.period is not None:
            steps = max(steps, math.ceil(20.0 * total_time / signal.period - 1e-9))
    return steps


@dataclass
class FidelityTrace:
    """Recorded (t/T, F, 1 + c/J0) rows of one run and its final state"""
    rows: List[TraceRow]
    final_state: np.ndarray
    states: Optional[np.ndarray] = None
    wall_time: float = 0.0

    @property
    def final_fidelity(self) -> float:
        return self.rows[-1].fidelity

    @property
    def times(self) -> np.ndarray:
        return np.array([row.t_over_T for row in self.rows])

    @property
    def fidelities(self) -> np.ndarray:
        return np.array([row.fidelity for row in self.rows])

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([row.coefficient for row in self.rows])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=TRACE_COLUMNS)

    def to_csv(self, path: Path) -> None:
        self.to_frame().to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)


class DressedPropagator:
    """Advances a state across one sub-step, splitting it at signal discontinuities"""

    def __init__(self, model: Ec3Hamiltonian, cfg: ScheduleConfig):
        self.model = model
        self.cfg = cfg
        self._step = {
            Backend.DENSE_MIDPOINT: self._dense_piece,
            Backend.SPLIT_STRANG: self._split_piece,
        }[Backend(cfg.backend)]

    def advance(self, state: np.ndarray, start: float, stop: float) -> np.ndarray:
        edges = [start] + self.cfg.signal.breakpoints(start, stop) + [stop]
        for a, b in zip(edges[:-1], edges[1:]):
            state = self._step(state, a, b)
        return state

    def _frozen(self, a: float, b: float) -> Tuple[float, float]:
        midpoint = 0.5 * (a + b)
        s = min(max(midpoint / self.cfg.total_time, 0.0), 1.0)
        coefficient = self.cfg.strength * dressed_coefficient(self.cfg.signal, midpoint)
        return s, coefficient

    def _dense_piece(self, state: np.ndarray, a: float, b: float) -> np.ndarray:
        s, coefficient = self._frozen(a, b)
        eigenvalues, eigenvectors = scipy.linalg.eigh(self.model.h0(s), check_finite=False)
        phases = np.exp(-1j * coefficient * (b - a) * eigenvalues)
        return eigenvectors @ (phases * (eigenvectors.conj().T @ state))

    def _split_piece(self, state: np.ndarray, a: float, b: float) -> np.ndarray:
        s, coefficient = self._frozen(a, b)
        h = b - a
        half_b = 0.5 * h * coefficient * (1.0 - s)
        weights, identity = self.model.hb_weights, self.model.hb_identity
        state = apply_hb_exponential(state, weights, identity, half_b)
        state = apply_hp_exponential(state, self.model.hp.entries, h * coefficient * s)
        return apply_hb_exponential(state, weights, identity, half_b)


def _initial_state(model: Ec3Hamiltonian, initial: Optional[np.ndarray], tolerance: float) -> np.ndarray:
    if initial is None:
        return uniform_superposition(model.n_bits)
    state = np.asarray(initial, dtype=complex).copy()
    if state.shape != (model.dimension,):
        raise DomainError(f"initial state has shape {state.shape}, expected ({model.dimension},)")
    _check_norm(state, tolerance)
    return state


def propagate(
    inst: Ec3Instance,
    cfg: ScheduleConfig,
    initial: Optional[np.ndarray] = None,
    model: Optional[Ec3Hamiltonian] = None,
    weighting: HbWeighting = HbWeighting.MULTIPLICITY,
) -> FidelityTrace:
    """
    Integrate the dressed Schrodinger equation over [0, T].

    Each sub-step freezes H at its midpoint. Fidelity is measured against
    the ground space of H0(t/T): the prefactor J (1 + c/J0) is a
    non-negative scalar, so H(t) and H0(t/T) share eigenvectors; where the
    prefactor vanishes the H0 eigenbasis is used by convention.
    """
    cfg.validate()
    numerics = get_numerics()
    model = model or Ec3Hamiltonian(inst, weighting)
    state = _initial_state(model, initial, numerics.norm_tol)
    stepper = DressedPropagator(model, cfg)

    started = time.perf_counter()
    total, h = cfg.total_time, cfg.step_size

    def record(t: float, s: float) -> None:
        gs = model.ground_space(s)
        rows.append(TraceRow(s, fidelity(state, gs), dressed_coefficient(cfg.signal, t)))
        if cfg.keep_states:
            kept.append(state.copy())

    rows: List[TraceRow] = []
    kept: List[np.ndarray] = []
    record(0.0, 0.0)

    for m in range(1, cfg.steps + 1):
        start = (m - 1) * h
        stop = total if m == cfg.steps else m * h
        state = stepper.advance(state, start, stop)
        if m % cfg.record_every == 0 or m == cfg.steps:
            _check_norm(state, numerics.norm_tol, m)
            record(stop, 1.0 if m == cfg.steps else stop / total)

    trace = FidelityTrace(
        rows=rows,
        final_state=state,
        states=np.array(kept) if cfg.keep_states else None,
        wall_time=time.perf_counter() - started,
    )
    logger.debug(
        f"Propagated T={total:g} steps={cfg.steps} backend={Backend(cfg.backend).value} "
        f"signal={cfg.signal.to_syntax()}: F={trace.final_fidelity:.6f} in {trace.wall_time:.2f}s"
    )
    return trace


def converge_steps(
    inst: Ec3Instance,
    cfg: ScheduleConfig,
    tolerance: float = 1e-6,
    max_doublings: Optional[int] = None,
    weighting: HbWeighting = HbWeighting.MULTIPLICITY,
) -> Tuple[FidelityTrace, ScheduleConfig]:
    """Double steps until successive final states agree within tolerance"""
    max_doublings = get_numerics().max_step_doublings if max_doublings is None else max_doublings
    model = Ec3Hamiltonian(inst, weighting)
    trace = propagate(inst, cfg, model=model)
    for _ in range(max_doublings):
        finer = replace(cfg, steps=2 * cfg.steps, record_every=2 * cfg.record_every)
        finer_trace = propagate(inst, finer, model=model)
        gap = state_distance(finer_trace.final_state, trace.final_state)
        logger.debug(f"Step doubling {cfg.steps} -> {finer.steps}: final-state change {gap:.3e}")
        cfg, trace = finer, finer_trace
        if gap <= tolerance:
            return trace, cfg
    logger.warning(
        f"Final state still changing after {max_doublings} step doublings (steps={cfg.steps})"
    )
    return trace, cfg


@dataclass(frozen=True)
class RtfSchedule:
    """Slice count k, base interval tau (k tau = T) and the k slice durations tau_j"""
    k: int
    tau: float
    intervals: Tuple[float, ...]
    rule: str = "fixed"

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(float(x) for x in self.intervals))
        problems = []
        if self.k < 1:
            problems.append(f"k must be a positive integer, got {self.k}")
        if not self.tau > 0.0:
            problems.append(f"tau must be positive, got {self.tau}")
        if len(self.intervals) != self.k:
            problems.append(f"{len(self.intervals)} intervals given for k={self.k}")
        if any(not x > 0.0 for x in self.intervals):
            problems.append("every slice duration tau_j must be positive")
        if problems:
            raise ScheduleValidationError(problems)

    @property
    def total_time(self) -> float:
        return self.k * self.tau

    @property
    def multipliers(self) -> np.ndarray:
        """tau_j / tau, i.e. 1 + c(j tau)/J0"""
        return np.asarray(self.intervals) / self.tau

    @classmethod
    def fixed(cls, total_time: float, k: int) -> "RtfSchedule":
        tau = total_time / k
        return cls(k=k, tau=tau, intervals=(tau,) * k, rule="fixed")

    @classmethod
    def from_signal(cls, total_time: float, k: int, signal: SignalSpec) -> "RtfSchedule":
        """tau_j = (1 + c(j tau)/J0) tau"""
        tau = total_time / k
        intervals = tuple(dressed_coefficient(signal, j * tau) * tau for j in range(1, k + 1))
        return cls(k=k, tau=tau, intervals=intervals, rule=f"signal:{signal.to_syntax()}")

    @classmethod
    def uniform(cls, total_time: float, k: int, low: float, high: float, seed: int) -> "RtfSchedule":
        """tau_j drawn uniformly from [low tau, high tau], reproducible from the seed"""
        if not 0.0 < low <= high:
            raise ScheduleValidationError([f"uniform rule needs 0 < lo <= hi, got lo={low}, hi={high}"])
        tau = total_time / k
        # Same draws as a random-hold signal with c/J0 in [lo - 1, hi - 1] held over tau.
        signal = RandomHold(low=low - 1.0, high=high - 1.0, interval=tau, seed=seed)
        schedule = cls.from_signal(total_time, k, signal)
        return replace(schedule, rule=f"uniform:lo={low!r},hi={high!r},seed={seed}")


def parse_rtf_rule(rule: str, total_time: float, k: int, seed: int = 0) -> RtfSchedule:
    """fixed | uniform:lo=<f>,hi=<f> | signal:<signal syntax>"""
    text = rule.strip()
    if text == "fixed":
        return RtfSchedule.fixed(total_time, k)
    if text.startswith("signal:"):
        return RtfSchedule.from_signal(total_time, k, parse_signal(text[len("signal:"):]))
    if text.startswith("uniform:"):
        bounds = {}
        for part in text[len("uniform:"):].split(","):
            key, _, value = part.partition("=")
            try:
                bounds[key.strip()] = float(value)
            except ValueError as e:
                raise SignalSyntaxError(f"'{part}' in rule '{rule}' is not key=<number>") from e
        if set(bounds) != {"lo", "hi"}:
            raise SignalSyntaxError(f"uniform rule needs exactly lo= and hi=, got '{rule}'")
        return RtfSchedule.uniform(total_time, k, bounds["lo"], bounds["hi"], seed)
    raise SignalSyntaxError(f"unknown RTF rule '{rule}' (fixed, uniform:lo=,hi=, signal:...)")


def rtf_run(
    inst: Ec3Instance,
    sched: RtfSchedule,
    initial: Optional[np.ndarray] = None,
    model: Optional[Ec3Hamiltonian] = None,
    weighting: HbWeighting = HbWeighting.MULTIPLICITY,
) -> FidelityTrace:
    """
    Randomized Trotter formula.

    Slice j applies exp(-i H_B (1 - j/k) tau_j) exp(-i H_P (j/k) tau_j),
    both factors exactly; fidelity is recorded after every slice against
    the ground space of H0(j/k).
    """
    numerics = get_numerics()
    model = model or Ec3Hamiltonian(inst, weighting)
    state = _initial_state(model, initial, numerics.norm_tol)
    multipliers = sched.multipliers
    started = time.perf_counter()

    rows = [TraceRow(0.0, fidelity(state, model.ground_space(0.0)), float(multipliers[0]))]
    for j in range(1, sched.k + 1):
        s = j / sched.k
        tau_j = sched.intervals[j - 1]
        state = apply_hp_exponential(state, model.hp.entries, s * tau_j)
        state = apply_hb_exponential(state, model.hb_weights, model.hb_identity, (1.0 - s) * tau_j)
        rows.append(TraceRow(s, fidelity(state, model.ground_space(s)), float(multipliers[j - 1])))

    _check_norm(state, numerics.norm_tol, sched.k)
    trace = FidelityTrace(rows=rows, final_state=state, wall_time=time.perf_counter() - started)
    logger.debug(f"RTF k={sched.k} rule={sched.rule}: F={trace.final_fidelity:.6f}")
    return trace


def slice_equivalence_check(
    inst: Ec3Instance,
    j: int,
    k: int,
    c_over_j0: float,
    tau: float,
    model: Optional[Ec3Hamiltonian] = None,
) -> float:
    """Spectral-norm distance between exp(-i H0 tau_j) and exp(-i (1 + c/J0) H0 tau)"""
    if not 1 <= j <= k:
        raise DomainError(f"slice index must satisfy 1 <= j <= k, got j={j}, k={k}")
    if c_over_j0 < -1.0:
        raise DomainError(f"1 + c/J0 must be non-negative, got c/J0={c_over_j0}")
    model = model or Ec3Hamiltonian(inst)
    h0 = model.h0(j / k)
    tau_j = (1.0 + c_over_j0) * tau
    uneven = scipy.linalg.expm(-1j * h0 * tau_j)
    dressed = scipy.linalg.expm(-1j * ((1.0 + c_over_j0) * h0) * tau)
    return float(scipy.linalg.norm(uneven - dressed, 2))


@dataclass(frozen=True)
class ScaleCheckResult:
    max_deviation: float
    reference_fidelity: float
    scaled_fidelity: float
    samples: int


def scale_check(
    inst: Ec3Instance,
    J: float,
    T0: float,
    steps: int,
    sample_every: int = 1,
    model: Optional[Ec3Hamiltonian] = None,
    scaled_steps: Optional[int] = None,
) -> ScaleCheckResult:
    """
    Compare psi under H0(t/T0) over T0 with psi' under J H0(t/T) over T = T0/J.

    The reference is sampled every sample_every of its steps; the scaled run
    is integrated on its own grid of scaled_steps (default: twice as fine)
    and sampled at the same fractions t/T. The result is the largest distance
    ||psi'(t/J) - psi(t)|| over the shared samples, which vanishes as both
    grids are refined. With scaled_steps == steps the two grids apply
    identical phases and the deviation is zero.
    """
    if not J > 0.0:
        raise DomainError(f"scaling factor J must be positive, got {J}")
    if sample_every < 1 or steps % sample_every:
        raise DomainError(f"sample_every={sample_every} must divide steps={steps}")
    samples = steps // sample_every
    scaled_steps = 2 * steps if scaled_steps is None else scaled_steps
    if scaled_steps < 1 or scaled_steps % samples:
        raise DomainError(
            f"scaled run needs a multiple of {samples} steps to share the samples, got {scaled_steps}"
        )
    model = model or Ec3Hamiltonian(inst)
    reference_cfg = ScheduleConfig(T0, steps, record_every=sample_every, keep_states=True)
    scaled_cfg = replace(
        reference_cfg,
        total_time=T0 / J,
        steps=scaled_steps,
        record_every=scaled_steps // samples,
        strength=J,
    )

    reference = propagate(inst, reference_cfg, model=model)
    scaled = propagate(inst, scaled_cfg, model=model)
    deviations = np.linalg.norm(scaled.states - reference.states, axis=1)
    result = ScaleCheckResult(
        max_deviation=float(deviations.max()),
        reference_fidelity=reference.final_fidelity,
        scaled_fidelity=scaled.final_fidelity,
        samples=len(deviations),
    )
    logger.info(
        f"Scale check J={J:g} T0={T0:g}: max deviation {result.max_deviation:.3e}, "
        f"scaled F={result.scaled_fidelity:.6f}"
    )
    return result


@dataclass(frozen=True)
class FinalFidelityTask:
    """One independent propagation, picklable for the worker pool"""
    instance: Ec3Instance
    signal: SignalSpec
    total_time: float
    backend: Backend = Backend.DENSE_MIDPOINT
    steps_per_unit: Optional[int] = None
    weighting: HbWeighting = HbWeighting.MULTIPLICITY


def final_fidelity(task: FinalFidelityTask) -> float:
    steps = default_steps(task.total_time, task.signal, task.steps_per_unit)
    cfg = ScheduleConfig(
        total_time=task.total_time,
        steps=steps,
        signal=task.signal,
        backend=task.backend,
        record_every=steps,
    )
    return propagate(task.instance, cfg, weighting=task.weighting).final_fidelity


@dataclass(frozen=True)
class SweepRow:
    strength: float
    final_fidelity: float


def strength_sweep(
    inst: Ec3Instance,
    family: SignalSpec,
    strengths: Sequence[float],
    total_time: float,
    backend: Backend = Backend.DENSE_MIDPOINT,
    steps_per_unit: Optional[int] = None,
    jobs: int = 1,
) -> List[SweepRow]:
    """Final fidelity at fixed T for every strength of a signal family"""
    tasks = [
        FinalFidelityTask(inst, family.with_strength(s), total_time, backend, steps_per_unit)
        for s in strengths
    ]
    values = parallel_map(final_fidelity, tasks, jobs=jobs)
    return [SweepRow(float(s), f) for s, f in zip(strengths, values)]


@dataclass
class ThresholdResult:
    found: bool
    t_star: Optional[float]
    best_time: float
    best_fidelity: float
    monotone: bool
    evaluations: List[Tuple[float, float]] = field(default_factory=list)
    strength: Optional[float] = None


def min_runtime_for_threshold(
    inst: Ec3Instance,
    signal: SignalSpec,
    f_threshold: float,
    t_range: Tuple[float, float],
    backend: Backend = Backend.DENSE_MIDPOINT,
    steps_per_unit: Optional[int] = None,
    grid_points: int = 6,
    rel_precision: float = 0.01,
    jobs: int = 1,
) -> ThresholdResult:
    """
    Smallest runtime T in t_range whose final fidelity reaches f_threshold.

    A geometric grid checks monotonicity; when it holds, bisection
    refines the bracket to rel_precision, otherwise a geometric scan with
    ratio 1 + rel_precision runs up to the first passing grid point.
    """
    low, high = t_range
    if not 0.0 < low < high:
        raise DomainError(f"t_range must satisfy 0 < low < high, got {t_range}")
    if not 0.0 < f_threshold <= 1.0:
        raise DomainError(f"fidelity threshold must lie in (0, 1], got {f_threshold}")

    evaluations: List[Tuple[float, float]] = []

    def evaluate(times: Iterable[float]) -> List[float]:
        times = list(times)
        tasks = [FinalFidelityTask(inst, signal, t, backend, steps_per_unit) for t in times]
        values = parallel_map(final_fidelity, tasks, jobs=jobs)
        evaluations.extend(zip(times, values))
        return values

    grid = np.geomspace(low, high, grid_points).tolist()
    grid_values = evaluate(grid)
    monotone = all(b >= a - 1e-12 for a, b in zip(grid_values, grid_values[1:]))

    def result(t_star: Optional[float]) -> ThresholdResult:
        best_time, best_fidelity = max(evaluations, key=lambda p: (p[1], -p[0]))
        if t_star is not None:
            best_time = t_star
            best_fidelity = dict(evaluations)[t_star]
        return ThresholdResult(
            found=t_star is not None,
            t_star=t_star,
            best_time=best_time,
            best_fidelity=best_fidelity,
            monotone=monotone,
            evaluations=sorted(evaluations),
            strength=signal.strength,
        )

    passing = [i for i, f in enumerate(grid_values) if f >= f_threshold]
    if not passing:
        logger.info(f"Threshold F>={f_threshold} unreachable in T in [{low:g}, {high:g}]")
        return result(None)
    first = passing[0]
    if first == 0:
        return result(grid[0])

    if monotone:
        a, b = grid[first - 1], grid[first]
        while (b - a) / b > rel_precision:
            mid = 0.5 * (a + b)
            (value,) = evaluate([mid])
            logger.debug(f"Bisection step T={mid:.6g}: F={value:.6f}")
            if value >= f_threshold:
                b = mid
            else:
                a = mid
        return result(b)

    logger.warning(
        f"Final fidelity not monotone in T over [{low:g}, {high:g}]; falling back to a grid scan"
    )
    scan = []
    t = low
    while t < grid[first]:
        scan.append(t)
        t *= 1.0 + rel_precision
    batch = max(1, jobs)
    for start in range(0, len(scan), batch):
        chunk = scan[start:start + batch]
        for t, value in zip(chunk, evaluate(chunk)):
            if value >= f_threshold:
                return result(t)
    return result(grid[first])


def threshold_sweep(
    inst: Ec3Instance,
    family: SignalSpec,
    strengths: Sequence[float],
    f_threshold: float,
    t_range: Tuple[float, float],
    backend: Backend = Backend.DENSE_MIDPOINT,
    steps_per_unit: Optional[int] = None,
    jobs: int = 1,
) -> List[ThresholdResult]:
    results = []
    for s in strengths:
        outcome = min_runtime_for_threshold(
            inst, family.with_strength(s), f_threshold, t_range,
            backend=backend, steps_per_unit=steps_per_unit, jobs=jobs,
        )
        outcome.strength = float(s)
        results.append(outcome)
    return results


@dataclass(frozen=True)
class SeedAverage:
    mean: float
    stderr: float
    values: Tuple[float, ...]
    seeds: Tuple[int, ...]


@dataclass(frozen=True)
class RtfTask:
    instance: Ec3Instance
    total_time: float
    k: int
    rule: str
    seed: int


def rtf_final_fidelity(task: RtfTask) -> float:
    schedule = parse_rtf_rule(task.rule, task.total_time, task.k, task.seed)
    return rtf_run(task.instance, schedule).final_fidelity


def rtf_seed_average(
    inst: Ec3Instance,
    total_time: float,
    k: int,
    rule: str,
    seeds: Sequence[int],
    jobs: int = 1,
) -> SeedAverage:
    """Mean and standard error of the final RTF fidelity over seeds"""
    tasks = [RtfTask(inst, total_time, k, rule, int(seed)) for seed in seeds]
    values = np.array(parallel_map(rtf_final_fidelity, tasks, jobs=jobs))
    stderr = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return SeedAverage(
        mean=float(values.mean()),
        stderr=stderr,
        values=tuple(float(v) for v in values),
        seeds=tuple(int(s) for s in seeds),
    )


def read_trace_csv(path: Path) -> List[TraceRow]:
    frame = pd.read_csv(path)
    return [TraceRow(*row) for row in frame[TRACE_COLUMNS].itertuples(index=False, name=None)]
