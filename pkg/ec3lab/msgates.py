"""
Molmer-Sorensen gate compilation
Multi-qubit Pauli exponentials from two MS gates and an ancilla rotation,
and a compiler from randomized-Trotter slices to gate listings
"""

import math
import logging
from collections import Counter
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
from dataclasses import dataclass
from enum import Enum
from functools import reduce

import numpy as np
import scipy.linalg

from .config import get_numerics
from .errors import CapExceededError, DomainError
from .evolve import RtfSchedule, uniform_superposition
from .hamiltonian import Ec3Hamiltonian, PAULI_MATRICES, hp_to_pauli
from .problem import Ec3Instance

logger = logging.getLogger(__name__)

ANCILLA = 0
IDENTITY_TOLERANCE = 1e-10
SLICE_TOLERANCE = 1e-9


class GateKind(Enum):
    MS = "MS"
    ANC = "ANC"
    ROT = "ROT"
    PHASE = "PHASE"


@dataclass(frozen=True)
class GateOp:
    """
    One operation on the (n+1)-qubit register; qubit 0 is the ancilla.

    MS:    exp(-i theta/4 (cos phi S_x + sin phi S_y)^2) over `qubits`
    ANC:   exp(i angle sigma_axis) on the ancilla
    ROT:   exp(-i angle/2 sigma_axis) on system qubit `qubit`
    PHASE: global factor exp(i angle)
    """
    kind: GateKind
    angle: float = 0.0
    phi: float = 0.0
    axis: str = ""
    qubit: Optional[int] = None
    qubits: Tuple[int, ...] = ()

    def __post_init__(self):
        if not (math.isfinite(self.angle) and math.isfinite(self.phi)):
            raise DomainError(f"gate angles must be finite: {self}")
        allowed_axes = {GateKind.ANC: ("y", "z"), GateKind.ROT: ("x", "y", "z")}
        if self.kind in allowed_axes and self.axis not in allowed_axes[self.kind]:
            raise DomainError(f"{self.kind.value} axis must be one of {allowed_axes[self.kind]}, got '{self.axis}'")

    @classmethod
    def ms(cls, theta: float, phi: float, qubits: Iterable[int]) -> "GateOp":
        return cls(GateKind.MS, angle=theta, phi=phi, qubits=tuple(sorted(qubits)))

    @classmethod
    def anc(cls, axis: str, angle: float) -> "GateOp":
        return cls(GateKind.ANC, angle=angle, axis=axis, qubit=ANCILLA)

    @classmethod
    def rot(cls, qubit: int, axis: str, angle: float) -> "GateOp":
        return cls(GateKind.ROT, angle=angle, axis=axis, qubit=qubit)

    @classmethod
    def phase(cls, angle: float) -> "GateOp":
        return cls(GateKind.PHASE, angle=angle)

    def touched(self) -> Tuple[int, ...]:
        if self.kind == GateKind.MS:
            return self.qubits
        if self.qubit is not None:
            return (self.qubit,)
        return ()

    def listing(self) -> str:
        if self.kind == GateKind.MS:
            qubits = ",".join(str(q) for q in self.qubits)
            return f"MS theta={_fmt(self.angle)} phi={_fmt(self.phi)} qubits={qubits}"
        if self.kind == GateKind.ANC:
            return f"ANC axis={self.axis} angle={_fmt(self.angle)}"
        if self.kind == GateKind.ROT:
            return f"ROT q={self.qubit} axis={self.axis} angle={_fmt(self.angle)}"
        return f"PHASE angle={_fmt(self.angle)}"

    def matrix(self, n_total: int) -> np.ndarray:
        if self.kind == GateKind.MS:
            return u_ms(self.angle, self.phi, n_total, self.qubits)
        if self.kind == GateKind.ANC:
            local = scipy.linalg.expm(1j * self.angle * PAULI_MATRICES[self.axis.upper()])
            return _embed(local, ANCILLA, n_total)
        if self.kind == GateKind.ROT:
            local = scipy.linalg.expm(-0.5j * self.angle * PAULI_MATRICES[self.axis.upper()])
            return _embed(local, self.qubit, n_total)
        return np.exp(1j * self.angle) * np.eye(1 << n_total, dtype=complex)


def _fmt(value: float) -> str:
    return f"{value:.15g}"


@dataclass(frozen=True)
class GateSequence:
    """Ops in application order on n_system qubits plus the ancilla"""
    ops: Tuple[GateOp, ...]
    n_system: int

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.n_system < 1:
            raise DomainError(f"n_system must be positive, got {self.n_system}")
        for op in self.ops:
            bad = [q for q in op.touched() if not 0 <= q <= self.n_system]
            if bad:
                raise DomainError(f"{op.listing()} addresses qubit {bad[0]} outside [0, {self.n_system}]")
            if op.kind == GateKind.ROT and op.qubit == ANCILLA:
                raise DomainError("ROT ops address system qubits only; use ANC for the ancilla")

    @property
    def n_total(self) -> int:
        return self.n_system + 1

    def __add__(self, other: "GateSequence") -> "GateSequence":
        if other.n_system != self.n_system:
            raise DomainError(f"cannot join sequences on {self.n_system} and {other.n_system} qubits")
        return GateSequence(self.ops + other.ops, self.n_system)

    def __len__(self) -> int:
        return len(self.ops)

    def counts(self) -> Dict[str, int]:
        tally = Counter(op.kind.value for op in self.ops)
        return {kind.value: tally.get(kind.value, 0) for kind in GateKind}

    def listing(self) -> List[str]:
        return [op.listing() for op in self.ops]

    def unitary(self, cap: Optional[int] = None) -> np.ndarray:
        """Dense (n+1)-qubit unitary; later ops multiply from the left"""
        _check_ms_cap(self.n_total, cap)
        dim = 1 << self.n_total
        out = np.eye(dim, dtype=complex)
        for op in self.ops:
            out = op.matrix(self.n_total) @ out
        return out

    def system_unitary(self, cap: Optional[int] = None) -> np.ndarray:
        """Block <0|U|0> acting on the system with the ancilla prepared and returned in |0>"""
        dim = 1 << self.n_system
        return self.unitary(cap)[:dim, :dim]


def _check_ms_cap(n_total: int, cap: Optional[int]) -> None:
    cap = get_numerics().ms_cap if cap is None else cap
    if n_total > cap:
        raise CapExceededError("dense gate verification", n_total, cap)


def _embed(local: np.ndarray, position: int, n_total: int) -> np.ndarray:
    """Single-qubit operator at kron position `position` (0 is most significant)"""
    factors = [np.eye(2, dtype=complex)] * n_total
    factors[position] = local
    return reduce(np.kron, factors)


def collective_spin(phi: float, n_total: int, qubits: Optional[Sequence[int]] = None) -> np.ndarray:
    """cos(phi) S_x + sin(phi) S_y summed over `qubits` (all qubits by default)"""
    qubits = range(n_total) if qubits is None else qubits
    local = math.cos(phi) * PAULI_MATRICES["X"] + math.sin(phi) * PAULI_MATRICES["Y"]
    dim = 1 << n_total
    out = np.zeros((dim, dim), dtype=complex)
    for q in qubits:
        out += _embed(local, q, n_total)
    return out


def u_ms(
    theta: float,
    phi: float,
    n_total: int,
    qubits: Optional[Sequence[int]] = None,
    cap: Optional[int] = None,
) -> np.ndarray:
    """U_MS(theta, phi) = exp(-i theta/4 (cos phi S_x + sin phi S_y)^2)"""
    _check_ms_cap(n_total, cap)
    eigenvalues, eigenvectors = scipy.linalg.eigh(collective_spin(phi, n_total, qubits))
    phases = np.exp(-0.25j * theta * eigenvalues ** 2)
    return (eigenvectors * phases) @ eigenvectors.conj().T


def ancilla_rule(phi: float, n: int) -> GateOp:
    """Ancilla rotation completing the MS pair for an n-qubit X-string"""
    if n < 1:
        raise DomainError(f"an X-string needs n >= 1 qubits, got {n}")
    residue = n % 4
    if residue == 1:
        return GateOp.anc("y", -phi)
    if residue == 3:
        return GateOp.anc("y", phi)
    if residue == 0:
        return GateOp.anc("z", phi)
    return GateOp.anc("z", -phi)


def u_anc(phi: float, n: int) -> np.ndarray:
    """exp(-+i phi sigma_{y,z}) on the ancilla of an (n+1)-qubit register, by n mod 4"""
    return ancilla_rule(phi, n).matrix(n + 1)


def x_string(n_total: int, qubits: Iterable[int]) -> np.ndarray:
    qubits = set(qubits)
    factors = [PAULI_MATRICES["X"] if q in qubits else np.eye(2, dtype=complex) for q in range(n_total)]
    return reduce(np.kron, factors)


@dataclass(frozen=True)
class MsIdentityReport:
    n: int
    phi: float
    global_dev: float
    subspace_dev: float

    @property
    def passing_embedding(self) -> Optional[str]:
        if self.global_dev <= IDENTITY_TOLERANCE:
            return "global"
        if self.subspace_dev <= IDENTITY_TOLERANCE:
            return "subspace"
        return None

    @property
    def passing_deviation(self) -> float:
        return min(self.global_dev, self.subspace_dev)


def verify_ms_identity(phi: float, n: int, cap: Optional[int] = None) -> MsIdentityReport:
    """
    Compare R = U_MS(-pi/2, 0) U_anc(phi) U_MS(pi/2, 0) with exp(i phi X^n).

    global_dev embeds the target as X-string (x) I on the ancilla; subspace_dev
    compares only the ancilla-|0> block. R equals exp(i phi Z_anc X^n), so the
    subspace embedding holds for every n while the global one fails unless
    sin(phi) = 0.
    """
    n_total = n + 1
    _check_ms_cap(n_total, cap)
    circuit = GateSequence(
        (GateOp.ms(math.pi / 2, 0.0, range(n_total)), ancilla_rule(phi, n), GateOp.ms(-math.pi / 2, 0.0, range(n_total))),
        n,
    ).unitary(cap)

    target_system = scipy.linalg.expm(1j * phi * x_string(n, range(n)))
    target_global = np.kron(np.eye(2), target_system)
    dim = 1 << n
    report = MsIdentityReport(
        n=n,
        phi=phi,
        global_dev=float(scipy.linalg.norm(circuit - target_global, 2)),
        subspace_dev=float(scipy.linalg.norm(circuit[:dim, :dim] - target_system, 2)),
    )
    logger.debug(
        f"MS identity n={n} phi={phi:g}: global {report.global_dev:.3e}, "
        f"subspace {report.subspace_dev:.3e}"
    )
    return report


def z_string_via_ms(phi: float, support: Iterable[int], n: int) -> GateSequence:
    """
    exp(i phi Z_support) on n system qubits.

    Each support qubit is rotated by exp(-i pi/4 sigma_y), which maps Z to X,
    the X-string is applied with the MS pair on support and ancilla only,
    and the rotations are undone. The ancilla starts and ends in |0>.
    """
    support = tuple(sorted(set(support)))
    if not support:
        raise DomainError("a Z-string needs a non-empty support")
    if any(not 1 <= q <= n for q in support):
        raise DomainError(f"support {support} outside [1, {n}]")
    if phi == 0.0:
        return GateSequence((), n)

    register = (ANCILLA,) + support
    ops = [GateOp.rot(q, "y", math.pi / 2) for q in support]
    ops += [
        GateOp.ms(math.pi / 2, 0.0, register),
        ancilla_rule(phi, len(support)),
        GateOp.ms(-math.pi / 2, 0.0, register),
    ]
    ops += [GateOp.rot(q, "y", -math.pi / 2) for q in support]
    return GateSequence(tuple(ops), n)


def compile_slice(
    inst: Ec3Instance,
    j: int,
    k: int,
    tau_j: float,
    model: Optional[Ec3Hamiltonian] = None,
) -> GateSequence:
    """
    Gate sequence for exp(-i H_B (1 - j/k) tau_j) exp(-i H_P (j/k) tau_j).

    The H_P factor comes first in application order: one Z-string block
    per nonzero Pauli term plus a phase for the identity term. The H_B
    factor is a layer of x rotations plus a phase. Factors with a zero
    prefactor are omitted.
    """
    if not 0 <= j <= k or k < 1:
        raise DomainError(f"slice index must satisfy 0 <= j <= k, k >= 1; got j={j}, k={k}")
    model = model or Ec3Hamiltonian(inst)
    n = inst.n_bits
    s = j / k
    sequence = GateSequence((), n)

    hp_angle = s * tau_j
    if hp_angle != 0.0:
        for term in hp_to_pauli(inst):
            if term.coefficient == 0.0:
                continue
            if term.weight == 0:
                sequence += GateSequence((GateOp.phase(-term.coefficient * hp_angle),), n)
            else:
                sequence += z_string_via_ms(-term.coefficient * hp_angle, term.support, n)

    hb_angle = (1.0 - s) * tau_j
    if hb_angle != 0.0:
        ops = [
            GateOp.rot(q, "x", -hb_angle * float(w))
            for q, w in enumerate(model.hb_weights, start=1)
            if w != 0.0
        ]
        if model.hb_identity != 0.0:
            ops.append(GateOp.phase(-hb_angle * model.hb_identity))
        sequence += GateSequence(tuple(ops), n)

    logger.debug(f"Compiled slice j={j}/{k}: {sequence.counts()}")
    return sequence


def slice_operator(model: Ec3Hamiltonian, j: int, k: int, tau_j: float) -> np.ndarray:
    s = j / k
    hb_factor = scipy.linalg.expm(-1j * (1.0 - s) * tau_j * model.hb_matrix)
    hp_factor = np.exp(-1j * s * tau_j * model.hp.entries)
    return hb_factor * hp_factor[np.newaxis, :]


def distance_up_to_phase(a: np.ndarray, b: np.ndarray) -> float:
    """Spectral-norm distance after aligning the global phase of b to a"""
    overlap = np.trace(b.conj().T @ a)
    if abs(overlap) > 0.0:
        b = b * (overlap / abs(overlap))
    return float(scipy.linalg.norm(a - b, 2))


def verify_slice(
    inst: Ec3Instance,
    j: int,
    k: int,
    tau_j: float,
    cap: Optional[int] = None,
) -> float:
    """Deviation between the compiled slice and the dense slice operator, up to global phase"""
    model = Ec3Hamiltonian(inst)
    compiled = compile_slice(inst, j, k, tau_j, model).system_unitary(cap)
    deviation = distance_up_to_phase(compiled, slice_operator(model, j, k, tau_j))
    logger.debug(f"Slice j={j}/{k} tau_j={tau_j:g}: compiled deviation {deviation:.3e}")
    return deviation


@dataclass(frozen=True)
class CompiledRun:
    final_state: np.ndarray
    ancilla_leakage: float
    gate_counts: Dict[str, int]


def simulate_compiled(
    inst: Ec3Instance,
    sched: RtfSchedule,
    initial: Optional[np.ndarray] = None,
    cap: Optional[int] = None,
) -> CompiledRun:
    """Run every compiled slice on the full register from |0>_anc (x) |+...+>"""
    n = inst.n_bits
    _check_ms_cap(n + 1, cap)
    model = Ec3Hamiltonian(inst)
    system = uniform_superposition(n) if initial is None else np.asarray(initial, dtype=complex)
    state = np.concatenate([system, np.zeros_like(system)])

    totals: Counter = Counter()
    for j in range(1, sched.k + 1):
        sequence = compile_slice(inst, j, sched.k, sched.intervals[j - 1], model)
        totals.update(sequence.counts())
        state = sequence.unitary(cap) @ state

    dim = 1 << n
    leakage = float(np.linalg.norm(state[dim:]))
    return CompiledRun(
        final_state=state[:dim].copy(),
        ancilla_leakage=leakage,
        gate_counts={kind.value: totals.get(kind.value, 0) for kind in GateKind},
    )
