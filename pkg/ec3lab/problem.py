"""
Exact-cover (EC3) problem model
Instances, assignments, clause energies and the exhaustive classical oracle
"""

import json
import logging
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import BaseModel, PositiveInt, ValidationError

from .config import get_numerics
from .errors import CapExceededError, InstanceParseError, InstanceValidationError
from .parallel import parallel_map

logger = logging.getLogger(__name__)

Clause = Tuple[int, int, int]

# Chunk size of the vectorized enumeration, in assignments.
ENUMERATION_CHUNK = 1 << 18


@dataclass(frozen=True)
class Ec3Instance:
    """
    An n-bit EC3 problem: an ordered list of three-bit clauses.

    Bit indices are 1-based. Bit 1 is the leftmost character of an
    assignment string and the most significant bit of a basis-state index.
    """
    n_bits: int
    clauses: Tuple[Clause, ...]
    allow_empty: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        clauses = tuple(tuple(int(i) for i in clause) for clause in self.clauses)
        object.__setattr__(self, "clauses", clauses)

        if self.n_bits < 1:
            raise InstanceValidationError(f"n must be a positive integer, got {self.n_bits}")
        if not clauses and not self.allow_empty:
            raise InstanceValidationError("an instance needs at least one clause")
        for index, clause in enumerate(clauses):
            if len(clause) != 3:
                raise InstanceValidationError(
                    f"a clause has exactly three bits, got {len(clause)}", index, clause
                )
            out_of_range = [i for i in clause if not 1 <= i <= self.n_bits]
            if out_of_range:
                raise InstanceValidationError(
                    f"bit index {out_of_range[0]} outside [1, {self.n_bits}]", index, clause
                )
            if len(set(clause)) != 3:
                raise InstanceValidationError("bit indices must be pairwise distinct", index, clause)

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @property
    def dimension(self) -> int:
        return 1 << self.n_bits

    def bit_multiplicities(self) -> np.ndarray:
        """Number of clauses each bit appears in, indexed from bit 1"""
        counts = np.zeros(self.n_bits, dtype=np.int64)
        for clause in self.clauses:
            for i in clause:
                counts[i - 1] += 1
        return counts


@dataclass(frozen=True)
class Assignment:
    """Bit values z_1 ... z_n"""
    bits: Tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"assignment bits must be 0 or 1, got {bits}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_string(cls, text: str) -> "Assignment":
        return cls(tuple(int(ch) for ch in text.strip()))

    @classmethod
    def from_index(cls, index: int, n_bits: int) -> "Assignment":
        return cls(tuple((index >> (n_bits - 1 - pos)) & 1 for pos in range(n_bits)))

    @property
    def n_bits(self) -> int:
        return len(self.bits)

    def to_index(self) -> int:
        index = 0
        for b in self.bits:
            index = (index << 1) | b
        return index

    def __getitem__(self, bit: int) -> int:
        """1-based bit access"""
        return self.bits[bit - 1]

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


class InstanceDocument(BaseModel):
    """On-disk JSON form of an instance"""
    n: PositiveInt
    clauses: List[List[int]]


REFERENCE_INSTANCE = Ec3Instance(n_bits=4, clauses=((1, 2, 3), (2, 3, 4), (1, 2, 4)))

BUILTIN_INSTANCES = {
    "@paper": REFERENCE_INSTANCE,
    "@reference": REFERENCE_INSTANCE,
}


def parse_instance(text: str) -> Ec3Instance:
    """Parse a JSON instance document; clauses keep document order"""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceParseError(f"malformed instance document: {e.msg}", e.lineno, e.colno) from e

    try:
        document = InstanceDocument.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise InstanceParseError(f"instance document field '{location}': {first['msg']}") from e

    return Ec3Instance(n_bits=document.n, clauses=tuple(tuple(c) for c in document.clauses))


def to_document(inst: Ec3Instance) -> str:
    """Canonical serialization, accepted back by parse_instance"""
    document = InstanceDocument(n=inst.n_bits, clauses=[list(c) for c in inst.clauses])
    return json.dumps(document.model_dump(), separators=(", ", ": "))


def load_instance(source: str) -> Ec3Instance:
    """Resolve a built-in name such as '@paper' or read an instance file"""
    if source.startswith("@"):
        if source not in BUILTIN_INSTANCES:
            raise InstanceParseError(
                f"unknown built-in instance '{source}'; known: {sorted(BUILTIN_INSTANCES)}"
            )
        return BUILTIN_INSTANCES[source]

    text = Path(source).read_text(encoding="utf-8")
    inst = parse_instance(text)
    logger.info(f"Loaded instance {source}: n={inst.n_bits}, M={inst.num_clauses}")
    return inst


def clause_energy(clause: Sequence[int], a: Assignment) -> int:
    """0 iff exactly one of the clause's three bits is 1"""
    ones = a[clause[0]] + a[clause[1]] + a[clause[2]]
    return 0 if ones == 1 else 1


def violated_count(inst: Ec3Instance, a: Assignment) -> int:
    if a.n_bits != inst.n_bits:
        raise ValueError(f"assignment has {a.n_bits} bits, instance has {inst.n_bits}")
    return sum(clause_energy(clause, a) for clause in inst.clauses)


def _bit_column(indices: np.ndarray, bit: int, n_bits: int) -> np.ndarray:
    return (indices >> (n_bits - bit)) & 1


def energy_table(inst: Ec3Instance, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
    """Violated-clause counts for the basis indices in [start, stop), vectorized"""
    stop = inst.dimension if stop is None else stop
    indices = np.arange(start, stop, dtype=np.int64)
    energies = np.zeros(stop - start, dtype=np.int64)
    for clause in inst.clauses:
        ones = sum(_bit_column(indices, bit, inst.n_bits) for bit in clause)
        energies += (ones != 1).astype(np.int64)
    return energies


def _chunk_minimum(task: Tuple[Ec3Instance, int, int]) -> Tuple[int, List[int]]:
    inst, start, stop = task
    energies = energy_table(inst, start, stop)
    lowest = int(energies.min())
    hits = (np.flatnonzero(energies == lowest) + start).tolist()
    return lowest, hits


def brute_force_solutions(
    inst: Ec3Instance,
    cap: Optional[int] = None,
    jobs: int = 1,
) -> Tuple[int, FrozenSet[Assignment]]:
    """
    Enumerate all 2^n assignments.

    Returns the minimal violated-clause count and every assignment attaining
    it; the instance is satisfiable iff the energy is 0. The enumeration is
    split into index chunks which may run on a worker pool; the result does
    not depend on the partitioning.
    """
    cap = get_numerics().enumeration_cap if cap is None else cap
    if inst.n_bits > cap:
        raise CapExceededError("brute-force enumeration", inst.n_bits, cap)

    tasks = [
        (inst, start, min(start + ENUMERATION_CHUNK, inst.dimension))
        for start in range(0, inst.dimension, ENUMERATION_CHUNK)
    ]
    results = parallel_map(_chunk_minimum, tasks, jobs=jobs)

    best = min(lowest for lowest, _ in results)
    winners = frozenset(
        Assignment.from_index(index, inst.n_bits)
        for lowest, hits in results
        if lowest == best
        for index in hits
    )
    logger.debug(f"Enumerated {inst.dimension} assignments: energy {best}, {len(winners)} minimizers")
    return best, winners


def sorted_assignments(assignments: Iterable[Assignment]) -> List[Assignment]:
    return sorted(assignments, key=lambda a: a.to_index())
