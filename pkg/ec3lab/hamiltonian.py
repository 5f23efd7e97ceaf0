"""
Hamiltonians of the adiabatic EC3 algorithm
H_B, H_P, the interpolation H_0(s) = J0[(1 - s) H_B + s H_P], Pauli forms and ground spaces
"""

import logging
from fractions import Fraction
from functools import reduce
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Tuple
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from .config import get_numerics
from .errors import CapExceededError, DomainError, EigensolverError
from .problem import Ec3Instance, energy_table

logger = logging.getLogger(__name__)

PAULI_MATRICES: Dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


MAX_PRINTED_DENOMINATOR = 1 << 20


class HbWeighting(Enum):
    MULTIPLICITY = "multiplicity"  # a bit in m clauses contributes m times
    UNIT = "unit"  # every bit that appears in some clause contributes once


@dataclass(frozen=True)
class PauliString:
    """Tensor product of per-qubit Pauli letters; position 0 is qubit 1"""
    letters: str
    coefficient: float

    def __post_init__(self):
        if any(ch not in PAULI_MATRICES for ch in self.letters):
            raise DomainError(f"Pauli letters must be from IXYZ, got '{self.letters}'")
        if not np.isfinite(self.coefficient):
            raise DomainError(f"coefficient of {self.letters} is not finite")

    @property
    def weight(self) -> int:
        return sum(ch != "I" for ch in self.letters)

    @property
    def support(self) -> Tuple[int, ...]:
        """1-based qubits carrying a non-identity letter"""
        return tuple(pos + 1 for pos, ch in enumerate(self.letters) if ch != "I")

    @property
    def label(self) -> str:
        if self.weight == 0:
            return "I"
        return "".join(f"{ch}{pos + 1}" for pos, ch in enumerate(self.letters) if ch != "I")

    def matrix(self) -> np.ndarray:
        return reduce(np.kron, (PAULI_MATRICES[ch] for ch in self.letters))


class PauliSum:
    """Weighted sum of n-qubit Pauli strings with merged coefficients"""

    def __init__(self, n_bits: int, terms: Iterable[Tuple[str, float]] = ()):
        if n_bits < 1:
            raise DomainError(f"n_bits must be positive, got {n_bits}")
        self.n_bits = n_bits
        merged: Dict[str, float] = {}
        for letters, coefficient in terms:
            if len(letters) != n_bits:
                raise DomainError(f"Pauli string '{letters}' does not have {n_bits} letters")
            merged[letters] = merged.get(letters, 0.0) + float(coefficient)
        self._terms: Dict[str, PauliString] = {
            letters: PauliString(letters, coefficient)
            for letters, coefficient in sorted(merged.items())
        }

    @property
    def terms(self) -> List[PauliString]:
        """Terms sorted lexicographically by letter sequence"""
        return list(self._terms.values())

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self.terms)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.n_bits != self.n_bits:
            raise DomainError("cannot add Pauli sums on different qubit counts")
        return PauliSum(
            self.n_bits,
            [(t.letters, t.coefficient) for t in self] + [(t.letters, t.coefficient) for t in other],
        )

    def scaled(self, factor: float) -> "PauliSum":
        return PauliSum(self.n_bits, [(t.letters, factor * t.coefficient) for t in self])

    def coefficient(self, letters_or_label: str) -> float:
        letters = self._letters_from(letters_or_label)
        term = self._terms.get(letters)
        return term.coefficient if term is not None else 0.0

    def _letters_from(self, text: str) -> str:
        if len(text) == self.n_bits and all(ch in PAULI_MATRICES for ch in text):
            return text
        if text == "I":
            return "I" * self.n_bits
        letters = ["I"] * self.n_bits
        pos = 0
        while pos < len(text):
            letter = text[pos]
            pos += 1
            digits = ""
            while pos < len(text) and text[pos].isdigit():
                digits += text[pos]
                pos += 1
            if letter not in PAULI_MATRICES or not digits:
                raise DomainError(f"cannot read Pauli label '{text}'")
            letters[int(digits) - 1] = letter
        return "".join(letters)

    @property
    def identity_coefficient(self) -> float:
        return self.coefficient("I" * self.n_bits)

    @property
    def max_weight(self) -> int:
        return max((t.weight for t in self if t.coefficient != 0.0), default=0)

    def is_z_only(self) -> bool:
        return all(set(t.letters) <= {"I", "Z"} for t in self)

    def to_matrix(self, cap: Optional[int] = None) -> np.ndarray:
        _check_dense_cap(self.n_bits, cap)
        dim = 1 << self.n_bits
        out = np.zeros((dim, dim), dtype=complex)
        for term in self:
            if term.coefficient != 0.0:
                out += term.coefficient * term.matrix()
        return out

    def diagonal(self, cap: Optional[int] = None) -> np.ndarray:
        """Diagonal of an {I, Z}-only sum, without forming the matrix"""
        if not self.is_z_only():
            raise DomainError("diagonal() requires a sum over I/Z strings only")
        _check_dense_cap(self.n_bits, cap)
        indices = np.arange(1 << self.n_bits, dtype=np.int64)
        out = np.zeros(1 << self.n_bits, dtype=float)
        for term in self:
            parity = np.zeros_like(indices)
            for qubit in term.support:
                parity ^= (indices >> (self.n_bits - qubit)) & 1
            out += term.coefficient * (1 - 2 * parity)
        return out


@dataclass(frozen=True)
class DiagonalOperator:
    """Operator diagonal in the computational basis, indexed by basis-state integer"""
    entries: np.ndarray

    @property
    def dimension(self) -> int:
        return int(self.entries.shape[0])

    def matrix(self) -> np.ndarray:
        return np.diag(self.entries.astype(complex))

    def apply(self, state: np.ndarray) -> np.ndarray:
        return self.entries * state


@dataclass(frozen=True)
class GroundSpace:
    energy: float
    basis: np.ndarray  # shape (degeneracy, dimension), rows orthonormal
    spectrum: np.ndarray = field(default=None, repr=False)

    @property
    def degeneracy(self) -> int:
        return int(self.basis.shape[0])

    @property
    def gap(self) -> Optional[float]:
        """Distance to the first eigenvalue above the ground space"""
        if self.spectrum is None or self.degeneracy >= len(self.spectrum):
            return None
        return float(self.spectrum[self.degeneracy] - self.energy)


def _check_dense_cap(n_bits: int, cap: Optional[int]) -> None:
    cap = get_numerics().dense_cap if cap is None else cap
    if n_bits > cap:
        raise CapExceededError("dense representation", n_bits, cap)


def hb_weights(inst: Ec3Instance, weighting: HbWeighting = HbWeighting.MULTIPLICITY) -> np.ndarray:
    """Per-bit weights w_i of H_B = sum_i (w_i / 2)(1 - X_i)"""
    counts = inst.bit_multiplicities().astype(float)
    if HbWeighting(weighting) == HbWeighting.UNIT:
        return (counts > 0).astype(float)
    return counts


def build_hb(inst: Ec3Instance, weighting: HbWeighting = HbWeighting.MULTIPLICITY) -> PauliSum:
    """H_B = sum_C (H_B^i + H_B^j + H_B^k) with H_B^i = (1 - X_i) / 2"""
    weights = hb_weights(inst, weighting)
    n = inst.n_bits
    terms = [("I" * n, 0.5 * float(weights.sum()))]
    for pos, w in enumerate(weights):
        if w != 0.0:
            letters = "I" * pos + "X" + "I" * (n - pos - 1)
            terms.append((letters, -0.5 * float(w)))
    return PauliSum(n, terms)


def build_hp_diagonal(inst: Ec3Instance, cap: Optional[int] = None) -> DiagonalOperator:
    """Diagonal of H_P: entry a is the number of clauses assignment a violates"""
    _check_dense_cap(inst.n_bits, cap)
    return DiagonalOperator(energy_table(inst).astype(float))


def walsh_hadamard(values: np.ndarray) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform, natural (Hadamard) ordering"""
    out = np.array(values, dtype=float)
    size = out.shape[0]
    if size & (size - 1):
        raise DomainError(f"transform length must be a power of two, got {size}")
    h = 1
    while h < size:
        blocks = out.reshape(-1, 2, h)
        upper = blocks[:, 0, :] + blocks[:, 1, :]
        lower = blocks[:, 0, :] - blocks[:, 1, :]
        out = np.stack((upper, lower), axis=1).reshape(size)
        h *= 2
    return out


def _z_letters(mask: int, n_bits: int) -> str:
    return "".join("Z" if (mask >> (n_bits - 1 - pos)) & 1 else "I" for pos in range(n_bits))


def _clause_support_masks(inst: Ec3Instance) -> set:
    masks = {0}
    for clause in inst.clauses:
        for size in (1, 2, 3):
            for subset in combinations(clause, size):
                masks.add(sum(1 << (inst.n_bits - bit) for bit in subset))
    return masks


def hp_to_pauli(inst: Ec3Instance, cap: Optional[int] = None) -> PauliSum:
    """
    Expand H_P over {I, Z} strings.

    The coefficient of string S is 2^-n sum_a (-1)^{|S & a|} H_P[a]. Every
    string supported inside some clause is listed, zero coefficients
    included; any other string has coefficient exactly zero for three-bit
    clauses and is listed only if it is not.
    """
    diagonal = build_hp_diagonal(inst, cap).entries
    coefficients = walsh_hadamard(diagonal) / float(inst.dimension)
    listed = _clause_support_masks(inst) | set(np.flatnonzero(coefficients).tolist())
    return PauliSum(
        inst.n_bits,
        [(_z_letters(mask, inst.n_bits), coefficients[mask]) for mask in sorted(listed)],
    )


def format_coefficient(value: float) -> str:
    """Exact fraction when the denominator is a small power of two, else a decimal"""
    # Every finite float is dyadic; only short denominators read as fractions.
    exact = Fraction(float(value))
    if exact.denominator <= MAX_PRINTED_DENOMINATOR:
        return str(exact)
    return f"{value:.15g}"


def term_table(pauli_sum: PauliSum) -> List[str]:
    return [f"{term.label} {format_coefficient(term.coefficient)}" for term in pauli_sum]


class Ec3Hamiltonian:
    """Dense H_B / H_P pair of one instance, built once and shared by propagators"""

    def __init__(
        self,
        inst: Ec3Instance,
        weighting: HbWeighting = HbWeighting.MULTIPLICITY,
        cap: Optional[int] = None,
    ):
        _check_dense_cap(inst.n_bits, cap)
        self.instance = inst
        self.weighting = HbWeighting(weighting)
        self.hb = build_hb(inst, self.weighting)
        self.hb_weights = hb_weights(inst, self.weighting)
        self.hb_identity = self.hb.identity_coefficient
        self.hb_matrix = self.hb.to_matrix(cap=inst.n_bits)
        self.hp = build_hp_diagonal(inst, cap=inst.n_bits)

    @property
    def n_bits(self) -> int:
        return self.instance.n_bits

    @property
    def dimension(self) -> int:
        return self.instance.dimension

    def h0(self, s: float, strength: float = 1.0) -> np.ndarray:
        """J0 [(1 - s) H_B + s H_P] as a dense Hermitian matrix"""
        if not 0.0 <= s <= 1.0:
            raise DomainError(f"interpolation parameter s must lie in [0, 1], got {s}")
        out = (1.0 - s) * self.hb_matrix
        out[np.diag_indices_from(out)] += s * self.hp.entries
        return strength * out

    def ground_space(self, s: float, degeneracy_tol: Optional[float] = None) -> GroundSpace:
        return ground_space(self.h0(s), degeneracy_tol)


def h0_matrix(
    inst: Ec3Instance,
    s: float,
    weighting: HbWeighting = HbWeighting.MULTIPLICITY,
    cap: Optional[int] = None,
) -> np.ndarray:
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"interpolation parameter s must lie in [0, 1], got {s}")
    return Ec3Hamiltonian(inst, weighting, cap).h0(s)


def hermitian_deviation(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


def ground_space(
    matrix: np.ndarray,
    degeneracy_tol: Optional[float] = None,
    hermitian_tol: Optional[float] = None,
) -> GroundSpace:
    """
    Lowest eigenspace of a Hermitian matrix.

    Every eigenvector whose eigenvalue lies within degeneracy_tol of the
    minimum belongs to the ground space.
    """
    numerics = get_numerics()
    degeneracy_tol = numerics.degeneracy_tol if degeneracy_tol is None else degeneracy_tol
    hermitian_tol = numerics.hermitian_tol if hermitian_tol is None else hermitian_tol

    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DomainError(f"ground_space needs a square matrix, got shape {matrix.shape}")
    dimension = matrix.shape[0]
    if dimension > (1 << numerics.dense_cap):
        raise CapExceededError("dense eigendecomposition", int(np.log2(dimension)), numerics.dense_cap)
    deviation = hermitian_deviation(matrix)
    if deviation > hermitian_tol:
        raise DomainError(f"matrix is not Hermitian: max |H - H^dagger| = {deviation:.3e}")

    try:
        eigenvalues, eigenvectors = scipy.linalg.eigh(matrix, check_finite=True)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise EigensolverError(
            "Hermitian eigendecomposition failed",
            dimension,
            {"driver": "evr", "hermitian_deviation": deviation, "error": str(e)},
        ) from e

    lowest = float(eigenvalues[0])
    count = int(np.count_nonzero(eigenvalues <= lowest + degeneracy_tol))
    vectors = eigenvectors[:, :count]
    if count > 1:
        vectors, _ = np.linalg.qr(vectors)
    return GroundSpace(energy=lowest, basis=vectors.T.copy(), spectrum=eigenvalues)
