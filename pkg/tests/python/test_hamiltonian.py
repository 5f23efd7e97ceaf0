"""
Unit Tests for the EC3 Hamiltonians
Tests H_B, H_P, their Pauli expansions and ground-space extraction
"""

import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT))

from ec3lab.errors import CapExceededError, DomainError
from ec3lab.hamiltonian import (
    Ec3Hamiltonian,
    HbWeighting,
    PauliSum,
    build_hb,
    build_hp_diagonal,
    format_coefficient,
    ground_space,
    h0_matrix,
    hp_to_pauli,
    term_table,
    walsh_hadamard,
)
from ec3lab.problem import REFERENCE_INSTANCE, Ec3Instance, energy_table

ONE_CLAUSE = Ec3Instance(n_bits=3, clauses=((1, 2, 3),))
ALL_TRIPLES = Ec3Instance(n_bits=4, clauses=((1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)))


class TestProblemHamiltonian:
    """Test the Pauli expansion of H_P"""

    @pytest.fixture
    def reference_hp(self):
        return hp_to_pauli(REFERENCE_INSTANCE)

    @pytest.mark.parametrize("label,value", [
        ("Z1Z2Z3", Fraction(3, 8)), ("Z1Z2Z4", Fraction(3, 8)), ("Z2Z3Z4", Fraction(3, 8)),
        ("Z1Z2", Fraction(1, 4)), ("Z2Z3", Fraction(1, 4)), ("Z2Z4", Fraction(1, 4)),
        ("Z1Z3", Fraction(1, 8)), ("Z1Z4", Fraction(1, 8)), ("Z3Z4", Fraction(1, 8)),
        ("Z1", Fraction(-1, 4)), ("Z3", Fraction(-1, 4)), ("Z4", Fraction(-1, 4)),
        ("I", Fraction(15, 8)),
    ])
    def test_reference_coefficients_exact(self, reference_hp, label, value):
        assert Fraction(reference_hp.coefficient(label)) == value

    def test_reference_single_body_z2(self, reference_hp):
        # Bit 2 sits in all three clauses; H_P(0100) = 0 requires this term.
        assert Fraction(reference_hp.coefficient("Z2")) == Fraction(-3, 8)

    def test_no_four_body_term(self, reference_hp):
        assert reference_hp.coefficient("Z1Z2Z3Z4") == 0.0
        assert reference_hp.coefficient("Z1Z3Z4") == 0.0
        assert reference_hp.max_weight == 3

    def test_term_table_lines(self, reference_hp):
        lines = term_table(reference_hp)
        assert "Z1Z2Z3 3/8" in lines
        assert "Z2 -3/8" in lines
        assert "I 15/8" in lines
        assert lines[0] == "I 15/8"

    def test_one_clause_expansion(self):
        hp = hp_to_pauli(ONE_CLAUSE)
        table = {term.label: Fraction(term.coefficient) for term in hp}
        assert table == {
            "I": Fraction(5, 8),
            "Z1": Fraction(-1, 8), "Z2": Fraction(-1, 8), "Z3": Fraction(-1, 8),
            "Z1Z2": Fraction(1, 8), "Z1Z3": Fraction(1, 8), "Z2Z3": Fraction(1, 8),
            "Z1Z2Z3": Fraction(3, 8),
        }

    def test_pauli_diagonal_matches_energies(self):
        for inst in (REFERENCE_INSTANCE, ONE_CLAUSE, ALL_TRIPLES):
            diagonal = hp_to_pauli(inst).diagonal()
            np.testing.assert_allclose(diagonal, energy_table(inst), atol=1e-12)

    def test_diagonal_operator(self):
        hp = build_hp_diagonal(REFERENCE_INSTANCE)
        assert hp.dimension == 16
        assert hp.entries[4] == 0.0
        np.testing.assert_array_equal(np.diag(hp.matrix()).real, hp.entries)

    def test_walsh_hadamard_of_delta(self):
        delta = np.zeros(8)
        delta[0] = 1.0
        np.testing.assert_array_equal(walsh_hadamard(delta), np.ones(8))

    def test_walsh_hadamard_needs_power_of_two(self):
        with pytest.raises(DomainError):
            walsh_hadamard(np.ones(6))


class TestBeginningHamiltonian:
    """Test H_B construction and weighting"""

    def test_multiplicity_weights(self):
        lines = term_table(build_hb(REFERENCE_INSTANCE))
        assert "I 9/2" in lines
        assert "X2 -3/2" in lines
        assert "X1 -1" in lines

    def test_unit_weights(self):
        hb = build_hb(REFERENCE_INSTANCE, HbWeighting.UNIT)
        assert hb.identity_coefficient == 2.0
        assert hb.coefficient("X2") == -0.5

    def test_ground_state_is_uniform(self):
        gs = ground_space(build_hb(REFERENCE_INSTANCE).to_matrix())
        assert gs.degeneracy == 1
        assert gs.energy == pytest.approx(0.0, abs=1e-12)
        assert abs(np.vdot(gs.basis[0], np.full(16, 0.25))) == pytest.approx(1.0, abs=1e-12)


class TestPauliSum:
    """Test Pauli-sum algebra"""

    def test_merges_duplicate_strings(self):
        total = PauliSum(2, [("ZI", 0.5), ("ZI", 0.25), ("IX", 1.0)])
        assert len(total) == 2
        assert total.coefficient("Z1") == 0.75

    def test_addition_and_scaling(self):
        a = PauliSum(2, [("ZZ", 1.0)])
        b = PauliSum(2, [("ZZ", 0.5), ("II", 2.0)])
        total = (a + b).scaled(2.0)
        assert total.coefficient("Z1Z2") == 3.0
        assert total.identity_coefficient == 4.0

    def test_matrix_of_x_string(self):
        matrix = PauliSum(1, [("X", 1.0)]).to_matrix()
        np.testing.assert_array_equal(matrix, np.array([[0, 1], [1, 0]]))

    def test_bad_label(self):
        with pytest.raises(DomainError):
            PauliSum(2, [("ZZ", 1.0)]).coefficient("Q1")


class TestInterpolation:
    """Test H0(s) and its ground spaces"""

    @pytest.fixture
    def model(self):
        return Ec3Hamiltonian(REFERENCE_INSTANCE)

    def test_endpoints(self, model):
        np.testing.assert_allclose(model.h0(0.0), model.hb_matrix)
        np.testing.assert_allclose(model.h0(1.0), np.diag(model.hp.entries))

    def test_strength_scales(self, model):
        np.testing.assert_allclose(model.h0(0.3, strength=4.0), 4.0 * model.h0(0.3))

    def test_s_outside_unit_interval(self, model):
        with pytest.raises(DomainError):
            model.h0(1.5)
        with pytest.raises(DomainError):
            h0_matrix(REFERENCE_INSTANCE, -0.1)

    def test_final_ground_state_is_solution(self, model):
        gs = model.ground_space(1.0)
        assert gs.degeneracy == 1
        assert gs.energy == pytest.approx(0.0, abs=1e-12)
        assert abs(gs.basis[0][4]) == pytest.approx(1.0, abs=1e-12)
        assert gs.gap == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_ground_space(self):
        gs = Ec3Hamiltonian(ALL_TRIPLES).ground_space(1.0)
        assert gs.energy == pytest.approx(1.0)
        assert gs.degeneracy == 4
        np.testing.assert_allclose(gs.basis.conj() @ gs.basis.T, np.eye(4), atol=1e-12)

    def test_rejects_non_hermitian(self):
        with pytest.raises(DomainError):
            ground_space(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_dense_cap(self):
        with pytest.raises(CapExceededError):
            Ec3Hamiltonian(REFERENCE_INSTANCE, cap=3)


class TestFormatting:
    """Test coefficient printing"""

    @pytest.mark.parametrize("value,text", [
        (0.375, "3/8"), (-1.5, "-3/2"), (0.0, "0"), (2.0, "2"), (0.1, "0.1"),
    ])
    def test_format_coefficient(self, value, text):
        assert format_coefficient(value) == text
