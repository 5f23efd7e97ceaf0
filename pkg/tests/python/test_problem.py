"""
Unit Tests for the EC3 Problem Model
Tests instance validation, document parsing, clause energies and the brute-force oracle
"""

import json
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT))

from ec3lab import problem
from ec3lab.errors import CapExceededError, InstanceParseError, InstanceValidationError
from ec3lab.problem import (
    REFERENCE_INSTANCE,
    Assignment,
    Ec3Instance,
    brute_force_solutions,
    clause_energy,
    energy_table,
    load_instance,
    parse_instance,
    sorted_assignments,
    to_document,
    violated_count,
)

# Every triple of four bits; no assignment satisfies all four clauses.
ALL_TRIPLES = Ec3Instance(n_bits=4, clauses=((1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)))


class TestAssignment:
    """Test bit ordering of assignments"""

    def test_bit_one_is_most_significant(self):
        a = Assignment.from_string("0100")
        assert a.to_index() == 4
        assert a[1] == 0 and a[2] == 1
        assert str(Assignment.from_index(4, 4)) == "0100"

    def test_index_round_trip_covers_all_states(self):
        for index in range(16):
            assert Assignment.from_index(index, 4).to_index() == index

    def test_rejects_non_binary_bits(self):
        with pytest.raises(ValueError):
            Assignment((0, 2, 1))


class TestInstanceValidation:
    """Test instance invariants"""

    def test_reference_instance(self):
        assert REFERENCE_INSTANCE.n_bits == 4
        assert REFERENCE_INSTANCE.num_clauses == 3
        assert REFERENCE_INSTANCE.dimension == 16
        assert REFERENCE_INSTANCE.bit_multiplicities().tolist() == [2, 3, 2, 2]

    def test_bit_out_of_range_names_clause(self):
        with pytest.raises(InstanceValidationError) as excinfo:
            Ec3Instance(n_bits=4, clauses=((1, 2, 3), (2, 3, 5)))
        assert excinfo.value.clause_index == 1
        assert excinfo.value.clause == (2, 3, 5)
        assert "clause #2" in str(excinfo.value)

    def test_repeated_bit_rejected(self):
        with pytest.raises(InstanceValidationError):
            Ec3Instance(n_bits=3, clauses=((1, 1, 2),))

    def test_clause_length_checked(self):
        with pytest.raises(InstanceValidationError):
            Ec3Instance(n_bits=3, clauses=((1, 2),))

    def test_empty_instance_needs_opt_in(self):
        with pytest.raises(InstanceValidationError):
            Ec3Instance(n_bits=3, clauses=())
        assert Ec3Instance(n_bits=3, clauses=(), allow_empty=True).num_clauses == 0

    def test_zero_bits_rejected(self):
        with pytest.raises(InstanceValidationError):
            Ec3Instance(n_bits=0, clauses=())


class TestInstanceDocument:
    """Test JSON parsing and serialization"""

    def test_parse_keeps_clause_order(self):
        inst = parse_instance('{"n": 4, "clauses": [[2, 3, 4], [1, 2, 3]]}')
        assert inst.clauses == ((2, 3, 4), (1, 2, 3))

    def test_malformed_json_reports_position(self):
        with pytest.raises(InstanceParseError) as excinfo:
            parse_instance('{"n": 4,\n "clauses": [[1, 2, 3]')
        assert excinfo.value.line == 2
        assert excinfo.value.column is not None

    def test_missing_field(self):
        with pytest.raises(InstanceParseError) as excinfo:
            parse_instance('{"clauses": [[1, 2, 3]]}')
        assert "n" in str(excinfo.value)

    def test_non_positive_n(self):
        with pytest.raises(InstanceParseError):
            parse_instance('{"n": 0, "clauses": []}')

    def test_document_round_trip(self):
        text = to_document(REFERENCE_INSTANCE)
        assert json.loads(text) == {"n": 4, "clauses": [[1, 2, 3], [2, 3, 4], [1, 2, 4]]}
        assert parse_instance(text) == REFERENCE_INSTANCE

    def test_load_builtin_and_file(self, tmp_path):
        assert load_instance("@paper") == REFERENCE_INSTANCE
        assert load_instance("@reference") == REFERENCE_INSTANCE
        path = tmp_path / "reference.ec3"
        path.write_text(to_document(REFERENCE_INSTANCE))
        assert load_instance(str(path)) == REFERENCE_INSTANCE

    def test_unknown_builtin(self):
        with pytest.raises(InstanceParseError):
            load_instance("@nothing")


class TestClauseEnergy:
    """Test clause and instance energies"""

    @pytest.mark.parametrize("bits,expected", [
        ("100", 0), ("010", 0), ("001", 0),
        ("000", 1), ("110", 1), ("011", 1), ("111", 1),
    ])
    def test_exactly_one_satisfies(self, bits, expected):
        assert clause_energy((1, 2, 3), Assignment.from_string(bits)) == expected

    def test_reference_solution_has_zero_energy(self):
        assert violated_count(REFERENCE_INSTANCE, Assignment.from_string("0100")) == 0
        assert violated_count(REFERENCE_INSTANCE, Assignment.from_string("0000")) == 3

    def test_energy_table_matches_scalar_count(self):
        table = energy_table(REFERENCE_INSTANCE)
        for index in range(16):
            a = Assignment.from_index(index, 4)
            assert table[index] == violated_count(REFERENCE_INSTANCE, a)

    def test_energy_table_slices(self):
        full = energy_table(ALL_TRIPLES)
        np.testing.assert_array_equal(energy_table(ALL_TRIPLES, 5, 11), full[5:11])


class TestBruteForce:
    """Test the exhaustive oracle"""

    def test_reference_instance_unique_solution(self):
        energy, winners = brute_force_solutions(REFERENCE_INSTANCE)
        assert energy == 0
        assert winners == frozenset({Assignment.from_string("0100")})

    def test_duplicate_clause(self):
        inst = Ec3Instance(n_bits=3, clauses=((1, 2, 3), (1, 2, 3)))
        energy, winners = brute_force_solutions(inst)
        assert energy == 0
        assert [str(a) for a in sorted_assignments(winners)] == ["001", "010", "100"]

    def test_unsatisfiable_instance(self):
        energy, winners = brute_force_solutions(ALL_TRIPLES)
        assert energy == 1
        assert {str(a) for a in winners} == {"1000", "0100", "0010", "0001"}

    def test_result_independent_of_chunking(self, monkeypatch):
        reference = brute_force_solutions(ALL_TRIPLES)
        monkeypatch.setattr(problem, "ENUMERATION_CHUNK", 3)
        assert brute_force_solutions(ALL_TRIPLES) == reference

    def test_enumeration_cap(self):
        with pytest.raises(CapExceededError) as excinfo:
            brute_force_solutions(REFERENCE_INSTANCE, cap=3)
        assert excinfo.value.size == 4
        assert excinfo.value.cap == 3
