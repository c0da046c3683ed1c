"""Layered automata, copy tensors, the network compiler, and model counting."""

import itertools

import numpy as np
import pytest

from helpers import brute_force_count, random_bnn, random_cnf
from ttshap.automata import (
    Bnn,
    BnnLayer,
    CnfFormula,
    bnn_collapse_lookup,
    bnn_forward,
    bnn_from_json,
    bnn_to_json,
    bnn_to_tt,
    clause_to_ldfa,
    cnf_model_count,
    cnf_to_bnn,
    cnf_to_tt_via_clause_ldfas,
    copy_tensor_tt,
    ldfa_product,
    ldfa_to_tt,
    neuron_to_ldfa,
    read_dimacs,
)
from ttshap.errors import ResourceLimitError, ValidationError
from ttshap.train import tt_eval, tt_to_dense


def all_bits(n):
    return itertools.product((0, 1), repeat=n)


def symbols(bits):
    return tuple(b + 1 for b in bits)


class TestClauseLdfa:
    def test_three_literal_clause_counts(self):
        automaton = clause_to_ldfa([1, -3, 4], 4)
        accepted = sum(automaton.accepts(symbols(b)) for b in all_bits(4))
        brute = sum(
            (b[0] == 1) or (b[2] == 0) or (b[3] == 1) for b in all_bits(4)
        )
        assert accepted == brute == 14

    def test_single_positive_literal(self):
        automaton = clause_to_ldfa([1], 1)
        assert automaton.accepts((2,))
        assert not automaton.accepts((1,))

    def test_tautology_accepts_everything(self):
        automaton = clause_to_ldfa([1, -1], 1)
        assert automaton.accepts((1,))
        assert automaton.accepts((2,))

    def test_out_of_range_literal(self):
        with pytest.raises(ValidationError):
            clause_to_ldfa([5], 3)


class TestNeuronLdfa:
    def test_mixed_signs_threshold_two(self):
        automaton = neuron_to_ldfa([1, -1, 1], 2)
        accepted = sum(automaton.accepts(symbols(b)) for b in all_bits(3))
        brute = sum(b[0] + (1 - b[1]) + b[2] >= 2 for b in all_bits(3))
        assert accepted == brute == 4

    def test_zero_threshold_accepts_all(self):
        automaton = neuron_to_ldfa([1, 1], 0)
        assert all(automaton.accepts(symbols(b)) for b in all_bits(2))

    def test_unreachable_threshold_accepts_none(self):
        automaton = neuron_to_ldfa([1, 1], 3)
        assert not any(automaton.accepts(symbols(b)) for b in all_bits(2))

    def test_zero_weight_never_counts(self):
        automaton = neuron_to_ldfa([1, 0, 1], 2)
        for bits in all_bits(3):
            assert automaton.accepts(symbols(bits)) == (bits[0] + bits[2] >= 2)

    def test_threshold_range_enforced(self):
        with pytest.raises(ValidationError):
            neuron_to_ldfa([1, 1], 4)


class TestProduct:
    def test_intersection_with_accept_all_is_identity(self):
        clause = clause_to_ldfa([1, -2], 3)
        everything = neuron_to_ldfa([1, 1, 1], 0)
        product = ldfa_product([clause, everything])
        for bits in all_bits(3):
            assert product.accepts(symbols(bits)) == clause.accepts(symbols(bits))

    def test_disjoint_singletons_empty(self):
        # two counters that accept only the all-ones and only the all-zeros input
        ones_only = neuron_to_ldfa([1, 1], 2)
        zeros_only = neuron_to_ldfa([-1, -1], 2)
        product = ldfa_product([ones_only, zeros_only])
        assert not any(product.accepts(symbols(b)) for b in all_bits(2))

    def test_three_random_clauses_equal_conjunction(self):
        rng = np.random.default_rng(0)
        cnf = random_cnf(rng, 5, 3)
        automata = [clause_to_ldfa(c, 5) for c in cnf.clauses]
        product = ldfa_product(automata)
        for bits in all_bits(5):
            assert product.accepts(symbols(bits)) == all(
                a.accepts(symbols(bits)) for a in automata
            )

    def test_mismatched_sites_rejected(self):
        with pytest.raises(ValidationError):
            ldfa_product([clause_to_ldfa([1], 2), clause_to_ldfa([1], 3)])


class TestLdfaToTrain:
    def test_accept_all_single_layer(self):
        automaton = neuron_to_ldfa([1], 0)
        tt = ldfa_to_tt(automaton)
        assert tt_eval(tt, (1,)).item() == 1.0
        assert tt_eval(tt, (2,)).item() == 1.0

    def test_clause_language_equality(self):
        automaton = clause_to_ldfa([1, -3, 4], 4)
        tt = ldfa_to_tt(automaton)
        for bits in all_bits(4):
            assert tt_eval(tt, symbols(bits)).item() == float(automaton.accepts(symbols(bits)))

    def test_neuron_language_equality(self):
        automaton = neuron_to_ldfa([1, -1, 1], 2)
        tt = ldfa_to_tt(automaton)
        for bits in all_bits(3):
            assert tt_eval(tt, symbols(bits)).item() == float(automaton.accepts(symbols(bits)))

    def test_open_final_leg_exposes_state(self):
        automaton = neuron_to_ldfa([1, 1], 1)
        tt = ldfa_to_tt(automaton, open_final=True)
        assert tt.right_boundary == 2  # counter states 0 and 1
        out = tt_eval(tt, (2, 1)).array.reshape(-1)
        np.testing.assert_array_equal(out, [0.0, 1.0])

    def test_product_language_via_random_cnfs(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            cnf = random_cnf(rng, 4, 2)
            tt = cnf_to_tt_via_clause_ldfas(cnf)
            for bits in all_bits(4):
                assert tt_eval(tt, symbols(bits)).item() == float(cnf.evaluate(bits))

    def test_language_equality_at_twelve_sites(self):
        clause = clause_to_ldfa([2, -7, 11], 12)
        counter = neuron_to_ldfa([1, -1, 0, 1, 1, -1, 0, 1, -1, 1, 0, -1], 4)
        for automaton in (clause, counter):
            tt = ldfa_to_tt(automaton)
            for bits in all_bits(12):
                x = symbols(bits)
                assert tt_eval(tt, x).item() == float(automaton.accepts(x))


class TestCopyTensor:
    def test_order3_dim2(self):
        dense = tt_to_dense(copy_tensor_tt(3, 2)).array
        nonzero = np.argwhere(dense == 1.0)
        assert dense.sum() == 2
        assert {tuple(r) for r in nonzero} == {(0, 0, 0), (1, 1, 1)}

    def test_order1_is_all_ones(self):
        np.testing.assert_array_equal(tt_to_dense(copy_tensor_tt(1, 3)).array, np.ones(3))

    def test_order4_dim3(self):
        dense = tt_to_dense(copy_tensor_tt(4, 3)).array
        assert dense.sum() == 3
        for idx in itertools.product(range(3), repeat=4):
            expected = 1.0 if len(set(idx)) == 1 else 0.0
            assert dense[idx] == expected


class TestLookup:
    def test_depth_one_identity(self):
        bnn = Bnn(
            layers=[BnnLayer(weights=np.asarray([[1, -1], [1, 1]]), reified=np.asarray([1, 2]))],
            n_inputs=2,
        )
        table = bnn_collapse_lookup(bnn)
        for bits in all_bits(2):
            row = int("".join(str(b) for b in bits), 2)
            np.testing.assert_array_equal(table[row], np.asarray(bits, dtype=float))

    def test_indifferent_tail_gives_constant_table(self):
        bnn = Bnn(
            layers=[
                BnnLayer(weights=np.asarray([[1, 1]]), reified=np.asarray([1])),
                BnnLayer(weights=np.asarray([[1]]), reified=np.asarray([0])),
            ],
            n_inputs=2,
        )
        table = bnn_collapse_lookup(bnn)
        np.testing.assert_array_equal(table, np.ones((2, 1)))

    def test_matches_forward_pass(self):
        rng = np.random.default_rng(2)
        bnn = random_bnn(rng, n_inputs=4, first_width=3, depth=3)
        table = bnn_collapse_lookup(bnn)
        tail = Bnn(layers=bnn.layers[1:], n_inputs=3)
        for bits in all_bits(3):
            row = int("".join(str(b) for b in bits), 2)
            np.testing.assert_array_equal(table[row], bnn_forward(tail, bits).astype(float))


class TestBnnToTrain:
    def test_single_neuron(self):
        bnn = Bnn(
            layers=[BnnLayer(weights=np.asarray([[1, -1, 1]]), reified=np.asarray([2]))],
            n_inputs=3,
        )
        tt = bnn_to_tt(bnn)
        accepted = sum(tt_eval(tt, symbols(b)).item() for b in all_bits(3))
        assert accepted == 4.0

    def test_conjunction_lookup(self):
        # two threshold predicates followed by an AND output neuron
        bnn = Bnn(
            layers=[
                BnnLayer(weights=np.asarray([[1, 1, -1, 1], [-1, 1, 1, -1]]),
                         reified=np.asarray([1, 1])),
                BnnLayer(weights=np.asarray([[1, 1]]), reified=np.asarray([2])),
            ],
            n_inputs=4,
        )
        tt = bnn_to_tt(bnn)
        for bits in all_bits(4):
            np.testing.assert_array_equal(
                tt_eval(tt, symbols(bits)).array.reshape(-1),
                bnn_forward(bnn, bits).astype(float),
            )

    def test_exhaustive_forward_equality_random(self):
        rng = np.random.default_rng(3)
        for _ in range(6):
            n = int(rng.integers(2, 8))
            bnn = random_bnn(rng, n_inputs=n, first_width=int(rng.integers(1, 4)),
                             depth=int(rng.integers(1, 4)))
            tt = bnn_to_tt(bnn)
            for bits in all_bits(n):
                np.testing.assert_array_equal(
                    tt_eval(tt, symbols(bits)).array.reshape(-1),
                    bnn_forward(bnn, bits).astype(float),
                )

    def test_bond_bounded_by_threshold_product(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            bnn = random_bnn(rng, n_inputs=5, first_width=3, depth=2)
            tt = bnn_to_tt(bnn)
            bound = int(np.prod([r + 1 for r in bnn.layers[0].reified]))
            assert max(core.shape[0] for core in tt.arrays) <= bound

    def test_bond_cap_reports_bound(self):
        bnn = Bnn(
            layers=[BnnLayer(weights=np.asarray([[1, 1, 1], [1, -1, 1]]),
                             reified=np.asarray([3, 3]))],
            n_inputs=3,
        )
        with pytest.raises(ResourceLimitError, match=r"\(3\+1\)\^2"):
            bnn_to_tt(bnn, bond_cap=8)

    def test_json_roundtrip(self):
        rng = np.random.default_rng(5)
        bnn = random_bnn(rng, n_inputs=3, first_width=2, depth=2)
        again = bnn_from_json(bnn_to_json(bnn))
        for a, b in zip(bnn.layers, again.layers):
            np.testing.assert_array_equal(a.weights, b.weights)
            np.testing.assert_array_equal(a.reified, b.reified)


class TestCnfGadget:
    def test_disjunction_has_seven_models(self):
        cnf = CnfFormula(n=3, clauses=[[1, 2, 3]])
        bnn = cnf_to_bnn(cnf)
        satisfied = sum(bnn_forward(bnn, bits)[0] for bits in all_bits(3))
        assert satisfied == 7

    def test_contradiction_has_none(self):
        cnf = CnfFormula(n=1, clauses=[[1], [-1]])
        bnn = cnf_to_bnn(cnf)
        assert sum(bnn_forward(bnn, bits)[0] for bits in all_bits(1)) == 0

    def test_forward_equals_formula_on_random_cnfs(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            cnf = random_cnf(rng, int(rng.integers(2, 8)), int(rng.integers(1, 6)))
            bnn = cnf_to_bnn(cnf)
            for bits in all_bits(cnf.n):
                assert bool(bnn_forward(bnn, bits)[0]) == cnf.evaluate(bits)

    def test_wide_clause_rejected(self):
        with pytest.raises(ValidationError):
            cnf_to_bnn(CnfFormula(n=4, clauses=[[1, 2, 3, 4]]))


class TestModelCount:
    def test_single_clause(self):
        cnf = CnfFormula(n=4, clauses=[[1, -3, 4]])
        assert cnf_model_count(cnf, "via_clause_ldfas") == 14
        assert cnf_model_count(cnf, "via_bnn") == 14

    def test_contradiction(self):
        cnf = CnfFormula(n=2, clauses=[[1], [-1]])
        assert cnf_model_count(cnf, "via_clause_ldfas") == 0
        assert cnf_model_count(cnf, "via_bnn") == 0

    def test_both_routes_match_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(12):
            cnf = random_cnf(rng, int(rng.integers(2, 8)), int(rng.integers(1, 6)))
            expected = brute_force_count(cnf)
            assert cnf_model_count(cnf, "via_clause_ldfas") == expected
            assert cnf_model_count(cnf, "via_bnn") == expected

    def test_unknown_route(self):
        with pytest.raises(ValidationError):
            cnf_model_count(CnfFormula(n=1, clauses=[[1]]), "via_magic")


class TestDimacs:
    def test_parse_with_comments(self):
        cnf = read_dimacs("c header\np cnf 3 2\n1 -2 0\n2 3 0\n")
        assert cnf.n == 3
        assert cnf.clauses == [[1, -2], [2, 3]]

    def test_clause_split_across_lines(self):
        cnf = read_dimacs("p cnf 3 1\n1\n-2 3 0\n")
        assert cnf.clauses == [[1, -2, 3]]

    def test_missing_problem_line(self):
        with pytest.raises(ValidationError):
            read_dimacs("1 2 0\n")
