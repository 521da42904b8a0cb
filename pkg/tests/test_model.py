import itertools
import math

import pytest
from hypothesis import given, strategies as st

from cagen.errors import InvalidArgumentError, InvalidInstanceError, InvalidSolutionError
from cagen.model import (
    CAInstance,
    Interaction,
    all_tests,
    bit_indices,
    count_interactions,
    coverage_pattern,
    enumerate_combinations,
    interaction_from_index,
    interaction_index,
    popcount,
    running_example,
    uniform_instance,
    verify_covering_array,
)
from strategies import instance_and_test, instances


def recursive_subsets(items, t):
    """Independent lexicographic subset generator."""
    if t == 0:
        return [()]
    if len(items) < t:
        return []
    head, rest = items[0], items[1:]
    return [(head,) + s for s in recursive_subsets(rest, t - 1)] + recursive_subsets(rest, t)


class TestCombinations:
    def test_pairwise_of_five(self):
        combos = enumerate_combinations(5, 2)
        assert len(combos) == 10
        assert combos[0] == (0, 1)
        assert combos[-1] == (3, 4)

    def test_full_strength(self):
        assert enumerate_combinations(3, 3) == [(0, 1, 2)]

    def test_matches_recursive_generator(self):
        combos = enumerate_combinations(6, 3)
        assert len(combos) == 20
        assert combos == recursive_subsets(tuple(range(6)), 3)

    @pytest.mark.parametrize("k,t", [(3, 4), (3, 0), (0, 1)])
    def test_invalid(self, k, t):
        with pytest.raises(InvalidInstanceError):
            enumerate_combinations(k, t)


class TestCounting:
    def test_running_example(self, example):
        P, sizes = count_interactions(example)
        assert P == 40
        assert sizes == [4] * 10

    def test_full_strength_mixed(self):
        assert count_interactions(CAInstance(2, (2, 3)))[0] == 6

    def test_three_wise_six_binary(self):
        inst = uniform_instance(3, 6, 2)
        by_formula = math.comb(6, 3) * 2**3
        by_enumeration = sum(
            1
            for combo in itertools.combinations(range(6), 3)
            for _ in itertools.product(*(range(2) for _ in combo))
        )
        assert count_interactions(inst)[0] == by_formula == by_enumeration == 160

    def test_degenerate_domain(self):
        inst = CAInstance(2, (1, 3, 2))
        assert count_interactions(inst) == (3 + 2 + 6, [3, 2, 6])


class TestInstanceValidation:
    def test_bad_strength(self):
        with pytest.raises(InvalidInstanceError):
            CAInstance(3, (2, 2))

    def test_bad_domain(self):
        with pytest.raises(InvalidInstanceError):
            CAInstance(1, (2, 0))

    def test_bad_forbidden(self):
        with pytest.raises(InvalidInstanceError):
            CAInstance(2, (2, 2), forbidden=(((0, 2),),))
        with pytest.raises(InvalidInstanceError):
            CAInstance(2, (2, 2), forbidden=(((0, 0), (0, 1)),))

    def test_value_names_length(self):
        with pytest.raises(InvalidInstanceError):
            CAInstance(1, (2,), value_names=(("a", "b", "c"),))


class TestIndexing:
    def test_first_interaction(self, example):
        assert interaction_index(example, Interaction((0, 1), (0, 0))) == 0

    def test_macos_firefox(self, example):
        assert interaction_index(example, Interaction((0, 1), (1, 1))) == 3

    def test_exhaustive_round_trip(self, example):
        seen = set()
        for p in range(40):
            inter = interaction_from_index(example, p)
            assert interaction_index(example, inter) == p
            seen.add(inter)
        assert len(seen) == 40

    def test_malformed(self, example):
        with pytest.raises(InvalidArgumentError):
            interaction_index(example, Interaction((1, 0), (0, 0)))
        with pytest.raises(InvalidArgumentError):
            interaction_index(example, Interaction((0, 1), (0, 2)))
        with pytest.raises(InvalidArgumentError):
            interaction_from_index(example, 40)

    @given(instances())
    def test_bijection(self, inst):
        P = inst.num_interactions
        indices = [interaction_index(inst, interaction_from_index(inst, p)) for p in range(P)]
        assert indices == list(range(P))


class TestCoveragePattern:
    def test_first_test_covers_ten(self, example):
        assert popcount(coverage_pattern(example, (0, 0, 0, 0, 0))) == 10

    def test_first_test_bit_positions(self, example):
        expected = sorted(
            interaction_index(example, Interaction(c, (0, 0))) for c in example.combinations
        )
        assert expected == [0, 4, 8, 12, 16, 20, 24, 28, 32, 36]
        assert bit_indices(coverage_pattern(example, (0,) * 5)) == expected

    @given(instance_and_test())
    def test_popcount_is_number_of_combinations(self, case):
        inst, test = case
        assert popcount(coverage_pattern(inst, test)) == math.comb(inst.k, inst.strength)

    @given(instance_and_test())
    def test_bits_match_projection(self, case):
        inst, test = case
        bits = set(bit_indices(coverage_pattern(inst, test)))
        for p in range(inst.num_interactions):
            inter = interaction_from_index(inst, p)
            projected = tuple(test[i] for i in inter.combination)
            assert (p in bits) == (projected == inter.values)


class TestVerifier:
    def test_example_suite(self, example, example_suite):
        verdict = verify_covering_array(example, example_suite)
        assert verdict.covering and verdict.uncovered == []

    def test_empty_suite(self, example):
        verdict = verify_covering_array(example, [])
        assert not verdict.covering
        assert verdict.uncovered == list(range(40))

    def test_five_rows_fail(self, example, example_suite):
        verdict = verify_covering_array(example, example_suite[:5])
        assert not verdict.covering and verdict.uncovered

    def test_every_five_subset_fails(self, example, example_suite):
        for subset in itertools.combinations(example_suite, 5):
            assert not verify_covering_array(example, subset)

    def test_forbidden_test_rejected(self):
        inst = running_example(forbidden=[((0, 1), (1, 0))])
        with pytest.raises(InvalidSolutionError, match="forbidden"):
            verify_covering_array(inst, [(1, 0, 0, 0, 0)])

    def test_forbidden_interaction_exempt(self):
        inst = running_example(forbidden=[((0, 1), (1, 0))])
        assert inst.exempt_rows == {interaction_index(inst, Interaction((0, 1), (1, 0)))}

    def test_implied_exemption(self):
        # a=0 forces b=0 and b=0 forbids c=1, so (a=0, c=1) can never appear
        inst = CAInstance(2, (2, 2, 2), forbidden=(((0, 0), (1, 1)), ((1, 0), (2, 1))))
        assert interaction_index(inst, Interaction((0, 2), (0, 1))) in inst.exempt_rows

    @given(instances(max_space=64), st.data())
    def test_monotone(self, inst, data):
        tests = list(all_tests(inst))
        suite = data.draw(st.lists(st.sampled_from(tests), max_size=6))
        extra = data.draw(st.sampled_from(tests))
        before = set(verify_covering_array(inst, suite).uncovered)
        after = set(verify_covering_array(inst, suite + [extra]).uncovered)
        assert after <= before

    @given(instances(max_space=64), st.data())
    def test_full_strength_means_full_product(self, inst, data):
        inst = CAInstance(inst.k, inst.domains)
        tests = list(all_tests(inst))
        suite = data.draw(st.lists(st.sampled_from(tests), unique=True))
        assert verify_covering_array(inst, suite).covering == (len(set(suite)) == len(tests))
