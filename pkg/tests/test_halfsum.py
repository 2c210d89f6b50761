"""Tests for the half-subset window construction: the exact identity, the
per-size coefficient, and the deviation lemma on weighted families."""

import itertools
import random
from fractions import Fraction

import pytest

from parind_lab import halfsum


def random_rational_vector(rng, r, denominator=64):
    return [Fraction(rng.randrange(0, denominator + 1), denominator) for _ in range(r)]


def test_window_families_tile_positions():
    system = halfsum.build_system(10, (0, 1))
    assert len(system.K_sets) == 5
    assert len(system.L_sets) == system.x == 3
    for window in system.K_sets + system.L_sets:
        assert len(window) == 5
    # every K window contains J itself
    for window in system.K_sets:
        assert set(system.J) <= set(window)


@pytest.mark.parametrize("r", [2, 4, 6, 8, 10, 12])
def test_identity_exact_for_random_rationals(r):
    """The signed window combination reproduces the subset sum exactly, for all
    subset sizes up to r/2 and random exact p."""
    rng = random.Random(r)
    for size in range(1, r // 2 + 1):
        J = tuple(sorted(rng.sample(range(r), size)))
        system = halfsum.build_system(r, J)
        for _ in range(20):
            p = random_rational_vector(rng, r)
            result = halfsum.identity_check(system, p)
            assert result["holds"]
            assert result["lhs"] == result["rhs"]  # exact Fraction equality


def test_identity_independent_of_enumeration_order():
    rng = random.Random(5)
    J = (1, 4)
    complement = [i for i in range(8) if i not in J]
    p = random_rational_vector(rng, 8)
    references = set()
    for _ in range(10):
        order = complement[:]
        rng.shuffle(order)
        system = halfsum.build_system(8, J, f_order=order)
        result = halfsum.identity_check(system, p)
        assert result["holds"]
        references.add(result["rhs"])
    assert len(references) == 1  # same value whatever the window layout


def test_identity_exhaustive_tiny_case():
    # r = 4: every J with #J <= 2, every 0/1 vector — fully enumerable
    for size in (1, 2):
        for J in itertools.combinations(range(4), size):
            system = halfsum.build_system(4, J)
            for bits in itertools.product([Fraction(0), Fraction(1)], repeat=4):
                assert halfsum.identity_check(system, list(bits))["holds"]


def test_identity_with_float_entries_uses_slack():
    system = halfsum.build_system(6, (0,))
    p = [0.1, 0.7, 0.3, 0.2, 0.9, 0.4]
    result = halfsum.identity_check(system, p)
    assert result["holds"]
    assert abs(result["lhs"] - result["rhs"]) < 1e-12


def test_system_rejects_oversized_subsets():
    with pytest.raises(ValueError, match="complement first"):
        halfsum.build_system(6, (0, 1, 2, 3))


def test_system_rejects_odd_r():
    with pytest.raises(ValueError):
        halfsum.build_system(5, (0,))


def test_system_rejects_wrong_enumeration():
    with pytest.raises(ValueError, match="enumerate the complement"):
        halfsum.build_system(4, (0,), f_order=(1, 2, 0))


def test_identity_check_rejects_wrong_length():
    system = halfsum.build_system(4, (0,))
    with pytest.raises(ValueError):
        halfsum.identity_check(system, [Fraction(1, 2)] * 3)


def test_bound_coefficient_values():
    assert halfsum.bound_coefficient(10, 2) == Fraction(8, 5)
    assert halfsum.bound_coefficient(10, 8) == Fraction(8, 5)  # via complement
    assert halfsum.bound_coefficient(10, 5) == 1
    assert halfsum.bound_coefficient(4, 0) == 2
    # strictly below 2 for nonempty proper subsets
    for r in (4, 6, 8, 10):
        for size in range(1, r):
            assert halfsum.bound_coefficient(r, size) < 2


def test_lemma_bound_on_exact_family():
    """A two-member family whose half-subset sums all sit within 1/8 of 1/2 must
    keep every subset within the coefficient-scaled deviation of #J/r."""
    uniform = tuple(Fraction(1, 4) for _ in range(4))
    tilted = (Fraction(3, 8), Fraction(1, 8), Fraction(1, 4), Fraction(1, 4))
    family = halfsum.WeightedSequenceFamily(
        weights=(Fraction(1, 2), Fraction(1, 2)), sequences=(uniform, tilted)
    )
    report = halfsum.lemma_bound_check(family, Fraction(1, 8))
    assert report["hypothesis_mode"] == "enumerated"
    assert report["hypothesis_holds"]
    assert report["conclusion_holds"]
    assert report["passed"]


def test_lemma_bound_detects_violated_hypothesis():
    # all the weight on one extreme sequence: half-subset sums stray far from 1/2
    spiky = (Fraction(1), Fraction(0), Fraction(0), Fraction(0))
    family = halfsum.WeightedSequenceFamily(weights=(Fraction(1),), sequences=(spiky,))
    report = halfsum.lemma_bound_check(family, Fraction(1, 100))
    assert not report["hypothesis_holds"]
    assert report["worst_half_subset"] != ()


def test_lemma_bound_is_tight_up_to_coefficient():
    """The measured deviation can exceed epsilon itself (only the scaled bound
    holds), confirming the coefficient is doing real work."""
    rng = random.Random(2)
    r = 8
    sequences = []
    for _ in range(6):
        # perturb the uniform sequence while keeping total mass moderate
        seq = [Fraction(1, r) + Fraction(rng.randrange(-3, 4), 8 * r) for _ in range(r)]
        sequences.append(tuple(seq))
    family = halfsum.WeightedSequenceFamily(
        weights=tuple(Fraction(1, 6) for _ in range(6)), sequences=tuple(sequences)
    )
    epsilon = family.sorted_extreme_deviation() + Fraction(1, 1000)
    report = halfsum.lemma_bound_check(family, epsilon)
    assert report["passed"]
    for row in report["subsets"]:
        if 0 < row["size"] < r:
            assert row["measured"] < 2 * epsilon


def test_sorted_extreme_dominates_every_half_subset():
    rng = random.Random(9)
    r = 6
    sequences = tuple(
        tuple(random_rational_vector(rng, r)) for _ in range(4)
    )
    family = halfsum.WeightedSequenceFamily(
        weights=tuple(Fraction(1, 4) for _ in range(4)), sequences=sequences
    )
    extreme = family.sorted_extreme_deviation()
    for subset in itertools.combinations(range(r), r // 2):
        assert family.average_deviation(subset, Fraction(1, 2)) <= extreme


def test_family_validates_weights():
    with pytest.raises(ValueError, match="sum to 1"):
        halfsum.WeightedSequenceFamily(
            weights=(Fraction(1, 2),), sequences=((Fraction(1), Fraction(0)),)
        )
    with pytest.raises(ValueError, match="same length"):
        halfsum.WeightedSequenceFamily(
            weights=(Fraction(1, 2), Fraction(1, 2)),
            sequences=((Fraction(1),), (Fraction(1), Fraction(0))),
        )
