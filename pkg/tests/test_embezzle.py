"""Tests for Schmidt-coefficient extraction from the embezzling state: harmonic
sums, rational approximants, fidelity reports, and the approximate chains."""

import math
from fractions import Fraction

import numpy as np
import pytest

from parind_lab import embezzle as ez
from parind_lab.qcore import SparseState, fidelity, squared_norm


# ---------------------------------------------------------------------------
# Harmonic sums and the interpolated Z


def test_harmonic_number_small_values():
    assert ez.harmonic_number(0) == 0.0
    assert ez.harmonic_number(1) == 1.0
    assert ez.harmonic_number(4) == pytest.approx(25.0 / 12.0, abs=1e-15)


def test_harmonic_number_rejects_negative():
    with pytest.raises(ValueError):
        ez.harmonic_number(-1)


@pytest.mark.parametrize("m", [1, 2, 3, 5, 7])
@pytest.mark.parametrize("n", [1, 2, 17, 100])
def test_interpolated_harmonic_matches_grouped_sum(n, m):
    """Z(n/m) has an independent form: group the n summands of C_n into runs of
    m equal ceilings.  The two routes must agree to near machine precision."""
    z = ez.interpolated_harmonic(Fraction(n, m))
    grouped = ez.grouped_harmonic_sum(n, m)
    assert abs(z - grouped) < 1e-12


def test_interpolated_harmonic_integer_points():
    for k in (1, 5, 42):
        assert ez.interpolated_harmonic(k) == pytest.approx(ez.harmonic_number(k))


def test_interpolated_harmonic_log_bounds():
    for y in np.geomspace(1.0, 1e6, 40):
        z = ez.interpolated_harmonic(float(y))
        assert math.log(y + 1.0) <= z + 1e-12
        assert z <= 1.0 + math.log(y) + 1e-12


def test_grouped_sum_validates_arguments():
    with pytest.raises(ValueError):
        ez.grouped_harmonic_sum(-1, 2)
    with pytest.raises(ValueError):
        ez.grouped_harmonic_sum(5, 0)


# ---------------------------------------------------------------------------
# Exact rational machinery


def test_lcd_thirds():
    r, m = ez.lcd(["1/3", "2/3"])
    assert (r, m) == (3, (1, 2))


def test_lcd_include_half_forces_even_denominator():
    r, m = ez.lcd(["1/3", "2/3"], include_half=True)
    assert (r, m) == (6, (2, 4))


def test_lcd_rejects_bad_sums():
    with pytest.raises(ValueError):
        ez.lcd(["1/3", "1/3"])


def test_lcd_rejects_floats():
    with pytest.raises(TypeError):
        ez.lcd([1.0 / 3.0, 2.0 / 3.0])


def test_rational_approximants_sum_to_one_with_small_error():
    squares = [1.0 / math.pi, 1.0 - 1.0 / math.pi]
    for l in (3, 10, 50):
        approx = ez.rational_approximants(squares, l)
        assert sum(approx) == 1
        for a, c in zip(approx, squares):
            assert abs(float(a) - c) <= len(squares) / (2.0 * l)


def test_rational_approximants_reports_smallest_workable_index():
    # a tiny first coefficient rounds to numerator zero at small l
    squares = [0.01, 0.99]
    with pytest.raises(ValueError, match="l_min"):
        ez.rational_approximants(squares, 2)


# ---------------------------------------------------------------------------
# Specs


def test_spec_from_exact_thirds():
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=100)
    assert (spec.r, spec.m) == (3, (1, 2))
    assert spec.pairs == ((0, 0), (1, 0), (1, 1))
    assert spec.max_m == 2
    assert spec.coefficient_error == 0.0
    assert spec.c_l == pytest.approx(spec.c)


def test_spec_from_reals_has_even_denominator():
    spec = ez.EmbezzleSpec.from_reals([1.0 / math.pi, 1.0 - 1.0 / math.pi], l=10, n=50)
    # denominators reduce: 6/20 and 14/20 share the factor 2, so r = 10 here
    assert spec.r % 2 == 0
    assert (2 * 10) % spec.r == 0
    assert sum(spec.m) == spec.r
    assert spec.l == 10
    assert spec.coefficient_error <= 2.0 / (2.0 * 10)


def test_spec_rejects_inconsistent_numerators():
    with pytest.raises(ValueError):
        ez.EmbezzleSpec(c=(1.0,), n=10, r=3, m=(2,))


def test_spec_with_n_keeps_structure():
    spec = ez.EmbezzleSpec.from_exact(["1/2", "1/2"], n=10)
    bumped = spec.with_n(200)
    assert bumped.n == 200
    assert bumped.m == spec.m


def test_pair_eigenvalue_scheme_distinct_on_slots():
    spec = ez.EmbezzleSpec.from_exact(["1/6", "1/3", "1/2"], n=10)
    values = [ez.pair_eigenvalue_scheme(p) for p in spec.pairs]
    assert len(set(values)) == len(values)


# ---------------------------------------------------------------------------
# States


def test_tau_amplitudes_follow_inverse_harmonic_weights():
    n = 7
    state = ez.tau(n)
    c_n = ez.harmonic_number(n)
    for j in range(n):
        assert state.amplitudes[(j, j)] == pytest.approx(1.0 / math.sqrt(c_n * (j + 1)))


def test_phi_schmidt_is_diagonal():
    state = ez.phi_schmidt([math.sqrt(0.25), math.sqrt(0.75)])
    assert set(state.amplitudes) == {(0, 0), (1, 1)}


def test_embezzled_state_is_slot_diagonal_and_normalized():
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=12)
    state = ez.embezzled_state(spec)
    assert squared_norm(state.amplitudes) == pytest.approx(1.0)
    stats = ez.slot_statistics(state, spec)
    assert math.fsum(stats.weights.values()) == pytest.approx(1.0)


def test_chi_state_weights_are_numerator_fractions():
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=9)
    stats = ez.slot_statistics(ez.chi_state(spec), spec)
    for (i, _j), weight in stats.weights.items():
        assert weight == pytest.approx(spec.c[i] ** 2 / spec.m[i])


def test_slot_statistics_rejects_off_diagonal_states():
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=4)
    registry = ez.embezzled_state(spec).registry
    width = len(registry.labels)
    key = tuple(0 for _ in range(width))
    bumped = list(key)
    bumped[registry.axis("B")] = 1  # break the mirror symmetry on one side
    off_diagonal = SparseState(registry, {tuple(bumped): 1.0})
    with pytest.raises(ValueError, match="not slot-diagonal"):
        ez.slot_statistics(off_diagonal, spec)


# ---------------------------------------------------------------------------
# Fidelity report


def test_direct_sum_matches_projected_overlap():
    """Two routes to the same fidelity: the explicit numpy sum and the overlap
    accumulated over the embezzled state's support."""
    for squares in (["1/3", "2/3"], ["1/6", "1/3", "1/2"]):
        for n in (5, 23, 60):
            spec = ez.EmbezzleSpec.from_exact(squares, n=n)
            report = ez.embezzlement_fidelity(spec)
            assert abs(report.computed_fidelity - ez.direct_fidelity_sum(spec)) < 1e-12


def test_fidelity_frozen_two_level_oracle():
    # hand-computed: c^2 = (1/3, 2/3) at n = 2 gives F = 5/9 + 2 sqrt(2)/9
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=2)
    report = ez.embezzlement_fidelity(spec)
    assert report.computed_fidelity == pytest.approx(
        5.0 / 9.0 + 2.0 * math.sqrt(2.0) / 9.0, abs=1e-14
    )


def test_fidelity_exceeds_z_form_when_numerators_are_nontrivial():
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=100)
    report = ez.embezzlement_fidelity(spec)
    assert report.lower_bound_holds
    assert report.z_form_gap > 0.01  # strict gap, not a tolerance artifact


def test_z_form_equals_direct_sum_when_all_numerators_are_one():
    # m = (1, 1): each block extracts a full copy, the grouped sum degenerates
    spec = ez.EmbezzleSpec.from_exact(["1/2", "1/2"], n=31)
    assert abs(ez.direct_fidelity_sum(spec) - ez.z_form_fidelity(spec)) < 1e-12


def test_trace_distance_bound_and_monotonicity():
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=10)
    previous = None
    for n in (10, 40, 160, 640):
        report = ez.embezzlement_fidelity(spec.with_n(n))
        assert report.distance_bound_holds
        one_minus_f = 1.0 - report.computed_fidelity
        if previous is not None:
            assert one_minus_f < previous
        previous = one_minus_f


def test_distance_bound_requires_enough_levels():
    spec = ez.EmbezzleSpec.from_exact(["1/6", "5/6"], n=3)
    with pytest.raises(ValueError, match="n >= max m"):
        ez.embezzlement_distance_bound(spec)


def test_chi_phi_fidelity_is_one_for_exact_specs():
    spec = ez.EmbezzleSpec.from_exact(["1/6", "1/3", "1/2"], n=8)
    assert ez.chi_phi_fidelity(spec) == pytest.approx(1.0)
    d1, d2 = ez.extraction_distances(spec)
    assert d2 == pytest.approx(0.0, abs=1e-7)
    assert 0.0 < d1 < 1.0


def test_chi_phi_fidelity_below_one_for_approximants():
    spec = ez.EmbezzleSpec.from_reals([1.0 / math.pi, 1.0 - 1.0 / math.pi], l=5, n=20)
    assert ez.chi_phi_fidelity(spec) < 1.0


# ---------------------------------------------------------------------------
# Approximate chains: literal projector route vs slot fast path


def test_pair_chain_literal_vs_fast_route():
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=30)
    state = ez.embezzled_state(spec)
    stats = ez.slot_statistics(state, spec)
    for N in (1, 2):
        literal = ez.correlation_measure_INn(spec, N, (1, 0), (1, 1), state=state)
        fast = ez.fast_pair_chain(spec, N, (1, 0), (1, 1), stats)
        assert abs(literal.value - fast.value) < 1e-12


def test_pair_chain_deviation_bound_holds():
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=50)
    report = ez.correlation_measure_INn(spec, 2, (1, 0), (1, 1))
    assert report.reference_value is not None
    assert abs(report.value - report.reference_value) <= report.deviation_bound
    # the reference chain on the extraction target hits the closed form exactly
    assert report.reference_value == pytest.approx(report.closed_form, abs=1e-12)


def test_pair_chain_rejects_unknown_slots():
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=10)
    with pytest.raises(ValueError, match="not among the spec's slots"):
        ez.correlation_measure_INn(spec, 1, (0, 0), (0, 5))


def test_half_subset_chain_literal_vs_fast_route():
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=14, even_denominator=True)
    state = ez.embezzled_state(spec)
    stats = ez.slot_statistics(state, spec)
    subset = spec.pairs[: spec.r // 2]
    pairing = ez.default_pairing(spec, subset)
    for N in (1, 2):
        literal = ez.correlation_measure_IJlNnl(spec, N, subset, pairing, state=state)
        fast = ez.fast_half_subset_chain(spec, N, subset, pairing, stats)
        assert abs(literal.value - fast.value) < 1e-12


def test_half_subset_chain_deviation_bound_holds():
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=40, even_denominator=True)
    subset = spec.pairs[: spec.r // 2]
    report = ez.correlation_measure_IJlNnl(spec, 2, subset)
    assert abs(report.value - report.closed_form) <= report.deviation_bound


def test_half_subset_uniform_reference_hits_closed_form():
    """On the uniform slot state every pair term collapses to sin^2(pi/4N),
    terminal step included."""
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=6, even_denominator=True)
    stats = ez.slot_statistics(ez.phi_uniform_state(spec), spec)
    for N in (2, 4):
        expected = math.sin(math.pi / (4 * N)) ** 2
        subset = spec.pairs[: spec.r // 2]
        report = ez.fast_half_subset_chain(spec, N, subset, ez.default_pairing(spec, subset), stats)
        for term in report.pair_terms:
            assert term.probability == pytest.approx(expected, abs=1e-12)


def test_default_pairing_is_a_bijection_onto_complement():
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=5, even_denominator=True)
    subset = spec.pairs[: spec.r // 2]
    pairing = ez.default_pairing(spec, subset)
    assert sorted(pairing.values()) == sorted(set(spec.pairs) - set(subset))


def test_half_subset_family_enumerates_small_cases():
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=5, even_denominator=True)
    family = ez.half_subset_family(spec, count=500)
    assert len(family) == math.comb(6, 3)
    for subset, pairing in family:
        assert len(subset) == 3
        assert sorted(pairing.values()) == sorted(set(spec.pairs) - set(subset))


def test_sorted_extreme_half_subset_orders_by_weight():
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=20, even_denominator=True)
    stats = ez.slot_statistics(ez.embezzled_state(spec), spec)
    extreme = ez.sorted_extreme_half_subset(spec, stats)
    assert len(extreme) == spec.r // 2
    cutoff = min(stats.weights[p] for p in extreme)
    for p in set(spec.pairs) - set(extreme):
        assert stats.weights[p] <= cutoff + 1e-15


def test_embezzled_state_fidelity_against_chi_matches_report():
    spec = ez.EmbezzleSpec.from_exact(["1/3", "2/3"], n=25)
    report = ez.embezzlement_fidelity(spec)
    direct = fidelity(ez.embezzled_state(spec), ez.chi_state(spec))
    assert direct == pytest.approx(report.computed_fidelity, abs=1e-12)
