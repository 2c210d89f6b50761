"""Tests for the sparse-state engine: registries, states, projectors,
observables, Schmidt decomposition, and structured basis maps."""

import math

import numpy as np
import pytest

from parind_lab.qcore import (
    Observable,
    RankedProjector,
    SparseState,
    SystemRegistry,
    apply_structured_map,
    basis_span_projector,
    basis_state,
    born_probability,
    complete_with_complement,
    fidelity,
    identity_map,
    identity_projector,
    inner_product,
    joint_probability,
    outcome_distribution,
    schmidt_decompose,
    span_projector,
    StructuredBasisMap,
    tensor,
    trace_distance_pure,
    two_outcome_observable,
)


def random_state(rng, registry, *, complex_amps=True):
    dim = registry.total_dimension
    vec = rng.normal(size=dim)
    if complex_amps:
        vec = vec + 1j * rng.normal(size=dim)
    vec = vec / np.linalg.norm(vec)
    keys = list(np.ndindex(*registry.dimensions))
    return SparseState(registry, {keys[k]: vec[k] for k in range(dim)})


def test_registry_axis_and_restrict():
    registry = SystemRegistry((("A", 2), ("B", 3), ("C", 4)))
    assert registry.axis("B") == 1
    assert registry.dimensions == (2, 3, 4)
    assert registry.total_dimension == 24
    sub = registry.restrict(("C", "A"))
    # restriction preserves host order, not request order
    assert sub.labels == ("A", "C")


def test_registry_rejects_duplicate_labels():
    with pytest.raises(ValueError):
        SystemRegistry((("A", 2), ("A", 2)))


def test_merged_with_rejects_shared_labels():
    left = SystemRegistry((("A", 2),))
    right = SystemRegistry((("A", 3),))
    with pytest.raises(ValueError):
        left.merged_with(right)


def test_state_requires_normalization():
    registry = SystemRegistry((("A", 2),))
    with pytest.raises(ValueError):
        SparseState(registry, {(0,): 1.0, (1,): 1.0})


def test_from_terms_normalizes():
    registry = SystemRegistry((("A", 2),))
    state = SparseState.from_terms(registry, {(0,): 3.0, (1,): 4.0}, normalize=True)
    assert state.amplitudes[(0,)] == pytest.approx(0.6)
    assert state.amplitudes[(1,)] == pytest.approx(0.8)


def test_state_drops_zero_amplitudes():
    registry = SystemRegistry((("A", 3),))
    state = SparseState(registry, {(0,): 1.0, (1,): 0.0, (2,): 1e-300})
    assert state.nonzero_count == 1


def test_basis_state_positional_and_by_label():
    registry = SystemRegistry((("A", 2), ("B", 3)))
    assert basis_state(registry, (1, 2)).amplitudes == {(1, 2): 1.0}
    assert basis_state(registry, {"B": 2, "A": 1}).amplitudes == {(1, 2): 1.0}


def test_tensor_multiplies_amplitudes():
    a = SparseState(SystemRegistry((("A", 2),)), {(0,): 0.6, (1,): 0.8})
    b = SparseState(SystemRegistry((("B", 2),)), {(1,): 1.0})
    joint = tensor(a, b)
    assert joint.amplitudes == {(0, 1): pytest.approx(0.6), (1, 1): pytest.approx(0.8)}


def test_inner_product_aligns_subsystem_order():
    """<a|b> must not depend on the order in which registries list subsystems."""
    reg_ab = SystemRegistry((("A", 2), ("B", 2)))
    reg_ba = SystemRegistry((("B", 2), ("A", 2)))
    a = SparseState(reg_ab, {(0, 1): 1.0})
    b = SparseState(reg_ba, {(1, 0): 1.0})  # same physical state |0>_A |1>_B
    assert inner_product(a, b) == pytest.approx(1.0)


def test_fidelity_and_trace_distance_relation():
    rng = np.random.default_rng(11)
    registry = SystemRegistry((("S", 4),))
    a, b = random_state(rng, registry), random_state(rng, registry)
    f = fidelity(a, b)
    assert trace_distance_pure(a, b) == pytest.approx(math.sqrt(1 - f * f))


def test_trace_distance_bounds_projector_probabilities():
    """D(a, b) >= |Pr_a(P) - Pr_b(P)| for any projector P — the inequality every
    chained deviation bound in the package ultimately rests on."""
    rng = np.random.default_rng(7)
    registry = SystemRegistry((("S", 5),))
    for _ in range(50):
        a, b = random_state(rng, registry), random_state(rng, registry)
        kets = [random_state(rng, registry)]
        p = span_projector(kets)
        gap = abs(born_probability(a, p) - born_probability(b, p))
        assert gap <= trace_distance_pure(a, b) + 1e-12


def test_span_projector_requires_orthonormal_kets():
    registry = SystemRegistry((("A", 2),))
    plus = SparseState(registry, {(0,): math.sqrt(0.5), (1,): math.sqrt(0.5)})
    with pytest.raises(ValueError):
        span_projector([plus, basis_state(registry, (0,))])


def test_born_probability_basics():
    registry = SystemRegistry((("A", 2),))
    plus = SparseState(registry, {(0,): math.sqrt(0.5), (1,): math.sqrt(0.5)})
    p0 = span_projector([basis_state(registry, (0,))])
    assert born_probability(plus, p0) == pytest.approx(0.5)
    assert born_probability(plus, p0.complement()) == pytest.approx(0.5)
    assert born_probability(plus, identity_projector(registry)) == pytest.approx(1.0)


def test_born_probability_embeds_subregistry_projector():
    registry = SystemRegistry((("A", 2), ("B", 2)))
    bell = SparseState(
        registry, {(0, 0): math.sqrt(0.5), (1, 1): math.sqrt(0.5)}
    )
    a_reg = registry.restrict(("A",))
    p = span_projector([basis_state(a_reg, (0,))])
    assert born_probability(bell, p) == pytest.approx(0.5)


def test_joint_probability_perfect_correlation():
    registry = SystemRegistry((("A", 2), ("B", 2)))
    bell = SparseState(registry, {(0, 0): math.sqrt(0.5), (1, 1): math.sqrt(0.5)})
    a0 = span_projector([basis_state(registry.restrict(("A",)), (0,))])
    b0 = span_projector([basis_state(registry.restrict(("B",)), (0,))])
    b1 = span_projector([basis_state(registry.restrict(("B",)), (1,))])
    assert joint_probability(bell, [a0, b0]) == pytest.approx(0.5)
    assert joint_probability(bell, [a0, b1]) == pytest.approx(0.0)


def test_joint_probability_order_invariant_on_disjoint_wings():
    rng = np.random.default_rng(3)
    registry = SystemRegistry((("A", 3), ("B", 3)))
    state = random_state(rng, registry)
    pa = basis_span_projector(registry.restrict(("A",)), [(0,), (2,)])
    pb = basis_span_projector(registry.restrict(("B",)), [(1,)])
    assert joint_probability(state, [pa, pb]) == pytest.approx(
        joint_probability(state, [pb, pa])
    )


def test_observable_rejects_nonorthogonal_branches():
    registry = SystemRegistry((("A", 2),))
    plus = SparseState(registry, {(0,): math.sqrt(0.5), (1,): math.sqrt(0.5)})
    with pytest.raises(ValueError):
        Observable(
            (
                (1.0, span_projector([basis_state(registry, (0,))])),
                (-1.0, span_projector([plus])),
            )
        )


def test_observable_rejects_duplicate_eigenvalues():
    registry = SystemRegistry((("A", 2),))
    with pytest.raises(ValueError):
        Observable(
            (
                (1.0, span_projector([basis_state(registry, (0,))])),
                (1.0, span_projector([basis_state(registry, (1,))])),
            )
        )


def test_observable_requires_identity_resolution():
    registry = SystemRegistry((("A", 3),))
    with pytest.raises(ValueError):
        Observable(
            (
                (1.0, span_projector([basis_state(registry, (0,))])),
                (-1.0, span_projector([basis_state(registry, (1,))])),
            )
        )


def test_two_outcome_observable_distribution_sums_to_one():
    rng = np.random.default_rng(5)
    registry = SystemRegistry((("S", 4),))
    state = random_state(rng, registry)
    obs = two_outcome_observable([random_state(rng, registry)])
    dist = outcome_distribution(state, obs)
    assert set(dist) == {1.0, -1.0}
    assert sum(dist.values()) == pytest.approx(1.0)


def test_complete_with_complement_closes_partial_observable():
    registry = SystemRegistry((("S", 5),))
    branches = [
        (2.0, basis_span_projector(registry, [(0,), (1,)])),
        (3.0, basis_span_projector(registry, [(2,)])),
    ]
    obs = complete_with_complement(branches, 0.0)
    state = basis_state(registry, (4,))
    dist = outcome_distribution(state, obs)
    assert dist[0.0] == pytest.approx(1.0)
    assert dist[2.0] == pytest.approx(0.0)


@pytest.mark.parametrize("seed", range(6))
def test_schmidt_round_trip(seed):
    """Random bipartite states reconstruct from their Schmidt data."""
    rng = np.random.default_rng(seed)
    registry = SystemRegistry((("A", 3), ("B", 4)))
    state = random_state(rng, registry)
    dec = schmidt_decompose(state, ("A",), ("B",))
    assert math.fsum(c * c for c in dec.coefficients) == pytest.approx(1.0)
    assert list(dec.coefficients) == sorted(dec.coefficients, reverse=True)
    rebuilt = {}
    for c, u, v in zip(dec.coefficients, dec.left_kets, dec.right_kets):
        for ku, au in u.amplitudes.items():
            for kv, av in v.amplitudes.items():
                key = ku + kv
                rebuilt[key] = rebuilt.get(key, 0.0) + c * au * av
    rebuilt_state = SparseState(registry, rebuilt)
    assert fidelity(state, rebuilt_state) == pytest.approx(1.0, abs=1e-10)


def test_schmidt_bell_coefficients():
    registry = SystemRegistry((("A", 2), ("B", 2)))
    bell = SparseState(registry, {(0, 0): math.sqrt(0.5), (1, 1): math.sqrt(0.5)})
    dec = schmidt_decompose(bell, ("A",), ("B",))
    assert dec.coefficients == pytest.approx((math.sqrt(0.5), math.sqrt(0.5)))


def test_schmidt_requires_full_cover():
    registry = SystemRegistry((("A", 2), ("B", 2), ("C", 2)))
    state = basis_state(registry, (0, 0, 0))
    with pytest.raises(ValueError):
        schmidt_decompose(state, ("A",), ("B",))


def test_structured_map_is_norm_preserving_permutation():
    registry = SystemRegistry((("A", 4),))
    smap = StructuredBasisMap(
        registry, {(k,): (((k + 1) % 4,), 1.0) for k in range(4)}
    )
    rng = np.random.default_rng(1)
    state = random_state(rng, registry)
    mapped = apply_structured_map(smap, state)
    assert math.fsum(abs(a) ** 2 for a in mapped.amplitudes.values()) == pytest.approx(1.0)
    # applying the inverse map undoes the relabeling
    restored = apply_structured_map(smap.inverted(), mapped)
    assert fidelity(state, restored) == pytest.approx(1.0)


def test_structured_map_rejects_noninjective_rules():
    registry = SystemRegistry((("A", 3),))
    with pytest.raises(ValueError):
        StructuredBasisMap(registry, {(0,): ((1,), 1.0), (2,): ((1,), 1.0)})


def test_structured_map_rejects_support_outside_domain():
    registry = SystemRegistry((("A", 2),))
    smap = identity_map(registry, [(0,)])
    state = basis_state(registry, (1,))
    with pytest.raises(ValueError, match="escapes the map's domain"):
        apply_structured_map(smap, state)


def test_structured_map_acts_on_subregistry_of_host():
    host = SystemRegistry((("A", 2), ("B", 2)))
    acting = SystemRegistry((("A", 2),))
    swap = StructuredBasisMap(acting, {(0,): ((1,), 1.0), (1,): ((0,), 1.0)})
    state = SparseState(host, {(0, 1): 1.0})
    mapped = apply_structured_map(swap, state)
    assert mapped.amplitudes == {(1, 1): 1.0}


def test_projector_complement_twice_is_identity_on_probabilities():
    rng = np.random.default_rng(9)
    registry = SystemRegistry((("S", 4),))
    state = random_state(rng, registry)
    p = basis_span_projector(registry, [(0,), (3,)])
    assert born_probability(state, p.complement().complement()) == pytest.approx(
        born_probability(state, p)
    )
