"""Embezzlement of entangled states and the approximate chained correlation measures.

The embezzling resource is the family tau_n = (1/sqrt(C_n)) sum_{j<n} (j+1)^{-1/2} |jj>
with C_n the n-th harmonic number.  A partial basis relabeling on (aux, pointer,
system) registers,

    |k>_aux |0>_ptr |i>_sys  ->  |floor(k/m_i)>_aux |k mod m_i>_ptr |i>_sys,

applied to both halves of tau_n tensored with a Schmidt state sum_i c_i |ii>
approximately extracts a uniform maximally entangled state over the r pair slots
(i, j), j < m_i, where m_i / r are the (rational) squared coefficients.  The
extraction fidelity is governed by the interpolated harmonic sum Z(y), and the
residual trace distance feeds certified error bounds for the chained correlation
measures computed on the embezzled state.

Squared coefficients are handled as exact fractions throughout; floats appear
only in amplitudes and probabilities.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from collections.abc import Mapping, Sequence
from fractions import Fraction

import numpy as np

from . import chained_bell as cb
from .qcore import (
    MultiIndex,
    Observable,
    PROB_TOL,
    SparseState,
    StructuredBasisMap,
    SystemRegistry,
    apply_structured_map,
    basis_state,
    span_projector,
    tensor,
)

Pair = tuple[int, int]  # (system index i, pointer index j)


# ---------------------------------------------------------------------------
# Harmonic sums


def harmonic_number(k: int) -> float:
    """C_k = sum_{j=1}^{k} 1/j."""
    if k < 0:
        raise ValueError(f"harmonic number needs k >= 0, got {k}")
    if k > 10_000:
        return float(np.sum(1.0 / np.arange(1, k + 1)))
    return math.fsum(1.0 / j for j in range(1, k + 1))


def interpolated_harmonic(y: float | Fraction) -> float:
    """Z(y): the harmonic sum to floor(y), linearly interpolated up to y.

    Z(integer k) = C_k, and ln(y+1) <= Z(y) <= 1 + ln(y) for y >= 1.  Passing an
    exact Fraction avoids floor misrounding near integers.
    """
    if y < 0:
        raise ValueError(f"Z is defined for y >= 0, got {y}")
    floor = math.floor(y)
    return harmonic_number(floor) + float(y - floor) / (floor + 1)


def grouped_harmonic_sum(n: int, m: int) -> float:
    """Independent oracle for Z(n/m): sum_{k<n} 1/(m * ceil((k+1)/m)).

    Grouping k into runs of m equal ceiling values reproduces Z(n/m) exactly,
    which pins down the floor-based interpolation of `interpolated_harmonic`.
    """
    if n < 0 or m < 1:
        raise ValueError(f"need n >= 0 and m >= 1, got n={n}, m={m}")
    return math.fsum(1.0 / (m * math.ceil((k + 1) / m)) for k in range(n))


# ---------------------------------------------------------------------------
# Exact rational machinery


def _as_exact_fraction(value: Fraction | int | str) -> Fraction:
    if isinstance(value, float):
        raise TypeError(
            f"squared coefficients must be exact rationals, got float {value!r}; "
            "use Fraction or a 'p/q' string"
        )
    return Fraction(value)


def lcd(
    fractions: Sequence[Fraction | int | str], include_half: bool = False
) -> tuple[int, tuple[int, ...]]:
    """Least common denominator r of positive fractions summing to one, with the
    integer numerators m_i = r * fraction_i.

    With `include_half` the fraction 1/2 joins the set, forcing r to be even.
    """
    fracs = [_as_exact_fraction(f) for f in fractions]
    if any(f <= 0 for f in fracs):
        raise ValueError(f"fractions must be positive, got {fracs}")
    if sum(fracs) != 1:
        raise ValueError(f"fractions must sum to 1 exactly, got sum {sum(fracs)}")
    denominators = [f.denominator for f in fracs]
    if include_half:
        denominators.append(2)
    r = math.lcm(*denominators)
    numerators = []
    for f in fracs:
        m = f * r
        assert m.denominator == 1
        numerators.append(int(m))
    return r, tuple(numerators)


def rational_approximants(
    c_squares: Sequence[float], l: int
) -> tuple[Fraction, ...]:
    """Squared-coefficient approximants with denominator 2l: round the first d-1
    numerators, absorb the remainder in the last, so the sum is exactly one.

    The rounding guarantees |approximant_i - c_i^2| <= d/(2l).  Raises with the
    smallest workable l when any numerator would be nonpositive.
    """
    squares = [float(c) for c in c_squares]
    if any(c <= 0 for c in squares):
        raise ValueError(f"squared coefficients must be positive, got {squares}")
    if abs(math.fsum(squares) - 1.0) > 1e-9:
        raise ValueError(f"squared coefficients must sum to 1, got {math.fsum(squares)}")
    if l < 1:
        raise ValueError(f"approximation index l must be >= 1, got {l}")

    def numerators_for(level: int) -> list[int] | None:
        denom = 2 * level
        nums = [round(denom * c) for c in squares[:-1]]
        nums.append(denom - sum(nums))
        return nums if all(m >= 1 for m in nums) else None

    numerators = numerators_for(l)
    if numerators is None:
        l_min = l
        while numerators_for(l_min) is None:
            l_min += 1
        raise ValueError(
            f"approximation index l={l} produces a nonpositive numerator; "
            f"smallest workable index is l_min={l_min}"
        )
    return tuple(Fraction(m, 2 * l) for m in numerators)


# ---------------------------------------------------------------------------
# Specs and labels


@dataclasses.dataclass(frozen=True)
class EmbezzleLabels:
    """Subsystem labels: an auxiliary embezzling register, a pointer register that
    receives the extracted pair index, and the measured system, on each side."""

    a_aux: str = "A2"
    a_ptr: str = "A1"
    a_sys: str = "A"
    b_aux: str = "B2"
    b_ptr: str = "B1"
    b_sys: str = "B"

    @property
    def a_side(self) -> tuple[str, str, str]:
        return (self.a_aux, self.a_ptr, self.a_sys)

    @property
    def b_side(self) -> tuple[str, str, str]:
        return (self.b_aux, self.b_ptr, self.b_sys)


DEFAULT_LABELS = EmbezzleLabels()


@dataclasses.dataclass(frozen=True)
class EmbezzleSpec:
    """Schmidt coefficients with their rational (approximant) structure and the
    embezzling precision n.

    `m[i] / r` is the squared coefficient actually extracted; for exactly
    rational inputs it equals `exact_squares[i]`, otherwise it is the
    denominator-2l approximant of the true squared coefficient `c[i]**2`.
    """

    c: tuple[float, ...]
    n: int
    r: int
    m: tuple[int, ...]
    exact_squares: tuple[Fraction, ...] | None = None
    approx_squares: tuple[Fraction, ...] | None = None
    l: int | None = None
    even_denominator: bool = False

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"embezzling precision n must be >= 1, got {self.n}")
        if len(self.m) != len(self.c):
            raise ValueError("coefficient and numerator lists differ in length")
        if sum(self.m) != self.r:
            raise ValueError(f"numerators {self.m} do not sum to denominator {self.r}")
        if any(mi < 1 for mi in self.m):
            raise ValueError(f"numerators must be positive, got {self.m}")
        if self.even_denominator and self.r % 2 != 0:
            raise ValueError(f"denominator r={self.r} must be even")
        if self.exact_squares is not None:
            for mi, sq in zip(self.m, self.exact_squares):
                if Fraction(mi, self.r) != sq:
                    raise ValueError(f"numerator {mi}/{self.r} does not match {sq}")

    @classmethod
    def from_exact(
        cls,
        squares: Sequence[Fraction | int | str],
        n: int,
        *,
        even_denominator: bool = False,
    ) -> EmbezzleSpec:
        exact = tuple(_as_exact_fraction(sq) for sq in squares)
        r, m = lcd(exact, include_half=even_denominator)
        return cls(
            c=tuple(math.sqrt(float(sq)) for sq in exact),
            n=n,
            r=r,
            m=m,
            exact_squares=exact,
            approx_squares=exact,
            even_denominator=even_denominator,
        )

    @classmethod
    def from_reals(cls, squares: Sequence[float], l: int, n: int) -> EmbezzleSpec:
        approx = rational_approximants(squares, l)
        r, m = lcd(approx, include_half=True)
        return cls(
            c=tuple(math.sqrt(float(sq)) for sq in squares),
            n=n,
            r=r,
            m=m,
            exact_squares=None,
            approx_squares=approx,
            l=l,
            even_denominator=True,
        )

    @property
    def d(self) -> int:
        return len(self.c)

    @property
    def max_m(self) -> int:
        return max(self.m)

    @property
    def c_l(self) -> tuple[float, ...]:
        """Approximant coefficients sqrt(m_i / r)."""
        return tuple(math.sqrt(mi / self.r) for mi in self.m)

    @property
    def pairs(self) -> tuple[Pair, ...]:
        """The r independent pair slots (i, j), j < m_i, in lexicographic order."""
        return tuple((i, j) for i in range(self.d) for j in range(self.m[i]))

    @property
    def coefficient_error(self) -> float:
        """max_i |c_{i,l}^2 - c_i^2| (zero for exactly rational inputs)."""
        return max(abs(mi / self.r - ci**2) for mi, ci in zip(self.m, self.c))

    def with_n(self, n: int) -> EmbezzleSpec:
        return dataclasses.replace(self, n=n)


def pair_eigenvalue_scheme(pair: Pair) -> float:
    """Distinct spectator eigenvalues 2^i 3^j + 2 for pair slots (i, j)."""
    i, j = pair
    return float(2**i * 3**j + 2)


# ---------------------------------------------------------------------------
# States


def tau(n: int, label_a: str = "A2", label_b: str = "B2") -> SparseState:
    """Embezzling state (1/sqrt(C_n)) sum_{j<n} (j+1)^{-1/2} |j>|j>."""
    if n < 1:
        raise ValueError(f"tau needs n >= 1, got {n}")
    registry = SystemRegistry(((label_a, n), (label_b, n)))
    c_n = harmonic_number(n)
    amplitudes = {(j, j): 1.0 / math.sqrt(c_n * (j + 1)) for j in range(n)}
    return SparseState(registry, amplitudes)


def phi_schmidt(
    coefficients: Sequence[float], label_a: str = "A", label_b: str = "B"
) -> SparseState:
    """Diagonal Schmidt state sum_i c_i |i>|i>."""
    d = len(coefficients)
    registry = SystemRegistry(((label_a, d), (label_b, d)))
    return SparseState(registry, {(i, i): float(c) for i, c in enumerate(coefficients)})


def _side_registry(spec: EmbezzleSpec, labels: tuple[str, str, str]) -> SystemRegistry:
    aux, ptr, sys = labels
    return SystemRegistry(((aux, spec.n), (ptr, spec.max_m), (sys, spec.d)))


def input_state(spec: EmbezzleSpec, labels: EmbezzleLabels = DEFAULT_LABELS) -> SparseState:
    """tau_n on the aux registers, |0>|0> pointers, Schmidt state on the systems."""
    pointers = SystemRegistry(((labels.a_ptr, spec.max_m), (labels.b_ptr, spec.max_m)))
    return tensor(
        tensor(tau(spec.n, labels.a_aux, labels.b_aux), basis_state(pointers, (0, 0))),
        phi_schmidt(spec.c, labels.a_sys, labels.b_sys),
    )


def embezzle_map(
    n: int, m: Sequence[int], registry: SystemRegistry
) -> StructuredBasisMap:
    """The extraction relabeling |k, 0, i> -> |floor(k/m_i), k mod m_i, i> for
    k < n, i < d, on an (aux, pointer, system) sub-registry in that label order."""
    if n < max(m):
        raise ValueError(f"precision n={n} must be at least max numerator {max(m)}")
    rules: dict[MultiIndex, tuple[MultiIndex, complex]] = {}
    for i, m_i in enumerate(m):
        for k in range(n):
            rules[(k, 0, i)] = ((k // m_i, k % m_i, i), 1.0)
    return StructuredBasisMap(registry, rules)


def embezzled_state(
    spec: EmbezzleSpec, labels: EmbezzleLabels = DEFAULT_LABELS
) -> SparseState:
    """Both-sided application of the extraction map to the input state."""
    state = input_state(spec, labels)
    for side in (labels.a_side, labels.b_side):
        registry = state.registry.restrict(side)
        # restrict() keeps host order; rebuild in (aux, ptr, sys) order explicitly.
        ordered = SystemRegistry(
            tuple((lab, registry.dimension(lab)) for lab in side)
        )
        state = apply_structured_map(embezzle_map(spec.n, spec.m, ordered), state)
    return state


def chi_state(spec: EmbezzleSpec, labels: EmbezzleLabels = DEFAULT_LABELS) -> SparseState:
    """Extraction target: tau_n on aux registers tensored with the pair-slot state
    sum_{(i,j)} (c_i / sqrt(m_i)) |i,j>|i,j>.  Uniform over slots iff the squared
    coefficients are exactly m_i / r."""
    slot_registry = SystemRegistry(
        (
            (labels.a_ptr, spec.max_m),
            (labels.a_sys, spec.d),
            (labels.b_ptr, spec.max_m),
            (labels.b_sys, spec.d),
        )
    )
    amplitudes = {
        (j, i, j, i): spec.c[i] / math.sqrt(spec.m[i]) for (i, j) in spec.pairs
    }
    slots = SparseState(slot_registry, amplitudes)
    return tensor(tau(spec.n, labels.a_aux, labels.b_aux), slots)


def phi_uniform_state(
    spec: EmbezzleSpec, labels: EmbezzleLabels = DEFAULT_LABELS
) -> SparseState:
    """Uniform pair-slot state: amplitudes 1/sqrt(r) on every slot, tau_n attached."""
    slot_registry = SystemRegistry(
        (
            (labels.a_ptr, spec.max_m),
            (labels.a_sys, spec.d),
            (labels.b_ptr, spec.max_m),
            (labels.b_sys, spec.d),
        )
    )
    amplitude = 1.0 / math.sqrt(spec.r)
    slots = SparseState(
        slot_registry, {(j, i, j, i): amplitude for (i, j) in spec.pairs}
    )
    return tensor(tau(spec.n, labels.a_aux, labels.b_aux), slots)


# ---------------------------------------------------------------------------
# Fidelity of the extraction


@dataclasses.dataclass(frozen=True)
class EmbezzlementFidelityReport:
    n: int
    computed_fidelity: float
    z_form_fidelity: float
    z_form_gap: float
    trace_distance: float
    distance_bound: float
    distance_bound_holds: bool
    lower_bound_holds: bool


def direct_fidelity_sum(spec: EmbezzleSpec) -> float:
    """The extraction fidelity as an explicit sum,
    sum_i c_i^2 / (C_n sqrt(m_i)) * sum_{k<n} ((k+1)(floor(k/m_i)+1))^{-1/2}."""
    c_n = harmonic_number(spec.n)
    total = 0.0
    for c_i, m_i in zip(spec.c, spec.m):
        k = np.arange(spec.n)
        inner = np.sum(1.0 / np.sqrt((k + 1.0) * (k // m_i + 1.0)))
        total += (c_i**2) / (c_n * math.sqrt(m_i)) * float(inner)
    return total


def _chi_overlap_with_embezzled(spec: EmbezzleSpec, labels: EmbezzleLabels) -> float:
    """<chi | U (x) U psi> evaluated over the embezzled state's support, using the
    analytic chi amplitudes; avoids materializing chi at large n."""
    mapped = embezzled_state(spec, labels)
    registry = mapped.registry
    axes = registry.axes(
        (labels.a_aux, labels.a_ptr, labels.a_sys, labels.b_aux, labels.b_ptr, labels.b_sys)
    )
    c_n = harmonic_number(spec.n)
    total = 0.0
    for key, amp in mapped.amplitudes.items():
        q_a, j_a, i_a, q_b, j_b, i_b = (key[axis] for axis in axes)
        if (q_a, j_a, i_a) != (q_b, j_b, i_b) or j_a >= spec.m[i_a]:
            continue
        chi_amp = spec.c[i_a] / math.sqrt(c_n * (q_a + 1) * spec.m[i_a])
        total += chi_amp * amp.real
    return total


def embezzlement_distance_bound(spec: EmbezzleSpec) -> float:
    """Certified bound sqrt(1 - (1 - ln(max m)/ln(n))^2) on the extraction trace
    distance, valid for n >= max m (derived from the Z-sum lower bound on F)."""
    m_hat = spec.max_m
    if spec.n < m_hat:
        raise ValueError(f"bound needs n >= max m, got n={spec.n}, max m={m_hat}")
    if m_hat == 1:
        return 0.0
    ratio = 1.0 - math.log(m_hat) / math.log(spec.n)
    return math.sqrt(max(0.0, 1.0 - ratio * ratio))


def z_form_fidelity(spec: EmbezzleSpec) -> float:
    """The interpolated-harmonic form sum_i c_i^2 Z(n/m_i) / Z(n).

    This is a certified lower bound on the computed extraction fidelity, with
    equality exactly when every numerator m_i is 1; see the module tests for the
    per-term comparison.
    """
    z_n = interpolated_harmonic(spec.n)
    return math.fsum(
        (c_i**2) * interpolated_harmonic(Fraction(spec.n, m_i)) / z_n
        for c_i, m_i in zip(spec.c, spec.m)
    )


def embezzlement_fidelity(
    spec: EmbezzleSpec, labels: EmbezzleLabels = DEFAULT_LABELS
) -> EmbezzlementFidelityReport:
    """Extraction fidelity F(chi, U (x) U psi) with the interpolated-harmonic form,
    the pure-state trace distance, and the certified distance bound.

    The report records whether the computed fidelity respects the Z-form lower
    bound and whether the trace distance respects its logarithmic bound; callers
    asserting stricter relations can read the raw numbers off the report.
    """
    if spec.n < spec.max_m:
        raise ValueError(f"needs n >= max m, got n={spec.n}, max m={spec.max_m}")
    computed = _chi_overlap_with_embezzled(spec, labels)
    z_form = z_form_fidelity(spec)
    distance = math.sqrt(max(0.0, 1.0 - computed * computed))
    bound = embezzlement_distance_bound(spec)
    return EmbezzlementFidelityReport(
        n=spec.n,
        computed_fidelity=computed,
        z_form_fidelity=z_form,
        z_form_gap=computed - z_form,
        trace_distance=distance,
        distance_bound=bound,
        distance_bound_holds=distance <= bound + PROB_TOL,
        lower_bound_holds=computed >= z_form - 1e-12,
    )


def chi_phi_fidelity(spec: EmbezzleSpec) -> float:
    """F(chi, uniform slot state) = sum_i c_{i,l} c_i, which is 1 exactly when the
    squared coefficients are already m_i / r."""
    return math.fsum(cl * ci for cl, ci in zip(spec.c_l, spec.c))


def extraction_distances(spec: EmbezzleSpec, labels: EmbezzleLabels = DEFAULT_LABELS) -> tuple[float, float]:
    """(D(U psi, chi), D(chi, uniform slot state)) for chained deviation bounds."""
    f1 = _chi_overlap_with_embezzled(spec, labels)
    f2 = chi_phi_fidelity(spec)
    d1 = math.sqrt(max(0.0, 1.0 - f1 * f1))
    d2 = math.sqrt(max(0.0, 1.0 - f2 * f2))
    return d1, d2


# ---------------------------------------------------------------------------
# Approximate chained correlation measures


def _slot_key(pair: Pair, acting: SystemRegistry, labels: EmbezzleLabels, side: str) -> MultiIndex:
    """Basis multi-index of a pair slot (i, j) in the acting registry's order."""
    i, j = pair
    ptr, sys = (labels.a_ptr, labels.a_sys) if side == "A" else (labels.b_ptr, labels.b_sys)
    values = {ptr: j, sys: i}
    return tuple(values[label] for label in acting.labels)


def _acting_registry(
    host: SystemRegistry, labels: EmbezzleLabels, side: str
) -> SystemRegistry:
    ptr, sys = (labels.a_ptr, labels.a_sys) if side == "A" else (labels.b_ptr, labels.b_sys)
    return host.restrict((ptr, sys))


def pair_chain_observables(
    spec: EmbezzleSpec,
    N: int,
    pair_lo: Pair,
    pair_hi: Pair,
    host: SystemRegistry,
    labels: EmbezzleLabels,
    side: str,
) -> dict[int, Observable]:
    """Chained family rotating two pair slots, with distinct spectator eigenvalues
    2^i 3^j + 2 on the remaining slots and a zero-eigenvalue complement branch
    closing the unused part of the pointer register."""
    acting = _acting_registry(host, labels, side)
    key_lo = _slot_key(pair_lo, acting, labels, side)
    key_hi = _slot_key(pair_hi, acting, labels, side)
    spectators = tuple(
        _slot_key(p, acting, labels, side)
        for p in spec.pairs
        if p not in (pair_lo, pair_hi)
    )
    scheme_by_key = {
        _slot_key(p, acting, labels, side): pair_eigenvalue_scheme(p) for p in spec.pairs
    }
    closure = None if len(spec.pairs) == acting.total_dimension else 0.0
    chain_spec = cb.ChainSpec(
        N=N,
        pair=(key_lo, key_hi),
        eigenvalue_scheme=lambda key: scheme_by_key[tuple(key)],
        spectator_indices=spectators,
        closure_eigenvalue=closure,
    )
    return cb.chain_observables(chain_spec, acting, side)


def chi_pair_disagreement_closed_form(spec: EmbezzleSpec, N: int) -> float:
    """Adjacent-setting disagreement on the extraction target state: each of the
    two rotated slots carries weight 1/r, giving (2/r) sin^2(pi/4N) per pair."""
    return (2.0 / spec.r) * math.sin(math.pi / (4 * N)) ** 2


def correlation_measure_INn(
    spec: EmbezzleSpec,
    N: int,
    pair_lo: Pair,
    pair_hi: Pair,
    labels: EmbezzleLabels = DEFAULT_LABELS,
    *,
    state: SparseState | None = None,
    reference_chain: bool = True,
) -> cb.ChainReport:
    """Approximate correlation measure on the embezzled state for a chain rotating
    two pair slots, with the extraction-target reference chain and the certified
    deviation bound 2N * D(U psi, chi)."""
    for pair in (pair_lo, pair_hi):
        if pair not in spec.pairs:
            raise ValueError(f"pair slot {pair} is not among the spec's slots")
    if state is None:
        state = embezzled_state(spec, labels)
    a_family = pair_chain_observables(spec, N, pair_lo, pair_hi, state.registry, labels, "A")
    b_family = pair_chain_observables(spec, N, pair_lo, pair_hi, state.registry, labels, "B")

    reference_value = None
    if reference_chain:
        chi = chi_state(spec, labels)
        reference_value = cb.chain_correlation(chi, N, a_family, b_family).value
    d1, _ = extraction_distances(spec, labels)
    return cb.chain_correlation(
        state,
        N,
        a_family,
        b_family,
        closed_form=2 * N * chi_pair_disagreement_closed_form(spec, N),
        reference_value=reference_value,
        deviation_bound=2 * N * d1,
    )


def default_pairing(spec: EmbezzleSpec, subset: Sequence[Pair]) -> dict[Pair, Pair]:
    """Order-matching bijection from a half-size slot subset onto its complement."""
    subset_t = [tuple(p) for p in subset]
    complement = [p for p in spec.pairs if p not in subset_t]
    if len(subset_t) != len(complement):
        raise ValueError(
            f"subset size {len(subset_t)} does not split the {spec.r} slots in half"
        )
    return dict(zip(subset_t, complement))


def half_subset_observables(
    spec: EmbezzleSpec,
    N: int,
    subset: Sequence[Pair],
    pairing: Mapping[Pair, Pair],
    host: SystemRegistry,
    labels: EmbezzleLabels,
    side: str,
) -> dict[int, Observable]:
    """Two-outcome chained family: +1 on the span of the rotated half-subset kets
    cos(theta/2)|s> + sin(theta/2)|pairing(s)>, -1 on the complement.

    On side A the terminal setting 2N is the negation of setting 0 by definition;
    intermediate settings are genuine rotated observables.
    """
    subset_t = [tuple(p) for p in subset]
    if 2 * len(subset_t) != spec.r:
        raise ValueError(f"subset must contain r/2 = {spec.r // 2} slots")
    complement = [p for p in spec.pairs if p not in subset_t]
    image = sorted(tuple(pairing[s]) for s in subset_t)
    if image != sorted(complement):
        raise ValueError("pairing must be a bijection from the subset onto its complement")

    acting = _acting_registry(host, labels, side)
    base_kets = {
        s: basis_state(acting, _slot_key(s, acting, labels, side)) for s in subset_t
    }
    partner_kets = {
        s: basis_state(acting, _slot_key(tuple(pairing[s]), acting, labels, side))
        for s in subset_t
    }

    def rotated_observable(theta: float) -> Observable:
        from .qcore import two_outcome_observable

        kets = [
            cb.superposed_ket(theta, base_kets[s], partner_kets[s]) for s in subset_t
        ]
        return two_outcome_observable(kets)

    settings = range(0, 2 * N + 1, 2) if side == "A" else range(1, 2 * N, 2)
    family: dict[int, Observable] = {}
    for setting in settings:
        if side == "A" and setting == 2 * N:
            family[setting] = family[0].negated()
        else:
            family[setting] = rotated_observable(setting * math.pi / (2 * N))
    return family


def correlation_measure_IJlNnl(
    spec: EmbezzleSpec,
    N: int,
    subset: Sequence[Pair],
    pairing: Mapping[Pair, Pair] | None = None,
    labels: EmbezzleLabels = DEFAULT_LABELS,
    *,
    state: SparseState | None = None,
) -> cb.ChainReport:
    """Half-subset chained correlation measure on the embezzled state.

    The closed form attached is the uniform-slot reference 2N sin^2(pi/4N); the
    certified deviation bound combines both trace distances,
    2N * (D(U psi, chi) + D(chi, uniform)).  Pass `state` to run the same
    observables on a reference state instead.
    """
    if spec.r % 2 != 0:
        raise ValueError(f"half-subset chains need an even slot count, got r={spec.r}")
    if pairing is None:
        pairing = default_pairing(spec, subset)
    if state is None:
        state = embezzled_state(spec, labels)
    a_family = half_subset_observables(spec, N, subset, pairing, state.registry, labels, "A")
    b_family = half_subset_observables(spec, N, subset, pairing, state.registry, labels, "B")
    d1, d2 = extraction_distances(spec, labels)
    return cb.chain_correlation(
        state,
        N,
        a_family,
        b_family,
        closed_form=2 * N * math.sin(math.pi / (4 * N)) ** 2,
        deviation_bound=2 * N * (d1 + d2),
    )


# ---------------------------------------------------------------------------
# Slot statistics: exact fast evaluation of chain values on slot-diagonal states
#
# The embezzled state, the extraction target, and the uniform slot state are all
# of the form sum_s sum_q amp_s(q) |q, s>|q, s> with real amplitudes (s a pair
# slot, q an auxiliary level).  Every chain disagreement probability then reduces
# to a closed form in the slot weights w_s = sum_q amp_s(q)^2 and the auxiliary
# overlaps G_st = sum_q amp_s(q) amp_t(q), because the rotated projectors couple
# only paired slots and the contraction stays diagonal in the slot index.  The
# module tests pin these formulas against the literal projector route.


@dataclasses.dataclass(frozen=True)
class SlotStatistics:
    """Slot weights and auxiliary vectors of a slot-diagonal state."""

    pairs: tuple[Pair, ...]
    weights: dict[Pair, float]
    aux_vectors: dict[Pair, dict[int, float]]

    def overlap(self, s: Pair, t: Pair) -> float:
        """G_st = sum_q amp_s(q) amp_t(q); equals the weight when s == t."""
        if s == t:
            return self.weights[s]
        va, vb = self.aux_vectors[s], self.aux_vectors[t]
        if len(vb) < len(va):
            va, vb = vb, va
        return math.fsum(amp * vb[q] for q, amp in va.items() if q in vb)


def slot_statistics(
    state: SparseState, spec: EmbezzleSpec, labels: EmbezzleLabels = DEFAULT_LABELS
) -> SlotStatistics:
    """Extract slot weights and auxiliary vectors; refuses states that are not
    slot-diagonal with real amplitudes (the fast formulas do not apply there)."""
    registry = state.registry
    axes = registry.axes(
        (labels.a_aux, labels.a_ptr, labels.a_sys, labels.b_aux, labels.b_ptr, labels.b_sys)
    )
    weights: dict[Pair, float] = {s: 0.0 for s in spec.pairs}
    aux: dict[Pair, dict[int, float]] = {s: {} for s in spec.pairs}
    for key, amp in state.amplitudes.items():
        q_a, j_a, i_a, q_b, j_b, i_b = (key[axis] for axis in axes)
        if (q_a, j_a, i_a) != (q_b, j_b, i_b):
            raise ValueError("state is not slot-diagonal; use the literal chain route")
        value = complex(amp)
        if abs(value.imag) > 1e-14:
            raise ValueError("slot fast path requires real amplitudes")
        slot = (i_a, j_a)
        if slot not in weights:
            raise ValueError(f"state occupies slot {slot} outside the spec's slots")
        value = value.real
        weights[slot] += value * value
        aux[slot][q_a] = aux[slot].get(q_a, 0.0) + value
    return SlotStatistics(pairs=spec.pairs, weights=weights, aux_vectors=aux)


def _half_subset_disagreement(
    stats: SlotStatistics,
    subset: Sequence[Pair],
    pairing: Mapping[Pair, Pair],
    theta: float,
    phi: float,
) -> float:
    """Pr(A_theta != B_phi) for half-subset observables on a slot-diagonal state:
    per subset slot s with partner t,
    w_s (c^2 s'^2 + s^2 c'^2 - 2 c c' s s' ... ) assembled from the three Born
    terms Pr(A=+1) + Pr(B=+1) - 2 Pr(A=+1, B=+1)."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    cp, sp = math.cos(phi / 2), math.sin(phi / 2)
    born_a = born_b = joint = 0.0
    for slot in subset:
        partner = pairing[slot]
        w_s, w_t = stats.weights[slot], stats.weights[partner]
        g = stats.overlap(slot, partner)
        born_a += c * c * w_s + s * s * w_t
        born_b += cp * cp * w_s + sp * sp * w_t
        joint += (c * cp) ** 2 * w_s + (s * sp) ** 2 * w_t + 2 * c * cp * s * sp * g
    return max(0.0, born_a + born_b - 2.0 * joint)


def fast_half_subset_chain(
    spec: EmbezzleSpec,
    N: int,
    subset: Sequence[Pair],
    pairing: Mapping[Pair, Pair],
    stats: SlotStatistics,
) -> cb.ChainReport:
    """Half-subset chained correlation measure via slot statistics; the terminal
    setting 2N is the negation of setting 0, so its disagreement with setting
    2N-1 is one minus the corresponding unnegated disagreement."""
    subset_t = [tuple(p) for p in subset]
    terms = []
    for a, b in cb.adjacent_setting_pairs(N):
        phi = b * math.pi / (2 * N)
        if a == 2 * N:
            value = 1.0 - _half_subset_disagreement(stats, subset_t, pairing, 0.0, phi)
        else:
            value = _half_subset_disagreement(
                stats, subset_t, pairing, a * math.pi / (2 * N), phi
            )
        terms.append(cb.PairTerm(a, b, min(1.0, value)))
    return cb.ChainReport(
        N=N,
        pair_terms=tuple(terms),
        value=math.fsum(t.probability for t in terms),
        closed_form=2 * N * math.sin(math.pi / (4 * N)) ** 2,
    )


def fast_pair_chain(
    spec: EmbezzleSpec, N: int, pair_lo: Pair, pair_hi: Pair, stats: SlotStatistics
) -> cb.ChainReport:
    """Two-slot chained correlation measure via slot statistics.  Spectator slots
    agree on both sides of a slot-diagonal state, so only the rotated pair
    contributes: Pr(A != B) = (w_s + w_t)(c^2 s'^2 + s^2 c'^2) - 4 c c' s s' G_st."""
    w_s, w_t = stats.weights[pair_lo], stats.weights[pair_hi]
    g = stats.overlap(pair_lo, pair_hi)
    terms = []
    for a, b in cb.adjacent_setting_pairs(N):
        theta = a * math.pi / (2 * N)
        phi = b * math.pi / (2 * N)
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        cp, sp = math.cos(phi / 2), math.sin(phi / 2)
        value = (w_s + w_t) * (c * c * sp * sp + s * s * cp * cp) - 4 * c * cp * s * sp * g
        terms.append(cb.PairTerm(a, b, min(1.0, max(0.0, value))))
    return cb.ChainReport(
        N=N,
        pair_terms=tuple(terms),
        value=math.fsum(t.probability for t in terms),
        closed_form=2 * N * chi_pair_disagreement_closed_form(spec, N),
    )


def sorted_extreme_half_subset(spec: EmbezzleSpec, stats: SlotStatistics) -> tuple[Pair, ...]:
    """The half-subset of largest-weight slots: for a single-lambda (Born-like)
    response it realizes the maximal half-subset deviation from 1/2."""
    ordered = sorted(spec.pairs, key=lambda p: stats.weights[p], reverse=True)
    return tuple(ordered[: spec.r // 2])


def half_subset_family(
    spec: EmbezzleSpec, count: int, seed: int = 0
) -> list[tuple[tuple[Pair, ...], dict[Pair, Pair]]]:
    """Deterministic audit family of half-size slot subsets with pairings.

    Starts with structured extremes (lexicographic first half, which concentrates
    low-system slots and forces cross-system pairings; a per-system balanced
    split, which pairs within systems where possible; alternating slots) and
    fills up with seeded uniform samples.  Enumerates everything when the total
    number of half-subsets is small.
    """
    half = spec.r // 2
    all_pairs = spec.pairs
    total = math.comb(spec.r, half)
    subsets: list[tuple[Pair, ...]] = []

    if total <= max(count, 256):
        subsets = [tuple(s) for s in itertools.combinations(all_pairs, half)]
    else:
        seen: set[tuple[Pair, ...]] = set()

        def add(subset: Sequence[Pair]) -> None:
            key = tuple(sorted(subset))
            if key not in seen and len(key) == half:
                seen.add(key)
                subsets.append(key)

        add(all_pairs[:half])
        balanced: list[Pair] = []
        for i in range(spec.d):
            block = [p for p in all_pairs if p[0] == i]
            balanced.extend(block[: len(block) // 2])
        while len(balanced) < half:
            remaining = [p for p in all_pairs if p not in balanced]
            balanced.append(remaining[0])
        add(balanced[:half])
        add(all_pairs[::2][:half] if len(all_pairs[::2]) >= half else all_pairs[:half])
        rng = np.random.default_rng(seed)
        while len(subsets) < count:
            picks = rng.choice(len(all_pairs), size=half, replace=False)
            add(tuple(all_pairs[i] for i in sorted(picks)))

    return [(subset, default_pairing(spec, subset)) for subset in subsets[: max(count, 1)]]
