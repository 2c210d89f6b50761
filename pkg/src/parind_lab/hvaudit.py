"""Audits of hidden-variable models against quantum predictions.

A hidden-variable model supplements a quantum state with a parameter lambda:
for each preparation, each choice of measurements on disjoint subsystems, and
each lambda it returns a joint outcome distribution.  The checks here probe the
two structural premises such a model can claim:

* quantum completeness -- the mu-weighted lambda average of the model's
  distributions reproduces the Born distribution of every audited scenario;
* parameter independence -- for fixed lambda, the marginal on one wing does not
  move when a remote wing switches measurements or measures nothing at all.

On top of the checks sit the refutation tools.  `chained_audit` runs the
chained-correlation argument: a parameter-independent model whose setting-0
marginals are near-deterministic must violate the chain's measured correlation
budget once the chain is deep enough.  `perfect_correlation_check` verifies
that index events on the two wings of a Schmidt-correlated state never
disagree, at the Born level and (with derived tolerances) per lambda.
`triviality_bound` assembles the full finite-resource ledger on an
embezzlement-extracted state: measured chain budgets bound how far per-lambda
slot probabilities can spread, the half-subset deviation lemma converts the
spread into block-level bounds, and the rational-approximant error is added on
top, yielding a certified epsilon such that every compliant model's block
probabilities sit within 3*epsilon of the squared target coefficients.
"""

from __future__ import annotations

import dataclasses
import math
import random
from collections.abc import Hashable, Iterable, Sequence
from fractions import Fraction
from numbers import Rational
from typing import Protocol, runtime_checkable

from . import chained_bell as cb
from . import embezzle as ez
from . import halfsum
from .qcore import (
    MultiIndex,
    Observable,
    RankedProjector,
    SparseState,
    SystemRegistry,
    apply_structured_map,
    basis_span_projector,
    basis_state,
    born_probability,
    complete_with_complement,
    identity_projector,
    joint_probability,
    span_projector,
    tensor,
)

Outcome = tuple[float, ...]
Distribution = dict[Outcome, float]


class ModelUndefinedError(ValueError):
    """A model declines a scenario outside its domain of definition.

    Partial models are legitimate audit subjects; scans record the refusal for
    the offending configuration and keep going instead of aborting the sweep.
    """


# ---------------------------------------------------------------------------
# Hidden-variable spaces and measurement scenarios


@dataclasses.dataclass(frozen=True)
class LambdaSpace:
    """Finite hidden-parameter space with normalized weights.

    Weights may be exact rationals (validated exactly) or floats (validated to
    1e-12).  Points are arbitrary hashables passed through to the model.
    """

    points: tuple[Hashable, ...]
    weights: tuple[Fraction | float, ...]

    def __post_init__(self) -> None:
        if len(self.points) != len(self.weights):
            raise ValueError("one weight per hidden-parameter point required")
        if not self.points:
            raise ValueError("hidden-parameter space must be nonempty")
        if len(set(self.points)) != len(self.points):
            raise ValueError("hidden-parameter points must be distinct")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        total = sum(self.weights)
        if all(isinstance(w, Rational) for w in self.weights):
            if total != 1:
                raise ValueError(f"weights must sum to 1 exactly, got {total}")
        elif abs(total - 1) > 1e-12:
            raise ValueError(f"weights must sum to 1 within 1e-12, got {total}")

    def items(self) -> list[tuple[Hashable, float]]:
        return [(p, float(w)) for p, w in zip(self.points, self.weights)]

    @property
    def min_weight(self) -> float:
        return float(min(self.weights))

    @staticmethod
    def uniform(points: Sequence[Hashable]) -> LambdaSpace:
        pts = tuple(points)
        return LambdaSpace(pts, (Fraction(1, len(pts)),) * len(pts))


@dataclasses.dataclass(frozen=True, eq=False)
class Scenario:
    """A preparation together with measurements on disjoint subsystem groups."""

    state: SparseState
    observables: tuple[Observable, ...]
    description: str = ""

    def __post_init__(self) -> None:
        if not self.observables:
            raise ValueError("scenario needs at least one observable")
        seen: set[str] = set()
        for obs in self.observables:
            for label in obs.acting_subsystems:
                if label not in self.state.registry.labels:
                    raise KeyError(f"observable acts on unknown subsystem {label!r}")
                if label in seen:
                    raise ValueError(
                        f"observables overlap on subsystem {label!r}; scenario "
                        "measurements must act on disjoint groups"
                    )
                seen.add(label)


def identity_observable(registry: SystemRegistry) -> Observable:
    """The trivial 'measure nothing' observable: eigenvalue 1 on everything."""
    return Observable(((1.0, identity_projector(registry)),))


def born_joint_distribution(
    state: SparseState, observables: Sequence[Observable]
) -> Distribution:
    """Born joint distribution over the observables' eigenvalue tuples.

    For two observables the complemented cells are recovered from marginals and
    span-span joints by total probability, so complement projectors are never
    materialized; with three or more the joints are taken literally.
    """
    obs = tuple(observables)
    if not obs:
        raise ValueError("need at least one observable")
    if len(obs) == 1:
        only = obs[0]
        return {
            (eig,): born_probability(state, proj) for eig, proj in only.branches
        }
    if len(obs) > 2:
        dist: Distribution = {}
        for combo in _eigenvalue_grid(obs):
            projectors = [o.projector_for(e) for o, e in zip(obs, combo)]
            dist[combo] = joint_probability(state, projectors)
        return dist

    first, second = obs
    first_span = [(e, p) for e, p in first.branches if not p.complemented]
    second_span = [(e, p) for e, p in second.branches if not p.complemented]
    cells: Distribution = {}
    for ea, pa in first_span:
        for eb, pb in second_span:
            cells[(ea, eb)] = joint_probability(state, [pa, pb])
    first_marginal = {e: born_probability(state, p) for e, p in first_span}
    second_marginal = {e: born_probability(state, p) for e, p in second_span}
    first_comp = [e for e, p in first.branches if p.complemented]
    second_comp = [e for e, p in second.branches if p.complemented]
    if first_comp:
        first_marginal[first_comp[0]] = max(
            0.0, 1.0 - math.fsum(first_marginal.values())
        )
    if second_comp:
        second_marginal[second_comp[0]] = max(
            0.0, 1.0 - math.fsum(second_marginal.values())
        )
    for eb in second_comp:
        for ea, _ in first_span:
            row = math.fsum(cells[(ea, e)] for e, _ in second_span)
            cells[(ea, eb)] = max(0.0, first_marginal[ea] - row)
    for ea in first_comp:
        for eb, _ in second_span:
            column = math.fsum(cells[(e, eb)] for e, _ in first_span)
            cells[(ea, eb)] = max(0.0, second_marginal[eb] - column)
    for ea in first_comp:
        for eb in second_comp:
            cells[(ea, eb)] = max(0.0, 1.0 - math.fsum(cells.values()))
    return cells


def _eigenvalue_grid(observables: Sequence[Observable]) -> list[Outcome]:
    grid: list[Outcome] = [()]
    for obs in observables:
        grid = [combo + (eig,) for combo in grid for eig in obs.eigenvalues]
    return grid


# ---------------------------------------------------------------------------
# The model interface and the built-in fixtures


@runtime_checkable
class HVModel(Protocol):
    """A hidden-variable response rule.

    `distribution` must be a pure function of (scenario, lam): same inputs,
    same numbers.  It may inspect the scenario's state and observables but must
    not mutate them.
    """

    name: str

    def distribution(self, scenario: Scenario, lam: Hashable) -> Distribution:
        ...


def rotation_angle(observable: Observable) -> float | None:
    """Recover theta from a rank-one rotated two-outcome observable.

    The -1 branch of such an observable projects on cos(theta/2)|lo> +
    sin(theta/2)|hi>; the angle is read off its amplitudes.  Returns None for
    the trivial identity observable, raises for anything else.
    """
    if len(observable.branches) == 1:
        return None
    if set(observable.eigenvalues) != {1.0, -1.0}:
        raise ValueError(
            f"expected eigenvalues {{+1, -1}}, got {observable.eigenvalues}"
        )
    minus = observable.projector_for(-1.0)
    if minus.complemented or minus.rank_of_span != 1:
        raise ValueError("rotation angle requires a rank-one -1 branch")
    ket = minus.kets[0]
    if ket.registry.total_dimension != 2:
        raise ValueError("rotation angle is defined on a two-dimensional wing")
    amplitudes = dict(ket.amplitudes)
    lo = complex(amplitudes.get((0,), 0.0))
    hi = complex(amplitudes.get((1,), 0.0))
    if abs(lo.imag) > 1e-12 or abs(hi.imag) > 1e-12:
        raise ValueError("rotation angle requires real amplitudes")
    return (2.0 * math.atan2(hi.real, lo.real)) % (2.0 * math.pi)


class TrivialModel:
    """The model that ignores lambda and echoes the Born distribution.

    It is quantum-complete and parameter-independent by construction, which
    makes it the reference fixture for every audit that should pass.
    """

    name = "trivial"

    def distribution(self, scenario: Scenario, lam: Hashable) -> Distribution:
        return born_joint_distribution(scenario.state, scenario.observables)


class DeterministicChainModel:
    """Maximally deterministic two-valued model: every +/-1 measurement simply
    reveals lambda.

    Single-setting marginals average to the Born 1/2, but outcomes on the two
    wings always agree, so the model's disagreement probabilities vanish and
    quantum completeness breaks on every rotated pair.  Its setting-0 marginals
    are fully deterministic per lambda, which the chained audit turns into a
    refutation as soon as the chain budget drops below 1.
    """

    name = "deterministic-chain"

    def distribution(self, scenario: Scenario, lam: Hashable) -> Distribution:
        if lam not in (1.0, -1.0):
            raise ValueError(f"{self.name} expects lambda in {{+1.0, -1.0}}, got {lam!r}")
        outcome = []
        for obs in scenario.observables:
            if len(obs.branches) == 1:
                outcome.append(obs.eigenvalues[0])
            elif set(obs.eigenvalues) == {1.0, -1.0}:
                outcome.append(float(lam))
            else:
                raise ModelUndefinedError(
                    f"{self.name} is undefined on observable with eigenvalues "
                    f"{obs.eigenvalues}"
                )
        return {tuple(outcome): 1.0}


class LocalCosineResponseModel:
    """Local deterministic response on an angle grid.

    lambda ranges over `grid_points` equally spaced angles; a rotated
    measurement at angle phi returns -1 exactly when phi - lambda falls in the
    half-circle where the cosine is positive.  Marginals reproduce the Born 1/2
    exactly for any setting, and parameter independence holds because the rule
    is local -- but adjacent-setting disagreement comes out linear in the angle
    gap (1/2N on the grid) instead of quadratic, so the model overshoots every
    quantum chain while saturating its own.
    """

    name = "local-cosine"

    def __init__(self, grid_points: int = 32):
        if grid_points < 1:
            raise ValueError(f"grid_points must be >= 1, got {grid_points}")
        self.grid_points = grid_points

    def distribution(self, scenario: Scenario, lam: Hashable) -> Distribution:
        k = int(lam)
        if not 0 <= k < self.grid_points:
            raise ValueError(
                f"{self.name} expects lambda in range({self.grid_points}), got {lam!r}"
            )
        response_angle = 2.0 * math.pi * k / self.grid_points
        outcome = []
        for obs in scenario.observables:
            try:
                phi = rotation_angle(obs)
            except ValueError as err:
                raise ModelUndefinedError(f"{self.name}: {err}") from err
            if phi is None:
                outcome.append(obs.eigenvalues[0])
                continue
            gap = (phi - response_angle) % (2.0 * math.pi)
            outcome.append(-1.0 if gap < math.pi / 2 or gap >= 3 * math.pi / 2 else 1.0)
        return {tuple(outcome): 1.0}


class SignallingToyModel:
    """Quantum-complete on average but parameter-dependent per lambda.

    With two equally weighted lambda values, the first measurement's +/-1
    marginal is shifted by +shift or -shift -- but only when some other wing
    performs a nontrivial measurement.  The shifts cancel in the average, so
    quantum completeness passes; the per-lambda marginal moves by exactly
    `shift` between a measuring and a non-measuring remote wing, which is what
    the parameter-independence check reports.
    """

    name = "signalling-toy"

    def __init__(self, shift: float = 0.1):
        if not 0 <= shift <= 1:
            raise ValueError(f"shift must lie in [0, 1], got {shift}")
        self.shift = shift

    def distribution(self, scenario: Scenario, lam: Hashable) -> Distribution:
        if lam not in (0, 1):
            raise ValueError(f"{self.name} expects lambda in {{0, 1}}, got {lam!r}")
        base = born_joint_distribution(scenario.state, scenario.observables)
        first = scenario.observables[0]
        remote_active = any(
            len(obs.branches) > 1 for obs in scenario.observables[1:]
        )
        if not remote_active or set(first.eigenvalues) != {1.0, -1.0}:
            return base
        signed = self.shift if lam == 0 else -self.shift
        rest_marginal: dict[Outcome, float] = {}
        for outcome, p in base.items():
            rest_marginal[outcome[1:]] = rest_marginal.get(outcome[1:], 0.0) + p
        shifted: Distribution = {}
        for outcome, p in base.items():
            delta = signed * rest_marginal[outcome[1:]]
            value = p + delta if outcome[0] == 1.0 else p - delta
            if value < -1e-12 or value > 1 + 1e-12:
                raise ModelUndefinedError(
                    f"{self.name} is undefined here: shifted probability {value} "
                    f"for outcome {outcome} leaves [0, 1]"
                )
            shifted[outcome] = min(1.0, max(0.0, value))
        return shifted


def fixture_model(name: str, **params: float) -> tuple[HVModel, LambdaSpace]:
    """Instantiate a built-in model together with its hidden-parameter space."""
    if name == "trivial":
        return TrivialModel(), LambdaSpace((0,), (Fraction(1),))
    if name == "deterministic-chain":
        return DeterministicChainModel(), LambdaSpace.uniform((1.0, -1.0))
    if name == "local-cosine":
        grid = int(params.pop("grid_points", 32))
        model = LocalCosineResponseModel(grid_points=grid)
        return model, LambdaSpace.uniform(tuple(range(grid)))
    if name == "signalling-toy":
        model = SignallingToyModel(shift=float(params.pop("shift", 0.1)))
        return model, LambdaSpace.uniform((0, 1))
    raise ValueError(
        f"unknown fixture {name!r}; available: trivial, deterministic-chain, "
        "local-cosine, signalling-toy"
    )


FIXTURE_NAMES = ("trivial", "deterministic-chain", "local-cosine", "signalling-toy")


# ---------------------------------------------------------------------------
# The two structural checks


def _validated_distribution(
    model: HVModel, scenario: Scenario, lam: Hashable
) -> Distribution:
    dist = model.distribution(scenario, lam)
    cleaned: Distribution = {}
    width = len(scenario.observables)
    for outcome, value in dist.items():
        if len(outcome) != width:
            raise ValueError(
                f"model {model.name!r} returned outcome {outcome} of wrong width "
                f"for lambda {lam!r} (expected {width} entries)"
            )
        value = float(value)
        if value < -1e-12:
            raise ValueError(
                f"model {model.name!r} returned negative probability {value} "
                f"at lambda {lam!r}"
            )
        cleaned[tuple(float(x) for x in outcome)] = max(0.0, value)
    total = math.fsum(cleaned.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(
            f"model {model.name!r} distribution sums to {total} at lambda {lam!r}"
        )
    return cleaned


def model_average(
    model: HVModel, space: LambdaSpace, scenario: Scenario
) -> Distribution:
    """mu-weighted average of the model's per-lambda distributions."""
    terms: dict[Outcome, list[float]] = {}
    for lam, weight in space.items():
        for outcome, value in _validated_distribution(model, scenario, lam).items():
            terms.setdefault(outcome, []).append(weight * value)
    return {outcome: math.fsum(values) for outcome, values in terms.items()}


def check_compquant(
    model: HVModel,
    space: LambdaSpace,
    scenarios: Sequence[Scenario],
    *,
    tol: float = 1e-9,
) -> dict:
    """Quantum completeness: model averages reproduce Born on every scenario.

    A failure is localized: the report names the scenario, the outcome tuple,
    and both probabilities.
    """
    checks = []
    first_failure = None
    for scenario in scenarios:
        born = born_joint_distribution(scenario.state, scenario.observables)
        averaged = model_average(model, space, scenario)
        max_deviation, worst_outcome = 0.0, None
        for outcome in set(born) | set(averaged):
            deviation = abs(averaged.get(outcome, 0.0) - born.get(outcome, 0.0))
            if deviation > max_deviation:
                max_deviation, worst_outcome = deviation, outcome
        holds = max_deviation <= tol
        checks.append(
            {
                "scenario": scenario.description,
                "max_deviation": max_deviation,
                "worst_outcome": worst_outcome,
                "holds": holds,
            }
        )
        if not holds and first_failure is None:
            first_failure = {
                "scenario": scenario.description,
                "outcome": worst_outcome,
                "model_value": averaged.get(worst_outcome, 0.0),
                "born_value": born.get(worst_outcome, 0.0),
                "deviation": max_deviation,
            }
    return {
        "model": model.name,
        "tolerance": tol,
        "checks": checks,
        "first_failure": first_failure,
        "max_deviation": max(c["max_deviation"] for c in checks),
        "passed": first_failure is None,
    }


def _local_marginal(dist: Distribution, index: int) -> dict[float, float]:
    marginal: dict[float, list[float]] = {}
    for outcome, value in dist.items():
        marginal.setdefault(outcome[index], []).append(value)
    return {eig: math.fsum(values) for eig, values in marginal.items()}


def check_parind(
    model: HVModel,
    space: LambdaSpace,
    scenarios: Sequence[Scenario],
    *,
    local_index: int = 0,
    tol: float = 1e-9,
) -> dict:
    """Parameter independence: per-lambda local marginals ignore remote settings.

    All scenarios must share the same state and the same observable at
    `local_index`; the remaining slots may carry anything, including the
    identity observable standing in for 'no measurement'.  Failures name the
    lambda, the two scenarios, the outcome, and the marginal gap.
    """
    if len(scenarios) < 2:
        raise ValueError("parameter independence needs at least two scenarios")
    anchor = scenarios[0]
    for scenario in scenarios[1:]:
        if scenario.state is not anchor.state:
            raise ValueError("all scenarios must share the same preparation")
        if scenario.observables[local_index] is not anchor.observables[local_index]:
            raise ValueError(
                f"all scenarios must share the observable at index {local_index}"
            )
    per_lambda = []
    first_failure = None
    max_deviation = 0.0
    for lam, _ in space.items():
        marginals = [
            _local_marginal(_validated_distribution(model, sc, lam), local_index)
            for sc in scenarios
        ]
        lam_worst = 0.0
        for i in range(len(scenarios)):
            for j in range(i + 1, len(scenarios)):
                for eig in set(marginals[i]) | set(marginals[j]):
                    deviation = abs(
                        marginals[i].get(eig, 0.0) - marginals[j].get(eig, 0.0)
                    )
                    lam_worst = max(lam_worst, deviation)
                    if deviation > tol and first_failure is None:
                        first_failure = {
                            "lambda": lam,
                            "scenario_a": scenarios[i].description,
                            "scenario_b": scenarios[j].description,
                            "outcome": eig,
                            "marginal_a": marginals[i].get(eig, 0.0),
                            "marginal_b": marginals[j].get(eig, 0.0),
                            "deviation": deviation,
                        }
        per_lambda.append({"lambda": lam, "max_deviation": lam_worst})
        max_deviation = max(max_deviation, lam_worst)
    return {
        "model": model.name,
        "tolerance": tol,
        "local_index": local_index,
        "per_lambda": per_lambda,
        "max_deviation": max_deviation,
        "first_failure": first_failure,
        "passed": first_failure is None,
    }


def pe_invariance_check(
    model: HVModel,
    space: LambdaSpace,
    scenario: Scenario,
    *,
    spectator_label: str = "W",
    spectator_dim: int = 2,
    tol: float = 1e-12,
) -> dict:
    """Premise-extension probe: attaching an unmeasured spectator system must
    leave every per-lambda distribution unchanged."""
    if spectator_label in scenario.state.registry.labels:
        raise ValueError(f"spectator label {spectator_label!r} already in use")
    spectator = basis_state(
        SystemRegistry(((spectator_label, spectator_dim),)), (0,)
    )
    extended = Scenario(
        tensor(scenario.state, spectator),
        scenario.observables,
        description=f"{scenario.description} + spectator",
    )
    max_deviation = 0.0
    worst = None
    for lam, _ in space.items():
        bare = _validated_distribution(model, scenario, lam)
        dressed = _validated_distribution(model, extended, lam)
        for outcome in set(bare) | set(dressed):
            deviation = abs(bare.get(outcome, 0.0) - dressed.get(outcome, 0.0))
            if deviation > max_deviation:
                max_deviation, worst = deviation, (lam, outcome)
    return {
        "model": model.name,
        "scenario": scenario.description,
        "max_deviation": max_deviation,
        "worst": worst,
        "passed": max_deviation <= tol,
    }


# ---------------------------------------------------------------------------
# Chained-correlation audit


def chained_audit(
    model: HVModel,
    space: LambdaSpace,
    state: SparseState,
    N: int,
    *,
    a_label: str = "A",
    b_label: str = "B",
    pair: tuple[MultiIndex | int, MultiIndex | int] = (0, 1),
    tol: float = 1e-9,
) -> dict:
    """Run the chained-correlation argument against a model.

    The certified inequality for a quantum-complete, parameter-independent
    model reads: the lambda-average of |Pr(A_0=+1) - Pr(A_0=-1)| is at most the
    Born value of the chain I_N.  The audit measures the left side from the
    model's setting-0 marginals, the right side from the state, and reports the
    model's own disagreement sum plus its quantum-completeness gap per pair.
    The terminal setting 2N is the negation of setting 0; models that assign it
    independent outcomes are flagged by the negation-consistency entry.
    """
    chain_spec = cb.ChainSpec(N=N, pair=pair)
    a_family = cb.chain_observables(chain_spec, state.registry.restrict((a_label,)), "A")
    b_family = cb.chain_observables(chain_spec, state.registry.restrict((b_label,)), "B")

    pairs = []
    born_terms, model_terms = [], []
    compquant_worst: tuple[float, tuple[int, int] | None] = (0.0, None)
    for a, b in cb.adjacent_setting_pairs(N):
        scenario = Scenario(
            state, (a_family[a], b_family[b]), description=f"settings ({a}, {b})"
        )
        born = born_joint_distribution(state, scenario.observables)
        averaged = model_average(model, space, scenario)
        born_dis = math.fsum(p for (x, y), p in born.items() if x != y)
        model_dis = math.fsum(p for (x, y), p in averaged.items() if x != y)
        gap = max(
            abs(averaged.get(o, 0.0) - born.get(o, 0.0))
            for o in set(born) | set(averaged)
        )
        if gap > compquant_worst[0]:
            compquant_worst = (gap, (a, b))
        born_terms.append(born_dis)
        model_terms.append(model_dis)
        pairs.append(
            {
                "a_setting": a,
                "b_setting": b,
                "born_disagreement": born_dis,
                "model_disagreement": model_dis,
                "compquant_deviation": gap,
            }
        )
    chain_value = math.fsum(born_terms)
    model_chain_value = math.fsum(model_terms)

    setting0 = Scenario(state, (a_family[0],), description="setting 0 alone")
    terminal = Scenario(state, (a_family[2 * N],), description="setting 2N alone")
    lhs_terms, delta_terms, negation_devs = [], [], []
    for lam, weight in space.items():
        p0 = _local_marginal(_validated_distribution(model, setting0, lam), 0)
        p_term = _local_marginal(_validated_distribution(model, terminal, lam), 0)
        plus, minus = p0.get(1.0, 0.0), p0.get(-1.0, 0.0)
        lhs_terms.append(weight * abs(plus - minus))
        delta_terms.append(weight * abs(plus - 0.5))
        negation_devs.append(abs(p_term.get(1.0, 0.0) - minus))
    lhs = math.fsum(lhs_terms)
    nontriviality = math.fsum(delta_terms)
    negation_deviation = max(negation_devs)

    refuted = lhs > chain_value + tol
    return {
        "model": model.name,
        "N": N,
        "chain_value": chain_value,
        "chain_closed_form": cb.bell_chain_closed_form(N),
        "model_chain_value": model_chain_value,
        "pairs": pairs,
        "compquant_max_deviation": compquant_worst[0],
        "compquant_worst_pair": compquant_worst[1],
        "lhs": lhs,
        "inequality_holds": not refuted,
        "refuted": refuted,
        "nontriviality": {
            "value": nontriviality,
            "bound": chain_value / 2.0,
            "holds": nontriviality <= chain_value / 2.0 + tol,
        },
        "negation_consistency": {
            "max_deviation": negation_deviation,
            "holds": negation_deviation <= tol,
        },
    }


def refutation_scan(
    model: HVModel,
    space: LambdaSpace,
    state: SparseState,
    N_values: Sequence[int],
    **kwargs: object,
) -> dict:
    """Audit a model at increasing chain depths; report the first refuting N.

    A model that declines some depth (`ModelUndefinedError`) gets a stub report
    for that N and the scan continues; undefined depths never count as refuted.
    """
    reports = []
    for N in N_values:
        try:
            reports.append(chained_audit(model, space, state, N, **kwargs))
        except ModelUndefinedError as err:
            reports.append(
                {"model": model.name, "N": N, "undefined": str(err), "refuted": False}
            )
    refuting = [r["N"] for r in reports if r["refuted"]]
    return {
        "model": model.name,
        "N_values": tuple(N_values),
        "reports": reports,
        "refuting_N": min(refuting) if refuting else None,
        "refuted": bool(refuting),
        "undefined_N": tuple(r["N"] for r in reports if "undefined" in r),
    }


# ---------------------------------------------------------------------------
# Perfect-correlation transfer


def mismatch_probability(
    state: SparseState,
    event_a: RankedProjector,
    event_b: RankedProjector,
    direction: str = "both",
) -> float:
    """Born probability of disagreeing remote events.

    "forward" is the one-sided event (a fires, b does not), "backward" its
    mirror, and "both" their sum — the probability that exactly one fires.
    One-sided events express refinements: a finer event on one wing implies a
    coarser one on the other without the converse holding eventwise.
    """
    forward = joint_probability(state, [event_a, event_b.complement()])
    backward = joint_probability(state, [event_a.complement(), event_b])
    if direction == "forward":
        return forward
    if direction == "backward":
        return backward
    if direction == "both":
        return forward + backward
    raise ValueError(f"direction must be forward, backward or both, got {direction!r}")


def _normalize_event(
    event: Sequence,
) -> tuple[str, RankedProjector, RankedProjector, str]:
    if len(event) == 3:
        description, event_a, event_b = event
        return description, event_a, event_b, "both"
    description, event_a, event_b, direction = event
    return description, event_a, event_b, direction


def schmidt_index_events(
    registry: SystemRegistry,
    a_labels: Sequence[str],
    b_labels: Sequence[str],
    index_sets: Iterable[Sequence[MultiIndex | int]],
) -> list[tuple[str, RankedProjector, RankedProjector]]:
    """Matched basis-index events on the two wings of a Schmidt-diagonal state."""
    a_registry = registry.restrict(a_labels)
    b_registry = registry.restrict(b_labels)
    events = []
    for index_set in index_sets:
        indices = tuple(index_set)
        events.append(
            (
                f"indices {sorted(indices)}",
                basis_span_projector(a_registry, indices),
                basis_span_projector(b_registry, indices),
            )
        )
    return events


def extraction_block_events(
    spec: ez.EmbezzleSpec, labels: ez.EmbezzleLabels = ez.DEFAULT_LABELS
) -> tuple[SparseState, list[tuple[str, RankedProjector, RankedProjector]]]:
    """Events tying extraction-side slots to untouched remote blocks.

    Applies the extraction map to one side only; each pulled-back slot event
    (i, j) on the mapped wing must then fire together with the plain block
    event i on the unmapped remote wing.
    """
    psi = ez.input_state(spec, labels)
    host = psi.registry
    a_side = SystemRegistry(
        tuple((label, host.dimension(label)) for label in labels.a_side)
    )
    mapped = apply_structured_map(ez.embezzle_map(spec.n, spec.m, a_side), psi)
    acting_a = host.restrict((labels.a_ptr, labels.a_sys))
    acting_b = host.restrict((labels.b_sys,))
    slot_keys: dict[int, list[tuple[ez.Pair, MultiIndex]]] = {}
    for i, j in spec.pairs:
        key = tuple(
            j if label == labels.a_ptr else i for label in acting_a.labels
        )
        slot_keys.setdefault(i, []).append(((i, j), key))
    events = []
    for i, keyed in slot_keys.items():
        block_b = basis_span_projector(acting_b, [(i,)])
        block_a = basis_span_projector(acting_a, [key for _, key in keyed])
        for pair, key in keyed:
            events.append(
                (
                    f"slot {pair} implies remote block {i}",
                    basis_span_projector(acting_a, [key]),
                    block_b,
                    "forward",
                )
            )
        events.append(
            (f"remote block {i} implies some slot of {i}", block_a, block_b, "backward")
        )
        events.append((f"block {i} agreement", block_a, block_b, "both"))
    return mapped, events


def perfect_correlation_check(
    state: SparseState,
    events: Sequence[tuple[str, RankedProjector, RankedProjector]],
    *,
    model: HVModel | None = None,
    space: LambdaSpace | None = None,
    tol: float = 1e-12,
    model_tol: float = 1e-9,
) -> dict:
    """Verify that matched remote events never disagree.

    Quantum level: each mismatch probability must vanish (within `tol`); for
    one-sided events only the stated direction is required to vanish.
    Model level (optional): the lambda-averaged mismatch must vanish within
    `model_tol`; nonnegativity then forces every per-lambda mismatch below
    model_tol / min(mu), and each per-lambda marginal gap Pr(a) - Pr(b)
    (absolute for two-sided events, signed for one-sided ones) is bounded by
    that lambda's mismatch, which the report verifies directly.
    """
    quantum = []
    for event in events:
        description, event_a, event_b, direction = _normalize_event(event)
        p = mismatch_probability(state, event_a, event_b, direction)
        quantum.append({"event": description, "mismatch": p, "holds": p <= tol})
    report = {
        "tolerance": tol,
        "quantum": quantum,
        "max_mismatch": max(q["mismatch"] for q in quantum),
        "passed": all(q["holds"] for q in quantum),
    }
    if model is None:
        return report
    if space is None:
        raise ValueError("model-level check needs a hidden-parameter space")
    derived_tol = model_tol / space.min_weight
    model_entries = []
    for event in events:
        description, event_a, event_b, direction = _normalize_event(event)
        obs_a = complete_with_complement([(1.0, event_a)], -1.0)
        obs_b = complete_with_complement([(1.0, event_b)], -1.0)
        scenario = Scenario(state, (obs_a, obs_b), description=description)
        mismatch_terms = []
        per_lambda_max = 0.0
        marginal_gap_ok = True
        for lam, weight in space.items():
            dist = _validated_distribution(model, scenario, lam)
            forward = dist.get((1.0, -1.0), 0.0)
            backward = dist.get((-1.0, 1.0), 0.0)
            mismatch = {
                "forward": forward, "backward": backward, "both": forward + backward
            }[direction]
            mismatch_terms.append(weight * mismatch)
            per_lambda_max = max(per_lambda_max, mismatch)
            gap = _local_marginal(dist, 0).get(1.0, 0.0) - _local_marginal(
                dist, 1
            ).get(1.0, 0.0)
            if direction == "backward":
                gap = -gap
            elif direction == "both":
                gap = abs(gap)
            marginal_gap_ok &= gap <= mismatch + 1e-12
        averaged = math.fsum(mismatch_terms)
        model_entries.append(
            {
                "event": description,
                "average_mismatch": averaged,
                "per_lambda_max": per_lambda_max,
                "average_holds": averaged <= model_tol,
                "per_lambda_holds": per_lambda_max <= derived_tol,
                "marginal_gap_bounded": marginal_gap_ok,
            }
        )
    report["model"] = {
        "name": model.name,
        "tolerance": model_tol,
        "derived_per_lambda_tolerance": derived_tol,
        "events": model_entries,
        "passed": all(
            e["average_holds"] and e["per_lambda_holds"] and e["marginal_gap_bounded"]
            for e in model_entries
        ),
    }
    report["passed"] = report["passed"] and report["model"]["passed"]
    return report


# ---------------------------------------------------------------------------
# The finite-resource triviality ledger


def slot_observable(
    spec: ez.EmbezzleSpec,
    host: SystemRegistry,
    labels: ez.EmbezzleLabels = ez.DEFAULT_LABELS,
    side: str = "A",
) -> Observable:
    """Observable resolving the pointer-system slots, eigenvalue 2^i 3^j + 2 on
    slot (i, j) and 0 on the unused remainder of the pointer register."""
    ptr, sys = (
        (labels.a_ptr, labels.a_sys) if side == "A" else (labels.b_ptr, labels.b_sys)
    )
    acting = host.restrict((ptr, sys))
    branches = []
    for pair in spec.pairs:
        i, j = pair
        key = tuple(j if label == ptr else i for label in acting.labels)
        branches.append(
            (ez.pair_eigenvalue_scheme(pair), span_projector([basis_state(acting, key)]))
        )
    if len(spec.pairs) == acting.total_dimension:
        return Observable(tuple(branches))
    return complete_with_complement(branches, 0.0)


def _slot_vector(
    spec: ez.EmbezzleSpec, dist: Distribution
) -> tuple[list[float], float]:
    """Distribution over slot eigenvalues -> ordered slot probabilities plus the
    mass the model put outside the slots."""
    by_eigenvalue = {ez.pair_eigenvalue_scheme(p): p for p in spec.pairs}
    values = {pair: 0.0 for pair in spec.pairs}
    leak = 0.0
    for outcome, value in dist.items():
        pair = by_eigenvalue.get(outcome[0])
        if pair is None:
            leak += value
        else:
            values[pair] += value
    return [values[pair] for pair in spec.pairs], leak


def _audited_slot_pairs(
    spec: ez.EmbezzleSpec,
    stats: ez.SlotStatistics,
    count: int,
    seed: int,
) -> list[tuple[ez.Pair, ez.Pair]]:
    ordered = sorted(spec.pairs, key=lambda p: stats.weights[p])
    chosen = [(ordered[0], ordered[-1])]
    chosen.extend(
        (spec.pairs[k], spec.pairs[k + 1]) for k in range(min(2, spec.r - 1))
    )
    rng = random.Random(seed)
    while len(chosen) < count:
        s, t = rng.sample(spec.pairs, 2)
        chosen.append((s, t))
    unique = []
    for s, t in chosen:
        key = (tuple(s), tuple(t))
        if key[0] != key[1] and key not in [(tuple(a), tuple(b)) for a, b in unique]:
            unique.append((s, t))
    return unique[:count]


def triviality_bound(
    model: HVModel,
    space: LambdaSpace,
    spec: ez.EmbezzleSpec,
    N: int,
    *,
    epsilon_targets: Sequence[float] = (),
    family_count: int = 6,
    pair_link_count: int = 6,
    seed: int = 7,
    tol: float = 1e-9,
    preaudit: bool = True,
    preaudit_tol: float = 1e-7,
) -> dict:
    """Certified bound on a compliant model's block probabilities.

    Prerequisite: the model passes quantum completeness and parameter
    independence on the audit scenarios (enforced unless `preaudit=False`);
    failures raise with the localized check.

    The ledger then assembles, per lambda, the model's slot probabilities on
    the extraction-side and remote-side pointer registers of the embezzled
    state, and certifies two routes from measured chain budgets to block-level
    bounds:

    * pair route -- epsilon_pair is the worst mu-averaged gap between two slot
      probabilities; each audited slot pair's gap is checked against its own
      measured two-slot chain value, and a block of m_i slots inherits the
      bound m_i * epsilon_pair (plus any mass the model leaked off the slots);
    * half route -- epsilon_half is the mu-average of the worst half-subset
      deviation from 1/2; each audited half-subset's deviation is checked
      against half its measured chain value, and the half-subset deviation
      lemma converts epsilon_half into a coefficient-weighted bound for every
      block.

    Each block takes the smaller route bound; adding the rational-approximant
    coefficient error gives the final per-block bound, and the certified
    epsilon is the largest final bound divided by three, matching the
    three-term shape |Pr - c_i^2| <= |Pr - m_i/r| + |m_i/r - c_i^2| with the
    chain contribution counted once more on the way to the block.
    """
    labels = ez.DEFAULT_LABELS
    state = ez.embezzled_state(spec, labels)
    stats = ez.slot_statistics(state, spec, labels)
    slot_a = slot_observable(spec, state.registry, labels, "A")
    slot_b = slot_observable(spec, state.registry, labels, "B")
    scenario_a = Scenario(state, (slot_a,), description="extraction-side slots")
    scenario_b = Scenario(state, (slot_b,), description="remote-side slots")

    family = ez.half_subset_family(spec, family_count, seed)
    extreme = ez.sorted_extreme_half_subset(spec, stats)
    if not any(set(J) == set(extreme) for J, _ in family):
        family.insert(0, (extreme, ez.default_pairing(spec, extreme)))
    j0_observables = {
        idx: ez.half_subset_observables(spec, N, J, pairing, state.registry, labels, "A")[0]
        for idx, (J, pairing) in enumerate(family)
    }

    if preaudit:
        pair_scenario = Scenario(
            state,
            (
                j0_observables[0],
                ez.half_subset_observables(
                    spec, N, family[0][0], family[0][1], state.registry, labels, "B"
                )[1],
            ),
            description="half-subset settings (0, 1)",
        )
        compquant = check_compquant(
            model, space, [scenario_a, scenario_b, pair_scenario], tol=preaudit_tol
        )
        if not compquant["passed"]:
            raise ValueError(
                f"model {model.name!r} fails quantum completeness: "
                f"{compquant['first_failure']}"
            )
        remote_b = ez.half_subset_observables(
            spec, N, family[0][0], family[0][1], state.registry, labels, "B"
        )[1]
        remote_variants = [
            Scenario(state, (slot_a, remote_b), description="remote measures setting 1"),
            Scenario(
                state,
                (slot_a, identity_observable(state.registry.restrict((labels.b_ptr, labels.b_sys)))),
                description="remote measures nothing",
            ),
        ]
        parind = check_parind(model, space, remote_variants, tol=preaudit_tol)
        if not parind["passed"]:
            raise ValueError(
                f"model {model.name!r} fails parameter independence: "
                f"{parind['first_failure']}"
            )
        pe = pe_invariance_check(model, space, scenario_a)
        if not pe["passed"]:
            raise ValueError(
                f"model {model.name!r} fails spectator invariance: {pe['worst']}"
            )

    # Per-lambda slot probabilities on both wings.
    p_a, p_b = [], []
    leak_a_terms, leak_b_terms = [], []
    weights = []
    for lam, weight in space.items():
        vec_a, leak_a = _slot_vector(
            spec, _validated_distribution(model, scenario_a, lam)
        )
        vec_b, leak_b = _slot_vector(
            spec, _validated_distribution(model, scenario_b, lam)
        )
        p_a.append(vec_a)
        p_b.append(vec_b)
        leak_a_terms.append(weight * leak_a)
        leak_b_terms.append(weight * leak_b)
        weights.append(weight)
    leak_a = math.fsum(leak_a_terms)
    leak_b = math.fsum(leak_b_terms)

    def averaged_gap(vectors: list[list[float]], s: int, t: int) -> float:
        return math.fsum(
            w * abs(vec[s] - vec[t]) for w, vec in zip(weights, vectors)
        )

    # Pair route: worst mu-averaged slot gap, plus audited chain links.
    position = {pair: k for k, pair in enumerate(spec.pairs)}
    eps_pair_a = max(
        averaged_gap(p_a, s, t)
        for s in range(spec.r)
        for t in range(s + 1, spec.r)
    )
    eps_pair_b = max(
        averaged_gap(p_b, s, t)
        for s in range(spec.r)
        for t in range(s + 1, spec.r)
    )
    pair_links = []
    for s_pair, t_pair in _audited_slot_pairs(spec, stats, pair_link_count, seed):
        budget = ez.fast_pair_chain(spec, N, s_pair, t_pair, stats).value
        measured = averaged_gap(p_b, position[s_pair], position[t_pair])
        pair_links.append(
            {
                "slots": (tuple(s_pair), tuple(t_pair)),
                "measured_gap": measured,
                "chain_budget": budget,
                "holds": measured <= budget + tol,
            }
        )

    # Half route: sorted-extreme hypothesis plus audited half-subset links.
    sequence_family = halfsum.WeightedSequenceFamily(
        weights=tuple(weights), sequences=tuple(tuple(vec) for vec in p_a)
    )
    eps_half = float(sequence_family.sorted_extreme_deviation())
    block_positions = {}
    for pair in spec.pairs:
        block_positions.setdefault(pair[0], []).append(position[pair])
    lemma = halfsum.lemma_bound_check(
        sequence_family,
        eps_half + tol,
        subsets=[tuple(ps) for ps in block_positions.values()],
    )
    j_links = []
    for idx, (J, pairing) in enumerate(family):
        budget = ez.fast_half_subset_chain(spec, N, J, pairing, stats).value / 2.0
        scenario_j = Scenario(
            state, (j0_observables[idx],), description=f"half-subset {idx} at setting 0"
        )
        lhs_terms, bridge = [], 0.0
        subset_positions = [position[tuple(s)] for s in J]
        for (lam, weight), vec in zip(space.items(), p_a):
            dist = _validated_distribution(model, scenario_j, lam)
            plus = _local_marginal(dist, 0).get(1.0, 0.0)
            lhs_terms.append(weight * abs(plus - 0.5))
            bridge = max(
                bridge, abs(plus - math.fsum(vec[k] for k in subset_positions))
            )
        lhs = math.fsum(lhs_terms)
        j_links.append(
            {
                "subset": tuple(tuple(s) for s in J),
                "measured_deviation": lhs,
                "chain_budget": budget,
                "bridge_deviation": bridge,
                "holds": lhs <= budget + tol,
            }
        )

    # Blocks: both routes, the smaller one wins, approximant error on top.
    eps_coeff = spec.coefficient_error
    target_squares = [c * c for c in spec.c]
    blocks = []
    final_bounds = []
    for i, m_i in enumerate(spec.m):
        positions = block_positions[i]
        approx_target = m_i / spec.r
        six_dev = math.fsum(
            w * abs(math.fsum(vec[k] for k in positions) - approx_target)
            for w, vec in zip(weights, p_b)
        )
        six_bound = m_i * (eps_pair_b + leak_b / spec.r)
        seven_dev = math.fsum(
            w * abs(math.fsum(vec[k] for k in positions) - target_squares[i])
            for w, vec in zip(weights, p_a)
        )
        pair_bound = m_i * (eps_pair_a + leak_a / spec.r)
        coefficient = halfsum.bound_coefficient(spec.r, m_i)
        half_bound = float(coefficient) * eps_half + (leak_a if m_i > spec.r // 2 else 0.0)
        block_bound = min(pair_bound, half_bound)
        final_bound = block_bound + eps_coeff
        final_bounds.append(final_bound)
        blocks.append(
            {
                "system_index": i,
                "numerator": m_i,
                "pair_route_bound": pair_bound,
                "half_route_coefficient": float(coefficient),
                "half_route_bound": half_bound,
                "block_bound": block_bound,
                "final_bound": final_bound,
                "remote_deviation": six_dev,
                "remote_bound": six_bound,
                "remote_holds": six_dev <= six_bound + tol,
                "target_square": target_squares[i],
                "target_deviation": seven_dev,
                "target_holds": seven_dev <= final_bound + tol,
            }
        )

    achieved = max(final_bounds) / 3.0
    links_hold = (
        all(link["holds"] for link in pair_links)
        and all(link["holds"] for link in j_links)
        and lemma["passed"]
    )
    conclusion_holds = all(b["remote_holds"] and b["target_holds"] for b in blocks)
    return {
        "model": model.name,
        "parameters": {
            "N": N,
            "n": spec.n,
            "l": spec.l,
            "r": spec.r,
            "d": spec.d,
            "numerators": spec.m,
            "target_squares": tuple(target_squares),
            "approximant_squares": tuple(m_i / spec.r for m_i in spec.m),
        },
        "epsilon_pair": max(eps_pair_a, eps_pair_b),
        "epsilon_pair_extraction_side": eps_pair_a,
        "epsilon_pair_remote_side": eps_pair_b,
        "epsilon_half": eps_half,
        "epsilon_coefficient": eps_coeff,
        "slot_leakage": {"extraction_side": leak_a, "remote_side": leak_b},
        "pair_links": pair_links,
        "half_subset_links": j_links,
        "lemma": lemma,
        "blocks": blocks,
        "achieved_epsilon": achieved,
        "epsilon_targets": [
            {"epsilon": float(t), "achieved": achieved < float(t)}
            for t in epsilon_targets
        ],
        "links_hold": links_hold,
        "conclusion_holds": conclusion_holds,
        "passed": links_hold and conclusion_holds,
    }
