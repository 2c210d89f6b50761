"""Batch experiment driver.

Each subcommand reproduces one family of numerical experiments as a
deterministic report: chained-correlation sweeps (`chain`, `dim`), the
rational- and approximant-coefficient extraction routes (`sqrt-rational`,
`arbitrary`), the half-subset window identity (`lemma`), extraction fidelity
sweeps (`embezzle`), perfect-correlation transfer (`pc`), measurement
couplings (`couple`), hidden-variable model audits (`audit`), and report
re-validation (`validate`).

Reports are CSV for sweep tables and JSON for nested audit output; both are
byte-identical for a fixed config and seed (no timestamps, sorted keys,
fixed float repr).  Sweeps over parameter grids honor the repeated-limit
ordering: n varies innermost, then l, then N, and the report records
per-level convergence of the tracked quantity.  Exit status 0 means every
verdict passed; 1 flags a failed verdict; 2 flags an invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import random
import sys
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import chained_bell as cb
from . import couplings
from . import embezzle as ez
from . import halfsum
from . import hvaudit as hv
from .qcore import SparseState, SystemRegistry, born_probability, span_projector

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    """Invalid configuration: wrong flag values, malformed config file, or
    parameters that violate a module precondition."""


# ---------------------------------------------------------------------------
# Parsing and report plumbing


def _parse_int_list(text: str | list | tuple, flag: str) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(x) for x in text)
    try:
        values = tuple(int(tok) for tok in str(text).split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"{flag} expects a comma list of integers, got {text!r}") from exc
    if not values:
        raise ConfigError(f"{flag} must not be empty")
    return values


def _parse_fraction_list(text: str | list | tuple, flag: str) -> tuple[Fraction, ...]:
    tokens = (
        [str(t) for t in text]
        if isinstance(text, (list, tuple))
        else [tok for tok in str(text).split(",") if tok.strip()]
    )
    values = []
    for token in tokens:
        try:
            values.append(Fraction(token))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(
                f"{flag} expects fractions like 1/3,2/3, got {token!r}"
            ) from exc
    if not values:
        raise ConfigError(f"{flag} must not be empty")
    return tuple(values)


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def _cell(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (list, tuple)):
        return "|".join(_cell(v) for v in value)
    return "" if value is None else str(value)


def _jsonable(value: object) -> object:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    return str(value)


def _render_csv(report: dict) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    columns = report["columns"]
    writer.writerow(columns)
    for row in report["rows"]:
        writer.writerow([_cell(row.get(col)) for col in columns])
    return buffer.getvalue()


def _write_report(report: dict, fmt: str, out: str | None) -> None:
    if fmt == "csv":
        text = _render_csv(report)
    else:
        text = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _resolve_workers(cfg: dict) -> int:
    env = os.environ.get("PARIND_LAB_WORKERS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"PARIND_LAB_WORKERS must be an integer, got {env!r}") from exc
    if cfg.get("workers") is not None:
        workers = int(cfg["workers"])
        if workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {workers}")
        return workers
    return os.cpu_count() or 1


def _map_grid(fn, points: list, workers: int) -> list:
    """Evaluate grid points, preserving order; one writer aggregates results."""
    if workers <= 1 or len(points) <= 1:
        return [fn(p) for p in points]
    try:
        with ProcessPoolExecutor(max_workers=min(workers, len(points))) as pool:
            return list(pool.map(fn, points))
    except OSError:
        return [fn(p) for p in points]


def _monotone_decreasing(values: list[float], strict: bool = True) -> bool:
    pairs = zip(values, values[1:])
    return all(b < a if strict else b <= a for a, b in pairs)


# ---------------------------------------------------------------------------
# chain: two-outcome chained correlations on the Bell state


def _require_bell(cfg: dict) -> SparseState:
    state = cfg.get("state") or "bell"
    if state != "bell":
        raise ConfigError(f"only the built-in 'bell' state is available, got {state!r}")
    return cb.bell_state()


def _chain_point(args: tuple[int, float]) -> dict:
    N, tol = args
    report = cb.correlation_measure_IN(
        cb.bell_state(), cb.ChainSpec(N=N, pair=(0, 1)), ("A",), ("B",)
    )
    deviation = abs(report.value - report.closed_form)
    ok = deviation <= tol and report.value <= report.bound + tol
    return {
        "command": "chain",
        "N": N,
        "value": report.value,
        "closed_form": report.closed_form,
        "bound": report.bound,
        "closed_form_deviation": deviation,
        "bound_holds": report.value <= report.bound + tol,
        "verdict": _verdict(ok),
    }


def run_chain(cfg: dict) -> dict:
    _require_bell(cfg)
    Ns = _parse_int_list(cfg.get("N") or "1,2,4,8,16", "--N")
    tol = float(cfg.get("tol") or 1e-12)
    rows = _map_grid(_chain_point, [(N, tol) for N in Ns], _resolve_workers(cfg))
    return {
        "command": "chain",
        "parameters": {"state": "bell", "N": list(Ns), "tol": tol},
        "columns": [
            "command", "N", "value", "closed_form", "bound",
            "closed_form_deviation", "bound_holds", "verdict",
        ],
        "rows": rows,
        "passed": all(r["verdict"] == "pass" for r in rows),
    }


# ---------------------------------------------------------------------------
# dim: chained correlations on a rotated pair inside a d-dimensional state


def _dim_point(args: tuple[tuple[str, ...], int, int, int, float]) -> dict:
    squares_text, lo, hi, N, tol = args
    squares = [Fraction(s) for s in squares_text]
    state = ez.phi_schmidt([math.sqrt(float(q)) for q in squares], "A", "B")
    spec = cb.ChainSpec(
        N=N, pair=(lo, hi), eigenvalue_scheme=cb.dimension_scheme
    )
    report = cb.correlation_measure_IN_prime(state, spec, ("A",), ("B",))
    deviation = abs(report.value - report.closed_form)
    ok = deviation <= tol and report.value <= report.bound + tol
    return {
        "command": "dim",
        "N": N,
        "d": len(squares),
        "pair": (lo, hi),
        "pair_square": float(squares[lo]),
        "value": report.value,
        "closed_form": report.closed_form,
        "bound": report.bound,
        "closed_form_deviation": deviation,
        "bound_holds": report.value <= report.bound + tol,
        "verdict": _verdict(ok),
    }


def run_dim(cfg: dict) -> dict:
    squares = _parse_fraction_list(cfg.get("coeffs") or "1/3,1/3,1/3", "--coeffs")
    if sum(squares) != 1:
        raise ConfigError(f"squared coefficients must sum to 1, got {sum(squares)}")
    Ns = _parse_int_list(cfg.get("N") or "1,2,4,8", "--N")
    tol = float(cfg.get("tol") or 1e-12)
    pair = next(
        (
            (i, j)
            for i in range(len(squares))
            for j in range(i + 1, len(squares))
            if squares[i] == squares[j]
        ),
        None,
    )
    if pair is None:
        raise ConfigError("dim needs at least one equal pair of squared coefficients")
    squares_text = tuple(str(q) for q in squares)
    points = [(squares_text, pair[0], pair[1], N, tol) for N in Ns]
    rows = _map_grid(_dim_point, points, _resolve_workers(cfg))
    return {
        "command": "dim",
        "parameters": {
            "coeffs": [str(q) for q in squares],
            "pair": list(pair),
            "N": list(Ns),
            "tol": tol,
        },
        "columns": [
            "command", "N", "d", "pair", "pair_square", "value", "closed_form",
            "bound", "closed_form_deviation", "bound_holds", "verdict",
        ],
        "rows": rows,
        "passed": all(r["verdict"] == "pass" for r in rows),
    }


# ---------------------------------------------------------------------------
# sqrt-rational: exact rational squares through the extraction route


def _sqrt_rational_point(args: tuple[tuple[str, ...], int, int, float]) -> dict:
    squares_text, N, n, tol = args
    spec = ez.EmbezzleSpec.from_exact([Fraction(s) for s in squares_text], n)
    state = ez.embezzled_state(spec)
    stats = ez.slot_statistics(state, spec)
    ordered = sorted(spec.pairs, key=lambda p: stats.weights[p])
    lo, hi = ordered[0], ordered[-1]
    measured = ez.fast_pair_chain(spec, N, lo, hi, stats).value
    reference = 2 * N * ez.chi_pair_disagreement_closed_form(spec, N)
    d1, _ = ez.extraction_distances(spec)
    bound = 2 * N * d1
    gap = abs(measured - reference)
    return {
        "command": "sqrt-rational",
        "N": N,
        "n": n,
        "r": spec.r,
        "slots": (lo, hi),
        "value": measured,
        "reference": reference,
        "gap": gap,
        "gap_bound": bound,
        "verdict": _verdict(gap <= bound + tol),
    }


def run_sqrt_rational(cfg: dict) -> dict:
    squares = _parse_fraction_list(cfg.get("coeffs") or "1/3,2/3", "--coeffs")
    if sum(squares) != 1:
        raise ConfigError(f"squared coefficients must sum to 1, got {sum(squares)}")
    Ns = _parse_int_list(cfg.get("N") or "2", "--N")
    ns = _parse_int_list(cfg.get("n") or "100", "--n")
    tol = float(cfg.get("tol") or 1e-12)
    squares_text = tuple(str(q) for q in squares)
    points = [(squares_text, N, n, tol) for N in Ns for n in ns]
    rows = _map_grid(_sqrt_rational_point, points, _resolve_workers(cfg))
    convergence = []
    for k, N in enumerate(Ns):
        gaps = [rows[k * len(ns) + j]["gap"] for j in range(len(ns))]
        convergence.append(
            {"N": N, "n": list(ns), "gap": gaps,
             "decreasing": _monotone_decreasing(gaps, strict=False)}
        )
    for row, previous in zip(rows[1:], rows):
        row["level_gap"] = (
            row["gap"] - previous["gap"] if row["N"] == previous["N"] else None
        )
    rows[0]["level_gap"] = None
    return {
        "command": "sqrt-rational",
        "parameters": {
            "coeffs": [str(q) for q in squares], "N": list(Ns), "n": list(ns),
            "tol": tol, "nesting": ["N", "n (innermost)"],
        },
        "columns": [
            "command", "N", "n", "r", "slots", "value", "reference", "gap",
            "gap_bound", "level_gap", "verdict",
        ],
        "rows": rows,
        "convergence": convergence,
        "passed": all(r["verdict"] == "pass" for r in rows),
    }


# ---------------------------------------------------------------------------
# lemma: half-subset window identity and bound coefficient


def run_lemma(cfg: dict) -> dict:
    r = int(cfg.get("r") or 10)
    J = _parse_int_list(cfg.get("J") or "0,1", "--J")
    seed = int(cfg.get("seed") or 0)
    if r % 2 != 0 or r < 2:
        raise ConfigError(f"--r must be even and positive, got {r}")
    if any(not 0 <= j < r for j in J) or len(set(J)) != len(J):
        raise ConfigError(f"--J must list distinct indices below r={r}, got {J}")
    direct = len(J) <= r // 2
    system = halfsum.build_system(
        r, J if direct else tuple(sorted(set(range(r)) - set(J)))
    )
    rng = random.Random(seed)
    rows = []
    for check_index in range(3):
        p = [Fraction(rng.randrange(0, 64), 64) for _ in range(r)]
        result = halfsum.identity_check(system, p)
        lhs = sum(p[i] for i in J)
        rhs = result["rhs"] if direct else sum(p) - result["rhs"]
        rows.append(
            {
                "command": "lemma",
                "r": r,
                "J": tuple(J),
                "check": check_index,
                "lhs": lhs,
                "rhs": rhs,
                "exact": lhs == rhs,
                "coefficient": halfsum.bound_coefficient(r, len(J)),
                "verdict": _verdict(lhs == rhs and result["holds"]),
            }
        )
    return {
        "command": "lemma",
        "parameters": {"r": r, "J": list(J), "seed": seed, "via_complement": not direct},
        "columns": [
            "command", "r", "J", "check", "lhs", "rhs", "exact",
            "coefficient", "verdict",
        ],
        "rows": rows,
        "coefficient": halfsum.bound_coefficient(r, len(J)),
        "window_size": system.x,
        "passed": all(row["verdict"] == "pass" for row in rows),
    }


# ---------------------------------------------------------------------------
# embezzle: extraction fidelity sweep


def _embezzle_point(args: tuple[tuple[str, ...], int | None, int, float]) -> dict:
    squares_text, l, n, tol = args
    if l is None:
        spec = ez.EmbezzleSpec.from_exact([Fraction(s) for s in squares_text], n)
    else:
        spec = ez.EmbezzleSpec.from_reals(
            [float(Fraction(s)) for s in squares_text], l, n
        )
    report = ez.embezzlement_fidelity(spec)
    ok = report.lower_bound_holds and report.distance_bound_holds
    return {
        "command": "embezzle",
        "l": l,
        "n": n,
        "r": spec.r,
        "numerators": spec.m,
        "fidelity": report.computed_fidelity,
        "z_form": report.z_form_fidelity,
        "z_form_gap": report.z_form_gap,
        "one_minus_fidelity": 1.0 - report.computed_fidelity,
        "trace_distance": report.trace_distance,
        "distance_bound": report.distance_bound,
        "lower_bound_holds": report.lower_bound_holds,
        "distance_bound_holds": report.distance_bound_holds,
        "verdict": _verdict(ok),
    }


def run_embezzle(cfg: dict) -> dict:
    squares = _parse_fraction_list(cfg.get("coeffs") or "1/3,2/3", "--coeffs")
    if sum(squares) != 1:
        raise ConfigError(f"squared coefficients must sum to 1, got {sum(squares)}")
    ns = _parse_int_list(cfg.get("n") or "100,1000", "--n")
    ls: tuple[int | None, ...]
    ls = _parse_int_list(cfg["l"], "--l") if cfg.get("l") else (None,)
    tol = float(cfg.get("tol") or 1e-12)
    squares_text = tuple(str(q) for q in squares)
    points = [(squares_text, l, n, tol) for l in ls for n in ns]
    rows = _map_grid(_embezzle_point, points, _resolve_workers(cfg))
    convergence = []
    all_decreasing = True
    for k, l in enumerate(ls):
        losses = [rows[k * len(ns) + j]["one_minus_fidelity"] for j in range(len(ns))]
        decreasing = _monotone_decreasing(losses)
        all_decreasing &= decreasing
        convergence.append(
            {"l": l, "n": list(ns), "one_minus_fidelity": losses, "decreasing": decreasing}
        )
    for row, previous in zip(rows[1:], rows):
        row["level_gap"] = (
            row["one_minus_fidelity"] - previous["one_minus_fidelity"]
            if row["l"] == previous["l"]
            else None
        )
    rows[0]["level_gap"] = None
    return {
        "command": "embezzle",
        "parameters": {
            "coeffs": [str(q) for q in squares], "l": list(ls), "n": list(ns),
            "tol": tol, "nesting": ["l", "n (innermost)"],
        },
        "columns": [
            "command", "l", "n", "r", "numerators", "fidelity", "z_form",
            "z_form_gap", "one_minus_fidelity", "trace_distance",
            "distance_bound", "lower_bound_holds", "distance_bound_holds",
            "level_gap", "verdict",
        ],
        "rows": rows,
        "convergence": convergence,
        "passed": all(r["verdict"] == "pass" for r in rows) and all_decreasing,
    }


# ---------------------------------------------------------------------------
# pc: perfect-correlation transfer


def run_pc(cfg: dict) -> dict:
    squares = _parse_fraction_list(cfg.get("coeffs") or "1/3,2/3", "--coeffs")
    if sum(squares) != 1:
        raise ConfigError(f"squared coefficients must sum to 1, got {sum(squares)}")
    ns = _parse_int_list(cfg.get("n") or "200", "--n")
    seed = int(cfg.get("seed") or 0)
    tol = float(cfg.get("tol") or 1e-12)
    d = len(squares)
    state = ez.phi_schmidt([math.sqrt(float(q)) for q in squares], "A", "B")
    rng = random.Random(seed)
    index_sets = []
    for _ in range(20):
        size = rng.randrange(1, d) if d > 1 else 1
        index_sets.append(tuple(sorted(rng.sample(range(d), size))))
    events = hv.schmidt_index_events(state.registry, ("A",), ("B",), index_sets)
    schmidt_report = hv.perfect_correlation_check(state, events, tol=tol)
    rows = [
        {
            "command": "pc", "family": "schmidt", "n": None,
            "event": q["event"], "mismatch": q["mismatch"],
            "verdict": _verdict(q["holds"]),
        }
        for q in schmidt_report["quantum"]
    ]
    extraction_reports = []
    for n in ns:
        spec = ez.EmbezzleSpec.from_exact(squares, n)
        mapped, block_events = hv.extraction_block_events(spec)
        report = hv.perfect_correlation_check(mapped, block_events, tol=tol)
        extraction_reports.append({"n": n, "max_mismatch": report["max_mismatch"]})
        rows.extend(
            {
                "command": "pc", "family": "extraction", "n": n,
                "event": q["event"], "mismatch": q["mismatch"],
                "verdict": _verdict(q["holds"]),
            }
            for q in report["quantum"]
        )
    return {
        "command": "pc",
        "parameters": {
            "coeffs": [str(q) for q in squares], "n": list(ns),
            "seed": seed, "tol": tol,
        },
        "columns": ["command", "family", "n", "event", "mismatch", "verdict"],
        "rows": rows,
        "extraction_summary": extraction_reports,
        "passed": all(r["verdict"] == "pass" for r in rows),
    }


# ---------------------------------------------------------------------------
# couple: measurement couplings


def _random_state(rng: np.random.Generator, registry: SystemRegistry) -> SparseState:
    dim = registry.total_dimension
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    vec /= np.linalg.norm(vec)
    return SparseState(registry, {(k,): vec[k] for k in range(dim)})


def _random_split(
    rng: np.random.Generator, registry: SystemRegistry, blocks: int
) -> list:
    dim = registry.total_dimension
    matrix = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    basis, _ = np.linalg.qr(matrix)
    cuts = sorted(rng.choice(np.arange(1, dim), size=blocks - 1, replace=False))
    groups = np.split(np.arange(dim), cuts)
    projectors = []
    for group in groups:
        kets = [
            SparseState(registry, {(k,): basis[k, col] for k in range(dim)})
            for col in group
        ]
        projectors.append(span_projector(kets))
    return projectors


def _pointer_distribution(state: SparseState, label: str) -> dict[int, float]:
    axis = state.registry.axis(label)
    dist: dict[int, float] = {}
    for key, amp in state.amplitudes.items():
        dist[key[axis]] = dist.get(key[axis], 0.0) + abs(amp) ** 2
    return dist


def _pointer_mismatch(state: SparseState, label_1: str, label_2: str) -> float:
    axis_1, axis_2 = state.registry.axis(label_1), state.registry.axis(label_2)
    return sum(
        abs(amp) ** 2
        for key, amp in state.amplitudes.items()
        if key[axis_1] != key[axis_2]
    )


def _random_povm(rng: np.random.Generator, dim: int, count: int) -> couplings.PovmElementSet:
    raw = [
        rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        for _ in range(count)
    ]
    gross = [a.conj().T @ a for a in raw]
    w, v = np.linalg.eigh(sum(gross))
    inv_sqrt = v @ np.diag(1.0 / np.sqrt(w)) @ v.conj().T
    return couplings.PovmElementSet.from_elements([inv_sqrt @ f @ inv_sqrt for f in gross])


def run_couple(cfg: dict) -> dict:
    seed = int(cfg.get("seed") or 0)
    instances = int(cfg.get("instances") or 18)
    tol = float(cfg.get("tol") or 1e-10)
    if instances < 1:
        raise ConfigError(f"--instances must be >= 1, got {instances}")
    rng = np.random.default_rng(seed)
    rows = []

    trine = couplings.trine_povm()
    registry_2 = SystemRegistry((("S", 2),))
    psi_2 = _random_state(rng, registry_2)
    coupled = couplings.povm_coupling(psi_2, trine, "S")
    direct = couplings.povm_probabilities(psi_2, trine, "S")
    dist = _pointer_distribution(coupled, "B1")
    deviation = max(abs(dist.get(j, 0.0) - p) for j, p in enumerate(direct))
    deviation = max(deviation, _pointer_mismatch(coupled, "B1", "B2"))
    rows.append(
        {
            "command": "couple", "instance": "trine", "kind": "povm",
            "dimension": 2, "max_deviation": deviation,
            "verdict": _verdict(deviation <= tol),
        }
    )

    for index in range(instances):
        dim = int(rng.integers(2, 5))
        registry = SystemRegistry((("S", dim),))
        psi = _random_state(rng, registry)
        kind = ("first", "second", "povm")[index % 3]
        if kind in ("first", "second"):
            blocks = int(rng.integers(2, dim + 1))
            projectors = _random_split(rng, registry, blocks)
            weights = [born_probability(psi, p) for p in projectors]
            if kind == "first":
                out = couplings.first_kind_coupling(psi, projectors, pointer_label="P")
                dist = _pointer_distribution(out, "P")
            else:
                posts = [_random_state(rng, registry) for _ in projectors]
                out = couplings.second_kind_coupling(
                    psi, projectors, posts, pointer_labels=("P1", "P2")
                )
                dist = _pointer_distribution(out, "P1")
            deviation = max(abs(dist.get(j, 0.0) - w) for j, w in enumerate(weights))
            if kind == "second":
                deviation = max(deviation, _pointer_mismatch(out, "P1", "P2"))
        else:
            povm = _random_povm(rng, dim, int(rng.integers(2, 5)))
            out = couplings.povm_coupling(psi, povm, "S", pointer_labels=("P1", "P2"))
            direct = couplings.povm_probabilities(psi, povm, "S")
            dist = _pointer_distribution(out, "P1")
            deviation = max(abs(dist.get(j, 0.0) - p) for j, p in enumerate(direct))
            deviation = max(deviation, _pointer_mismatch(out, "P1", "P2"))
        norm_gap = abs(sum(abs(a) ** 2 for a in out.amplitudes.values()) - 1.0)
        deviation = max(deviation, norm_gap)
        rows.append(
            {
                "command": "couple", "instance": index, "kind": kind,
                "dimension": dim, "max_deviation": deviation,
                "verdict": _verdict(deviation <= tol),
            }
        )
    return {
        "command": "couple",
        "parameters": {"seed": seed, "instances": instances, "tol": tol},
        "columns": ["command", "instance", "kind", "dimension", "max_deviation", "verdict"],
        "rows": rows,
        "passed": all(r["verdict"] == "pass" for r in rows),
    }


# ---------------------------------------------------------------------------
# audit: hidden-variable model audits on the Bell chain


def _load_model(cfg: dict) -> tuple[hv.HVModel, hv.LambdaSpace]:
    name = cfg.get("model") or "trivial"
    if isinstance(name, str) and name.endswith(".json"):
        path = Path(name)
        if not path.exists():
            raise ConfigError(f"model file {name!r} does not exist")
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"model file {name!r} is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict) or "fixture" not in payload:
            raise ConfigError(
                f"model file {name!r} must be an object with a 'fixture' key"
            )
        fixture = payload.pop("fixture")
        try:
            return hv.fixture_model(fixture, **payload)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
    try:
        return hv.fixture_model(str(name))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def run_audit(cfg: dict) -> dict:
    state = _require_bell(cfg)
    model, space = _load_model(cfg)
    n_max = int(cfg.get("N_max") or 8)
    if n_max < 1:
        raise ConfigError(f"--N-max must be >= 1, got {n_max}")
    tol = float(cfg.get("tol") or 1e-9)
    scan = hv.refutation_scan(model, space, state, tuple(range(1, n_max + 1)), tol=tol)

    chain2 = cb.ChainSpec(N=min(2, n_max), pair=(0, 1))
    a_family = cb.chain_observables(chain2, state.registry.restrict(("A",)), "A")
    b_family = cb.chain_observables(chain2, state.registry.restrict(("B",)), "B")
    single = hv.Scenario(state, (a_family[0],), description="setting 0 alone")
    pair = hv.Scenario(state, (a_family[0], b_family[1]), description="settings (0, 1)")
    idle = hv.Scenario(
        state,
        (a_family[0], hv.identity_observable(state.registry.restrict(("B",)))),
        description="remote idle",
    )
    def guarded(check, *args, **kwargs):
        try:
            return check(*args, **kwargs)
        except hv.ModelUndefinedError as err:
            return {"passed": False, "first_failure": {"undefined": str(err)}}

    compquant = guarded(hv.check_compquant, model, space, [single, pair], tol=tol)
    parind = guarded(hv.check_parind, model, space, [pair, idle], tol=tol)
    pe = guarded(hv.pe_invariance_check, model, space, pair)

    rows = []
    integrity = True
    for report in scan["reports"]:
        if "undefined" in report:
            # the model declined this depth; Born integrity is still checkable
            value = cb.correlation_measure_IN(
                state, cb.ChainSpec(N=report["N"], pair=(0, 1)), ("A",), ("B",)
            ).value
            closed = cb.bell_chain_closed_form(report["N"])
            born_ok = abs(value - closed) <= 1e-9
            integrity &= born_ok
            rows.append(
                {
                    "command": "audit",
                    "model": model.name,
                    "N": report["N"],
                    "chain_value": value,
                    "chain_closed_form": closed,
                    "lhs": None,
                    "model_chain_value": None,
                    "refuted": False,
                    "undefined": report["undefined"],
                    "verdict": _verdict(born_ok),
                }
            )
            continue
        born_ok = abs(report["chain_value"] - report["chain_closed_form"]) <= 1e-9
        integrity &= born_ok
        rows.append(
            {
                "command": "audit",
                "model": model.name,
                "N": report["N"],
                "chain_value": report["chain_value"],
                "chain_closed_form": report["chain_closed_form"],
                "lhs": report["lhs"],
                "model_chain_value": report["model_chain_value"],
                "refuted": report["refuted"],
                "undefined": "",
                "verdict": _verdict(born_ok),
            }
        )
    return {
        "command": "audit",
        "parameters": {
            "model": model.name, "state": "bell", "N_max": n_max, "tol": tol,
        },
        "columns": [
            "command", "model", "N", "chain_value", "chain_closed_form", "lhs",
            "model_chain_value", "refuted", "undefined", "verdict",
        ],
        "rows": rows,
        "findings": {
            "refuting_N": scan["refuting_N"],
            "refuted": scan["refuted"],
            "undefined_N": list(scan["undefined_N"]),
            "compquant_passed": compquant["passed"],
            "compquant_first_failure": compquant["first_failure"],
            "parind_passed": parind["passed"],
            "parind_first_failure": parind["first_failure"],
            "pe_passed": pe["passed"],
        },
        "scan": scan,
        "passed": integrity,
    }


# ---------------------------------------------------------------------------
# arbitrary: approximant route and the triviality ledger sweep


def _arbitrary_point(
    args: tuple[tuple[str, ...], str, int, int, int, float]
) -> dict:
    squares_text, model_name, N, l, n, tol = args
    squares = [float(Fraction(s)) for s in squares_text]
    spec = ez.EmbezzleSpec.from_reals(squares, l, n)
    model, space = hv.fixture_model(model_name)
    report = hv.triviality_bound(model, space, spec, N, tol=tol)
    return {
        "command": "arbitrary",
        "model": model_name,
        "N": N,
        "l": l,
        "n": n,
        "r": spec.r,
        "achieved_epsilon": report["achieved_epsilon"],
        "epsilon_pair": report["epsilon_pair"],
        "epsilon_half": report["epsilon_half"],
        "epsilon_coefficient": report["epsilon_coefficient"],
        "links_hold": report["links_hold"],
        "conclusion_holds": report["conclusion_holds"],
        "verdict": _verdict(report["passed"]),
    }


def run_arbitrary(cfg: dict) -> dict:
    squares = _parse_fraction_list(cfg.get("coeffs") or "1/3,2/3", "--coeffs")
    if abs(float(sum(squares)) - 1.0) > 1e-12:
        raise ConfigError(f"squared coefficients must sum to 1, got {sum(squares)}")
    Ns = _parse_int_list(cfg.get("N") or "2", "--N")
    ls = _parse_int_list(cfg.get("l") or "3", "--l")
    ns = _parse_int_list(cfg.get("n") or "100", "--n")
    tol = float(cfg.get("tol") or 1e-9)
    model_name = str(cfg.get("model") or "trivial")
    if model_name not in hv.FIXTURE_NAMES:
        raise ConfigError(
            f"arbitrary sweeps run built-in fixtures only, got {model_name!r}"
        )
    squares_text = tuple(str(q) for q in squares)
    points = [
        (squares_text, model_name, N, l, n, tol) for N in Ns for l in ls for n in ns
    ]
    rows = _map_grid(_arbitrary_point, points, _resolve_workers(cfg))
    by_key = {(row["N"], row["l"], row["n"]): row for row in rows}
    n_levels, l_levels = [], []
    for N in Ns:
        for l in ls:
            achieved = [by_key[(N, l, n)]["achieved_epsilon"] for n in ns]
            n_levels.append(
                {"N": N, "l": l, "n": list(ns), "achieved_epsilon": achieved,
                 "decreasing": _monotone_decreasing(achieved, strict=False)}
            )
        achieved_l = [by_key[(N, l, ns[-1])]["achieved_epsilon"] for l in ls]
        l_levels.append(
            {"N": N, "l": list(ls), "achieved_epsilon": achieved_l,
             "decreasing": _monotone_decreasing(achieved_l, strict=False)}
        )
    achieved_N = [by_key[(N, ls[-1], ns[-1])]["achieved_epsilon"] for N in Ns]
    previous = None
    for row in rows:
        key = (row["N"], row["l"])
        row["level_gap"] = (
            row["achieved_epsilon"] - previous["achieved_epsilon"]
            if previous is not None and (previous["N"], previous["l"]) == key
            else None
        )
        previous = row
    return {
        "command": "arbitrary",
        "parameters": {
            "coeffs": [str(q) for q in squares], "model": model_name,
            "N": list(Ns), "l": list(ls), "n": list(ns), "tol": tol,
            "nesting": ["N", "l", "n (innermost)"],
        },
        "columns": [
            "command", "model", "N", "l", "n", "r", "achieved_epsilon",
            "epsilon_pair", "epsilon_half", "epsilon_coefficient",
            "links_hold", "conclusion_holds", "level_gap", "verdict",
        ],
        "rows": rows,
        "convergence": {
            "n_levels": n_levels,
            "l_levels": l_levels,
            "N_levels": {
                "N": list(Ns), "achieved_epsilon": achieved_N,
                "decreasing": _monotone_decreasing(achieved_N, strict=False),
            },
        },
        "passed": all(r["verdict"] == "pass" for r in rows),
    }


# ---------------------------------------------------------------------------
# validate: re-check a written report


def _recompute_chain_closed_form(row: dict) -> float:
    N = int(row["N"])
    return 2 * N * math.sin(math.pi / (4 * N)) ** 2


def _recompute_chain_bound(row: dict) -> float:
    return math.pi**2 / (8 * int(row["N"]))


def _recompute_dim_closed_form(row: dict) -> float:
    N, c2 = int(row["N"]), float(row["pair_square"])
    return 4 * N * c2 * math.sin(math.pi / (4 * N)) ** 2


def _recompute_dim_bound(row: dict) -> float:
    return math.pi**2 * float(row["pair_square"]) / (4 * int(row["N"]))


def _recompute_sqrt_reference(row: dict) -> float:
    N, r = int(row["N"]), int(row["r"])
    return 2 * N * (2.0 / r) * math.sin(math.pi / (4 * N)) ** 2


def _recompute_abs_difference(minuend: str, subtrahend: str):
    def recompute(row: dict) -> float:
        return abs(float(row[minuend]) - float(row[subtrahend]))

    return recompute


def _recompute_difference(minuend: str, subtrahend: str):
    def recompute(row: dict) -> float:
        return float(row[minuend]) - float(row[subtrahend])

    return recompute


def _recompute_one_minus(column: str):
    def recompute(row: dict) -> float:
        return 1.0 - float(row[column])

    return recompute


def _recompute_lemma_coefficient(row: dict) -> Fraction:
    J = row["J"]
    if isinstance(J, (list, tuple)):
        size = len(J)
    else:
        tokens = str(J).strip("()[]").replace("|", ",").split(",")
        size = len([tok for tok in tokens if tok.strip()])
    return halfsum.bound_coefficient(int(row["r"]), size)


_REPORT_SCHEMAS: dict[str, dict] = {
    "chain": {
        "columns": [
            "command", "N", "value", "closed_form", "bound",
            "closed_form_deviation", "bound_holds", "verdict",
        ],
        "recompute": {
            "closed_form": _recompute_chain_closed_form,
            "bound": _recompute_chain_bound,
            "closed_form_deviation": _recompute_abs_difference("value", "closed_form"),
        },
    },
    "dim": {
        "columns": [
            "command", "N", "d", "pair", "pair_square", "value", "closed_form",
            "bound", "closed_form_deviation", "bound_holds", "verdict",
        ],
        "recompute": {
            "closed_form": _recompute_dim_closed_form,
            "bound": _recompute_dim_bound,
            "closed_form_deviation": _recompute_abs_difference("value", "closed_form"),
        },
    },
    "sqrt-rational": {
        "columns": [
            "command", "N", "n", "r", "slots", "value", "reference", "gap",
            "gap_bound", "level_gap", "verdict",
        ],
        "recompute": {
            "reference": _recompute_sqrt_reference,
            "gap": _recompute_abs_difference("value", "reference"),
        },
    },
    "lemma": {
        "columns": [
            "command", "r", "J", "check", "lhs", "rhs", "exact",
            "coefficient", "verdict",
        ],
        "recompute": {"coefficient": _recompute_lemma_coefficient},
    },
    "embezzle": {
        "columns": [
            "command", "l", "n", "r", "numerators", "fidelity", "z_form",
            "z_form_gap", "one_minus_fidelity", "trace_distance",
            "distance_bound", "lower_bound_holds", "distance_bound_holds",
            "level_gap", "verdict",
        ],
        "recompute": {
            "z_form_gap": _recompute_difference("fidelity", "z_form"),
            "one_minus_fidelity": _recompute_one_minus("fidelity"),
        },
    },
    "pc": {
        "columns": ["command", "family", "n", "event", "mismatch", "verdict"],
        "recompute": {},
    },
    "couple": {
        "columns": ["command", "instance", "kind", "dimension", "max_deviation", "verdict"],
        "recompute": {},
    },
    "audit": {
        "columns": [
            "command", "model", "N", "chain_value", "chain_closed_form", "lhs",
            "model_chain_value", "refuted", "undefined", "verdict",
        ],
        "recompute": {"chain_closed_form": _recompute_chain_closed_form},
    },
    "arbitrary": {
        "columns": [
            "command", "model", "N", "l", "n", "r", "achieved_epsilon",
            "epsilon_pair", "epsilon_half", "epsilon_coefficient",
            "links_hold", "conclusion_holds", "level_gap", "verdict",
        ],
        "recompute": {},
    },
}


def report_schema_validate(path: str | Path, *, strict: bool = True) -> dict:
    """Re-validate a written report: schema and recomputable closed forms.

    Strict mode requires the exact column set of the producing command; lenient
    mode tolerates added columns.  Closed-form cells are recomputed from the
    row's recorded inputs; any drift is reported with its cell coordinate.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"report file {path} does not exist")
    diagnostics: list[str] = []
    if path.suffix == ".json":
        try:
            report = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            return {"file": str(path), "valid": False, "diagnostics": [f"not valid JSON: {exc}"]}
        command = report.get("command")
        if command not in _REPORT_SCHEMAS:
            return {
                "file": str(path), "valid": False,
                "diagnostics": [f"unknown or missing command {command!r}"],
            }
        schema = _REPORT_SCHEMAS[command]
        for key in ("parameters", "columns", "rows", "passed"):
            if key not in report:
                diagnostics.append(f"missing top-level field {key!r}")
        columns = report.get("columns", [])
        rows = report.get("rows", [])
    else:
        with path.open(newline="") as handle:
            reader = list(csv.reader(handle))
        if not reader:
            return {"file": str(path), "valid": False, "diagnostics": ["empty file"]}
        columns = reader[0]
        if "command" not in columns or not reader[1:]:
            return {
                "file": str(path), "valid": False,
                "diagnostics": ["missing command column or data rows"],
            }
        rows = [dict(zip(columns, row)) for row in reader[1:]]
        command = rows[0]["command"]
        if command not in _REPORT_SCHEMAS:
            return {
                "file": str(path), "valid": False,
                "diagnostics": [f"unknown command {command!r}"],
            }
        schema = _REPORT_SCHEMAS[command]

    expected = schema["columns"]
    missing = [c for c in expected if c not in columns]
    added = [c for c in columns if c not in expected]
    for column in missing:
        diagnostics.append(f"missing column {column!r}")
    if added and strict:
        diagnostics.append(f"unexpected columns {added} (strict mode)")
    for index, row in enumerate(rows):
        for column, recompute in schema["recompute"].items():
            if column not in row:
                continue
            try:
                expected_value = recompute(row)
            except (KeyError, ValueError, TypeError) as exc:
                diagnostics.append(f"row {index}, column {column!r}: cannot recompute ({exc})")
                continue
            recorded = row[column]
            if isinstance(expected_value, Fraction):
                ok = str(recorded) == str(expected_value)
            else:
                try:
                    ok = abs(float(recorded) - expected_value) <= 1e-9
                except (TypeError, ValueError):
                    ok = False
            if not ok:
                diagnostics.append(
                    f"row {index}, column {column!r}: recorded {recorded!r}, "
                    f"recomputed {expected_value!r}"
                )
    return {"file": str(path), "valid": not diagnostics, "diagnostics": diagnostics}


def run_validate(cfg: dict) -> dict:
    result = report_schema_validate(cfg["file"], strict=not cfg.get("lenient"))
    return {
        "command": "validate",
        "parameters": {"file": result["file"], "strict": not cfg.get("lenient")},
        "columns": ["command", "file", "valid", "diagnostics"],
        "rows": [
            {
                "command": "validate",
                "file": result["file"],
                "valid": result["valid"],
                "diagnostics": "; ".join(result["diagnostics"]) or None,
                "verdict": _verdict(result["valid"]),
            }
        ],
        "diagnostics": result["diagnostics"],
        "passed": result["valid"],
    }


# ---------------------------------------------------------------------------
# Argument parsing, config merge, entry point


_HANDLERS = {
    "chain": run_chain,
    "dim": run_dim,
    "sqrt-rational": run_sqrt_rational,
    "arbitrary": run_arbitrary,
    "lemma": run_lemma,
    "embezzle": run_embezzle,
    "pc": run_pc,
    "couple": run_couple,
    "audit": run_audit,
    "validate": run_validate,
}

_DEFAULT_FORMATS = {
    "chain": "csv", "dim": "csv", "sqrt-rational": "csv", "arbitrary": "csv",
    "lemma": "json", "embezzle": "csv", "pc": "csv", "couple": "csv",
    "audit": "json", "validate": "json",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parind-lab",
        description="Deterministic sweep and audit reports for the chained-"
        "correlation laboratory.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in _HANDLERS:
        sub = subparsers.add_parser(command)
        if command == "validate":
            sub.add_argument("file", help="report file to validate (.csv or .json)")
            sub.add_argument("--lenient", action="store_true", default=None,
                             help="tolerate added columns")
        else:
            sub.add_argument("--N", help="comma list of chain depths")
            sub.add_argument("--n", help="comma list of precisions")
            sub.add_argument("--l", help="comma list of approximant levels")
            sub.add_argument("--coeffs", help="comma list of squared coefficients (fractions)")
            sub.add_argument("--model", help="model fixture name or JSON file path")
            sub.add_argument("--seed", type=int, help="seed for randomized audits")
            sub.add_argument("--tol", type=float, help="verdict tolerance")
        sub.add_argument("--format", choices=("csv", "json"), help="report format")
        sub.add_argument("--out", help="output path (default: stdout)")
        sub.add_argument("--workers", type=int, help="worker pool size")
        sub.add_argument("--config", help="JSON config file mirroring the flags")
        if command in ("chain", "audit"):
            sub.add_argument("--state", help="preparation (built-in: bell)")
        if command == "lemma":
            sub.add_argument("--r", type=int, help="even sequence length")
            sub.add_argument("--J", help="comma list of distinguished indices")
        if command == "audit":
            sub.add_argument("--N-max", dest="N_max", type=int,
                             help="audit chains up to this depth")
        if command == "couple":
            sub.add_argument("--instances", type=int, help="random instances to run")
    return parser


def _merge_config(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {args.config!r} does not exist")
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise ConfigError("config file must contain a JSON object")
        known = {
            "N", "n", "l", "coeffs", "model", "seed", "tol", "format", "out",
            "workers", "state", "r", "J", "N_max", "instances", "file", "lenient",
        }
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(payload)
    for key, value in vars(args).items():
        if key in ("command", "config"):
            continue
        if value is not None:
            cfg[key] = value
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        report = _HANDLERS[args.command](cfg)
    except ValueError as exc:
        # ConfigError plus domain validation raised by the constructions
        # themselves (chain depth, coefficient shapes, ...) on user numbers.
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    fmt = cfg.get("format") or _DEFAULT_FORMATS[args.command]
    _write_report(report, fmt, cfg.get("out"))
    return EXIT_OK if report["passed"] else EXIT_VERDICT


if __name__ == "__main__":
    sys.exit(main())
