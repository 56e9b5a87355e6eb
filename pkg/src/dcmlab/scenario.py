"""Scenario documents and the generate -> estimate -> check pipeline."""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import hilbert
from .errors import DCMError, ScenarioError
from .estimator import Centering, estimate, estimate_report, ingest_trajectories, normalize
from .formats import matrix_from_json, matrix_to_json, vector_from_json, write_trajectories
from .hilbert import BipartiteShape, check_density, projector
from .marginals import check_marginal_consistency
from .processes import (
    BELL_STATES,
    JumpSchedule,
    MacroRandomizer,
    MicroGrid,
    MixedScheme,
    SchmidtSchedule,
    build_bell_schedule,
    build_pure_schedule,
    check_consistency,
    generate,
    place_points,
    schedule_consistency_set,
)

DEFAULT_CHECKS = {
    "density_tol": 1e-9,
    "max_trace_distance": None,
    "max_marginal_delta": None,
    "consistency": True,
    "selection": True,
}


@dataclass
class Scenario:
    name: str
    shape: BipartiteShape
    scheme: object
    grid: MicroGrid
    n_windows: int
    centering: Centering
    seed: int
    target: np.ndarray | None = None
    checks: dict = field(default_factory=lambda: dict(DEFAULT_CHECKS))


# -- parsing ------------------------------------------------------------------

def _get(doc, key, path, default=...):
    if not isinstance(doc, dict):
        raise ScenarioError("expected an object", path)
    if key not in doc:
        if default is ...:
            raise ScenarioError("missing required field", f"{path}.{key}" if path else key)
        return default
    return doc[key]


def _vector(doc, path):
    try:
        return vector_from_json(doc)
    except (DCMError, TypeError, ValueError) as exc:
        raise ScenarioError(str(exc), path) from exc


def _vectors(docs, path):
    if not isinstance(docs, list) or not docs:
        raise ScenarioError("expected a nonempty list of vectors", path)
    return np.array([_vector(d, f"{path}[{i}]") for i, d in enumerate(docs)])


def _pure_component(doc, shape, law, path):
    kind = _get(doc, "type", path)
    try:
        if kind == "bell":
            which = _get(doc, "which", path, "PhiPlus")
            if which not in BELL_STATES:
                raise ScenarioError(f"unknown Bell state {which!r}", f"{path}.which")
            if (shape.dim_a, shape.dim_b) != (2, 2):
                raise ScenarioError("Bell schemes need shape [2, 2]", path)
            return build_bell_schedule(which, law), hilbert.bell_state(which)
        if kind == "pure":
            psi = _vector(_get(doc, "psi", path), f"{path}.psi")
            if psi.size != shape.dim:
                raise ScenarioError(f"psi has length {psi.size}, shape needs {shape.dim}", f"{path}.psi")
            if doc.get("normalize", False):
                psi = psi / np.linalg.norm(psi)
            return build_pure_schedule(psi, shape, law), psi
    except ScenarioError:
        raise
    except (DCMError, ValueError) as exc:
        raise ScenarioError(str(exc), path) from exc
    raise ScenarioError(f"unknown component type {kind!r}", f"{path}.type")


def _scheme(doc, shape, law):
    """Returns ``(scheme, default_target)``."""
    path = "scheme"
    kind = _get(doc, "type", path)
    if kind in ("bell", "pure"):
        schedule, psi = _pure_component(doc, shape, law, path)
        return schedule, projector(psi)
    if kind == "mixed":
        if "rho" in doc:
            try:
                rho = hilbert.as_density(matrix_from_json(doc["rho"]))
                parts = hilbert.spectral_decompose(rho)
            except DCMError as exc:
                raise ScenarioError(str(exc), "scheme.rho") from exc
            lambdas = np.array([lam for lam, _ in parts])
            lambdas = lambdas / lambdas.sum()
            schedules = [build_pure_schedule(psi, shape, law) for _, psi in parts]
            target = rho
        else:
            lambdas = np.asarray(_get(doc, "lambdas", path), dtype=float)
            comps = _get(doc, "components", path)
            if not isinstance(comps, list) or len(comps) != lambdas.size:
                raise ScenarioError("need one component per lambda", "scheme.components")
            built = [_pure_component(c, shape, law, f"scheme.components[{i}]") for i, c in enumerate(comps)]
            schedules = [s for s, _ in built]
            target = sum(lam * projector(psi) for lam, (_, psi) in zip(lambdas, built))
        try:
            return MixedScheme(lambdas, tuple(schedules)), target
        except ValueError as exc:
            raise ScenarioError(str(exc), "scheme.lambdas") from exc
    if kind == "jump":
        if "bell" in doc:
            if doc["bell"] not in BELL_STATES:
                raise ScenarioError(f"unknown Bell state {doc['bell']!r}", "scheme.bell")
            bell = build_bell_schedule(doc["bell"])
            a, b = bell.a_vectors, bell.b_vectors
        else:
            a = _vectors(_get(doc, "a_vectors", path), "scheme.a_vectors")
            b = _vectors(_get(doc, "b_vectors", path), "scheme.b_vectors")
        r = len(a)
        try:
            schedule = JumpSchedule(
                jump_rate=float(_get(doc, "jump_rate", path)),
                selector_weights=np.asarray(doc.get("selector_weights", [1.0 / r] * r), dtype=float),
                a_vectors=a,
                b_vectors=b,
                coefficients=doc.get("coefficients", "unit"),
                randomizer=MacroRandomizer(float(doc.get("fourth_moment", 1.0)), law),
            )
        except (DCMError, ValueError) as exc:
            raise ScenarioError(str(exc), path) from exc
        if schedule.shape != shape:
            raise ScenarioError("vector dimensions do not match shape", path)
        return schedule, projector(schedule.state())
    raise ScenarioError(f"unknown scheme type {kind!r}", "scheme.type")


def _centering(doc, dim):
    if doc in (None, "empirical"):
        return Centering.empirical()
    if doc == "none":
        return Centering.none()
    if doc == "true_mean_zero":
        return Centering.zero_mean(dim)
    if isinstance(doc, dict) and "true_mean" in doc:
        mean = _vector(doc["true_mean"], "centering.true_mean")
        if mean.size != dim:
            raise ScenarioError(f"mean has length {mean.size}, expected {dim}", "centering.true_mean")
        return Centering.true_mean(mean)
    raise ScenarioError(f"unknown centering {doc!r}", "centering")


def parse_scenario(doc: dict) -> Scenario:
    """Build a :class:`Scenario` from its JSON document."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    try:
        shape = BipartiteShape.of(_get(doc, "shape", ""))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc), "shape") from exc
    law = doc.get("randomizer", "signed")
    if isinstance(law, dict):
        law = law.get("law", "signed")
    if law not in ("signed", "gaussian"):
        raise ScenarioError(f"unknown randomizer law {law!r}", "randomizer")
    scheme, default_target = _scheme(_get(doc, "scheme", ""), shape, law)
    grid_doc = doc.get("grid", {})
    try:
        grid = MicroGrid(float(grid_doc.get("window_length", 1.0)), int(grid_doc.get("n_points", 64)))
    except (TypeError, ValueError, AttributeError) as exc:
        raise ScenarioError(str(exc), "grid") from exc
    n_windows = doc.get("n_windows", 100)
    if not isinstance(n_windows, int) or n_windows < 1:
        raise ScenarioError("must be a positive integer", "n_windows")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ScenarioError("must be an unsigned 64-bit integer", "seed")
    target_doc = doc.get("target", "auto")
    if target_doc == "auto":
        target = default_target
    elif target_doc is None:
        target = None
    else:
        try:
            target = matrix_from_json(target_doc)
        except DCMError as exc:
            raise ScenarioError(str(exc), "target") from exc
        if target.shape != (shape.dim, shape.dim):
            raise ScenarioError(f"target has shape {target.shape}", "target")
    checks = dict(DEFAULT_CHECKS)
    extra = doc.get("checks", {})
    unknown = set(extra) - set(DEFAULT_CHECKS)
    if unknown:
        raise ScenarioError(f"unknown checks {sorted(unknown)}", "checks")
    checks.update(extra)
    return Scenario(
        name=str(doc.get("name", "scenario")),
        shape=shape,
        scheme=scheme,
        grid=grid,
        n_windows=n_windows,
        centering=_centering(doc.get("centering"), shape.dim),
        seed=seed,
        target=target,
        checks=checks,
    )


def load_scenario(path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from exc
    return parse_scenario(doc)


# -- running ------------------------------------------------------------------

def _schedule_info(scheme, grid: MicroGrid) -> dict:
    if isinstance(scheme, SchmidtSchedule):
        _, _, _, counts = place_points(scheme.weights, grid)
        return {
            "type": "schmidt",
            "weights": [float(w) for w in scheme.weights],
            "allocation": [int(c) for c in counts],
            "randomizer": {
                "law": scheme.randomizer.law,
                "magnitude": scheme.randomizer.magnitude,
                "target_fourth_moment": scheme.randomizer.target_fourth_moment,
            },
        }
    if isinstance(scheme, MixedScheme):
        return {
            "type": "mixed",
            "lambdas": [float(v) for v in scheme.lambdas],
            "components": [_schedule_info(s, grid) for s in scheme.schedules],
        }
    return {
        "type": "jump",
        "jump_rate": scheme.jump_rate,
        "selector_weights": [float(v) for v in scheme.selector_weights],
        "coefficients": scheme.coefficients,
    }


def _check(name, passed, value=None, threshold=None):
    return {"name": name, "passed": bool(passed), "value": value, "threshold": threshold}


def simulate(scenario: Scenario, threads: int = 1):
    return generate(scenario.scheme, scenario.grid, scenario.n_windows, scenario.seed, threads)


def run(scenario: Scenario, threads: int = 1, trajectories=None) -> dict:
    """Execute one scenario and return its report.

    The report is a deterministic function of the scenario (no wallclock).
    ``report["passed"]`` is true iff every enabled check passed.
    """
    if trajectories is None:
        selected, trajs = simulate(scenario, threads)
    else:
        selected, trajs = trajectories
    checks = []
    report = {
        "scenario": scenario.name,
        "seed": scenario.seed,
        "shape": [scenario.shape.dim_a, scenario.shape.dim_b],
        "grid": {"window_length": scenario.grid.window_length, "n_points": scenario.grid.n_points},
        "schedule": _schedule_info(scenario.scheme, scenario.grid),
    }

    if scenario.checks["consistency"]:
        scheme = scenario.scheme
        if isinstance(scheme, MixedScheme):
            sets = [schedule_consistency_set(s) for s in scheme.schedules]
            reports = [check_consistency(t, sets[k]) for k, t in zip(selected, trajs)]
        else:
            cset = schedule_consistency_set(scheme)
            reports = [check_consistency(t, cset) for t in trajs]
        bad = [t.window_index for t, r in zip(trajs, reports) if not r.holds]
        report["consistency"] = {"windows_checked": len(trajs), "violating_windows": bad}
        checks.append(_check("micro_time_consistency", not bad, len(bad), 0))

    est = estimate(trajs, scenario.centering)
    report["estimate"] = estimate_report(est, scenario.target)
    rho = normalize(est)
    density = check_density(rho, scenario.checks["density_tol"])
    report["estimate"]["density_check"] = density.to_dict()
    checks.append(_check("density", density.passed, density.min_eigenvalue, -density.tol))

    limit = scenario.checks["max_trace_distance"]
    if limit is not None and scenario.target is not None:
        d = report["estimate"]["trace_distance_to_target"]
        checks.append(_check("trace_distance_to_target", d <= limit, d, limit))

    marg = check_marginal_consistency(trajs)
    report["marginals"] = marg.to_dict()
    limit = scenario.checks["max_marginal_delta"]
    if limit is not None:
        checks.append(_check("marginal_delta", marg.delta <= limit, marg.delta, limit))

    if isinstance(scenario.scheme, MixedScheme):
        lam = scenario.scheme.lambdas
        freq = np.bincount(selected, minlength=lam.size) / len(selected)
        dev = float(np.max(np.abs(freq - lam)))
        bound = 4 / np.sqrt(len(selected))
        report["selection"] = {"frequencies": [float(f) for f in freq], "max_deviation": dev}
        if scenario.checks["selection"]:
            checks.append(_check("selection_frequencies", dev <= bound, dev, bound))

    report["checks"] = checks
    report["passed"] = all(c["passed"] for c in checks)
    return report


def sweep(scenario: Scenario, n_list, threads: int = 1) -> list[dict]:
    """Repeat :func:`run` with the same seed for each window count."""
    rows = []
    for n in n_list:
        start = time.perf_counter()
        rep = run(replace(scenario, n_windows=int(n)), threads)
        rows.append({
            "n_windows": int(n),
            "trace_distance": rep["estimate"].get("trace_distance_to_target"),
            "min_eigenvalue": rep["estimate"]["min_eigenvalue"],
            "marginal_delta": rep["marginals"]["delta"],
            "passed": rep["passed"],
            "wallclock_s": time.perf_counter() - start,
        })
    return rows


SWEEP_COLUMNS = ["n_windows", "trace_distance", "min_eigenvalue", "marginal_delta", "passed", "wallclock_s"]


def write_sweep(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def export_trajectories(scenario: Scenario, path, threads: int = 1):
    selected, trajs = simulate(scenario, threads)
    write_trajectories(path, trajs)
    return selected, trajs


def ingest(path, shape, window_length: float, centering: Centering | None = None,
           n_windows=None, target=None) -> dict:
    """Estimator and marginal checks on an external time-series CSV."""
    shape = BipartiteShape.of(shape)
    centering = centering or Centering.empirical()
    trajs = ingest_trajectories(path, shape, window_length, n_windows)
    est = estimate(trajs, centering)
    report = {
        "source": str(path),
        "shape": [shape.dim_a, shape.dim_b],
        "window_length": window_length,
        "estimate": estimate_report(est, target),
    }
    report["estimate"]["density_check"] = check_density(normalize(est)).to_dict()
    report["marginals"] = check_marginal_consistency(trajs).to_dict()
    return report


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


__all__ = [
    "Scenario",
    "parse_scenario",
    "load_scenario",
    "run",
    "sweep",
    "write_sweep",
    "export_trajectories",
    "ingest",
    "dumps",
    "matrix_to_json",
]
