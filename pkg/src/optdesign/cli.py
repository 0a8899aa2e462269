"""Command-line front end for the cutting-plane design optimizer.

A run is described by a YAML problem file with four sections (``model``,
``task``, ``solver``, ``output``); the subcommand picks the task family and
the file provides its parameters.  Results print as human-readable tables
shaped like the reference tables (support row, weight row, criterion value,
iterations, time, equivalence gap) or as machine-readable CSV/JSON.

Exit codes: 0 success, 2 problem-file error, 3 infeasible constraint level,
4 iteration limit, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from dataclasses import dataclass, fields
from datetime import datetime, timezone

import numpy as np
import yaml

from . import __version__
from .criteria import (
    AOptimality,
    AveragedCriterion,
    DOptimality,
    EkOptimality,
    phi,
)
from .cutting_plane import (
    SolveConfig,
    SolveReport,
    StopReason,
    efficiency_sweep,
    solve,
    solve_d_given_a,
    solve_ek_sweep,
    solve_maximin,
)
from .lp import dump_lp
from .models import (
    Design,
    compartment_model,
    compartment_response,
    custom_space,
    grid_points,
    poly_model,
    qcube_model,
    qcube_symmetric_space,
    uniform_design,
)
from .perturbation import extended_objective, tuple_from_design

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_INFEASIBLE = 3
EXIT_ITER_LIMIT = 4
EXIT_IO = 5

#: table cells below this weight are hidden (full vectors stay in CSV/JSON)
DISPLAY_TOL = 1e-6

RECORD_SCHEMA = "optdesign.run/1"


class SpecError(Exception):
    """Problem-file rejection; ``errors`` lists precise field complaints."""

    def __init__(self, errors):
        self.errors = [errors] if isinstance(errors, str) else list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ProblemSpec:
    model: dict
    task: dict
    solver: SolveConfig
    output: dict
    text: str  # original file text, hashed into the run record


# ---------------------------------------------------------------------------
# parsing


_MODEL_KINDS = ("polynomial", "qcube", "qcube_symmetric", "compartment",
                "custom_matrix")
_TASK_KINDS = ("optimize", "ek_sweep", "maximin", "d_given_a", "sweep_a",
               "ave", "extended_eval")
_SOLVER_FIELDS = {f.name for f in fields(SolveConfig)} - {"initial_designs"}
_OUTPUT_FIELDS = {"format", "path", "trace"}


def _check_keys(section: dict, allowed, where: str, errors: list):
    for key in section:
        if key not in allowed:
            errors.append(f"{where}: unknown field {key!r}")


def _parse_grid(node, where: str, errors: list):
    """A grid is either an explicit list of points or {start, stop, step}."""
    if isinstance(node, (list, tuple)):
        if not node:
            errors.append(f"{where}: grid list is empty")
            return None
        try:
            return np.asarray(node, dtype=float)
        except (TypeError, ValueError):
            errors.append(f"{where}: grid list entries must be numbers")
            return None
    if not isinstance(node, dict):
        errors.append(f"{where}: grid must be a list or {{start, stop, step}}")
        return None
    _check_keys(node, {"start", "stop", "step"}, where, errors)
    missing = {"start", "stop", "step"} - set(node)
    if missing:
        errors.append(f"{where}: grid is missing {sorted(missing)}")
        return None
    try:
        start, stop, step = (float(node[k]) for k in ("start", "stop", "step"))
    except (TypeError, ValueError):
        errors.append(f"{where}: grid start/stop/step must be numbers")
        return None
    try:
        return grid_points(start, stop, step)
    except ValueError as err:
        errors.append(f"{where}: {err}")
        return None


def _parse_model(node, errors: list) -> dict:
    if not isinstance(node, dict):
        errors.append("model: must be a mapping")
        return {}
    kind = node.get("kind")
    if kind not in _MODEL_KINDS:
        errors.append(
            f"model.kind: expected one of {', '.join(_MODEL_KINDS)}, "
            f"got {kind!r}"
        )
        return {}
    out = {"kind": kind}
    if kind == "polynomial":
        _check_keys(node, {"kind", "degree", "grid"}, "model", errors)
        degree = node.get("degree")
        if not isinstance(degree, int) or degree < 1:
            errors.append(f"model.degree: positive integer required, got {degree!r}")
        else:
            out["degree"] = degree
        if "grid" not in node:
            errors.append("model.grid: required for polynomial models")
        else:
            out["grid"] = _parse_grid(node["grid"], "model.grid", errors)
    elif kind in ("qcube", "qcube_symmetric"):
        allowed = {"kind", "q"} | ({"grid"} if kind == "qcube" else set())
        _check_keys(node, allowed, "model", errors)
        q = node.get("q")
        if not isinstance(q, int) or q < 1:
            errors.append(f"model.q: positive integer required, got {q!r}")
        else:
            out["q"] = q
        if kind == "qcube":
            if "grid" not in node:
                errors.append("model.grid: required for qcube models "
                              "(per-coordinate points)")
            else:
                out["grid"] = _parse_grid(node["grid"], "model.grid", errors)
    elif kind == "compartment":
        _check_keys(node, {"kind", "theta0", "grid"}, "model", errors)
        theta0 = node.get("theta0", (21.8, 0.05884, 4.298))
        try:
            theta0 = tuple(float(v) for v in theta0)
        except (TypeError, ValueError):
            errors.append(f"model.theta0: number list required, got {theta0!r}")
            theta0 = None
        if theta0 is not None and len(theta0) != 3:
            errors.append("model.theta0: compartment model takes 3 parameters")
        out["theta0"] = theta0
        out["grid"] = (_parse_grid(node["grid"], "model.grid", errors)
                       if "grid" in node else None)
    elif kind == "custom_matrix":
        _check_keys(node, {"kind", "path", "matrix", "labels"}, "model", errors)
        if ("path" in node) == ("matrix" in node):
            errors.append("model: custom_matrix needs exactly one of "
                          "path (CSV of feature rows) or matrix (inline)")
        out["path"] = node.get("path")
        out["matrix"] = node.get("matrix")
        out["labels"] = node.get("labels")
    return out


def _parse_task(node, errors: list) -> dict:
    if node is None:
        node = {}
    if not isinstance(node, dict):
        errors.append("task: must be a mapping")
        return {}
    kind = node.get("kind")
    if kind is not None and kind not in _TASK_KINDS:
        errors.append(
            f"task.kind: expected one of {', '.join(_TASK_KINDS)}, got {kind!r}"
        )
        return {}
    allowed = {"kind", "criterion", "a", "a_list", "a_values", "base", "prior",
               "weights", "mu_weights", "nonlinear", "normalizers",
               "references"}
    _check_keys(node, allowed, "task", errors)
    out = dict(node)
    for key in ("a",):
        if key in out:
            try:
                out[key] = float(out[key])
            except (TypeError, ValueError):
                errors.append(f"task.{key}: number required, got {out[key]!r}")
    for key in ("a_list", "a_values", "normalizers", "weights", "mu_weights"):
        if key in out and out[key] is not None:
            try:
                out[key] = [float(v) for v in out[key]]
            except (TypeError, ValueError):
                errors.append(f"task.{key}: number list required")
    if "prior" in out:
        atoms = out["prior"]
        if not isinstance(atoms, list) or not atoms:
            errors.append("task.prior: nonempty list of {theta, weight} required")
        else:
            parsed = []
            for i, atom in enumerate(atoms):
                if (not isinstance(atom, dict)
                        or set(atom) != {"theta", "weight"}):
                    errors.append(
                        f"task.prior[{i}]: expected {{theta, weight}}"
                    )
                    continue
                try:
                    parsed.append((tuple(float(v) for v in atom["theta"]),
                                   float(atom["weight"])))
                except (TypeError, ValueError):
                    errors.append(f"task.prior[{i}]: numeric theta/weight required")
            out["prior"] = parsed
    return out


def _parse_solver(node, errors: list) -> SolveConfig:
    if node is None:
        node = {}
    if not isinstance(node, dict):
        errors.append("solver: must be a mapping")
        return SolveConfig()
    _check_keys(node, _SOLVER_FIELDS, "solver", errors)
    kwargs = {}
    for key, value in node.items():
        if key not in _SOLVER_FIELDS:
            continue
        if key == "max_iter":
            if not isinstance(value, int):
                errors.append(f"solver.max_iter: integer required, got {value!r}")
                continue
        elif key == "record_trace":
            if not isinstance(value, bool):
                errors.append(f"solver.record_trace: boolean required")
                continue
        elif value is not None:
            try:
                value = float(value)
            except (TypeError, ValueError):
                errors.append(f"solver.{key}: number required, got {value!r}")
                continue
        kwargs[key] = value
    try:
        return SolveConfig(**kwargs)
    except ValueError as err:
        errors.append(f"solver: {err}")
        return SolveConfig()


def _parse_output(node, errors: list) -> dict:
    if node is None:
        node = {}
    if not isinstance(node, dict):
        errors.append("output: must be a mapping")
        return {"format": "table", "path": None, "trace": False}
    _check_keys(node, _OUTPUT_FIELDS, "output", errors)
    fmt = node.get("format", "table")
    if fmt not in ("table", "csv", "json"):
        errors.append(f"output.format: table, csv or json, got {fmt!r}")
        fmt = "table"
    trace = node.get("trace", False)
    if not isinstance(trace, bool):
        errors.append("output.trace: boolean required")
        trace = False
    return {"format": fmt, "path": node.get("path"), "trace": trace}


def parse_spec(text: str) -> ProblemSpec:
    """Parse and validate a problem file; raises SpecError with every defect."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise SpecError(f"not valid YAML: {err}") from err
    if doc is None:
        raise SpecError("problem file is empty")
    if not isinstance(doc, dict):
        raise SpecError("top level must be a mapping with model/task/solver/output")
    errors: list[str] = []
    _check_keys(doc, {"model", "task", "solver", "output"}, "top level", errors)
    if "model" not in doc:
        errors.append("model: section is required")
    model = _parse_model(doc.get("model", {}), errors) if "model" in doc else {}
    task = _parse_task(doc.get("task"), errors)
    solver = _parse_solver(doc.get("solver"), errors)
    output = _parse_output(doc.get("output"), errors)
    if errors:
        raise SpecError(errors)
    return ProblemSpec(model, task, solver, output, text)


# ---------------------------------------------------------------------------
# model / criterion construction


def build_space(model: dict):
    """DesignSpace plus the symmetry classes when the model defines them."""
    kind = model["kind"]
    if kind == "polynomial":
        return poly_model(model["degree"], model["grid"]), None
    if kind == "qcube":
        q = model["q"]
        axes = np.meshgrid(*([model["grid"]] * q), indexing="ij")
        points = np.stack(axes, axis=-1).reshape(-1, q)
        return qcube_model(q, points), None
    if kind == "qcube_symmetric":
        return qcube_symmetric_space(model["q"])
    if kind == "compartment":
        grid = model.get("grid")
        if grid is None:
            return compartment_model(theta0=model["theta0"]), None
        return compartment_model(theta0=model["theta0"], grid=grid), None
    if kind == "custom_matrix":
        if model.get("path") is not None:
            features = np.loadtxt(model["path"], delimiter=",", ndmin=2)
        else:
            features = np.asarray(model["matrix"], dtype=float)
        return custom_space(features, model.get("labels")), None
    raise SpecError(f"model.kind: unhandled kind {kind!r}")


def build_criterion(name, space):
    """Criterion object from its short name: D, A, or E<k>."""
    if not isinstance(name, str):
        raise SpecError(f"task.criterion: name string required, got {name!r}")
    if name == "D":
        return DOptimality()
    if name == "A":
        return AOptimality()
    if name.startswith("E") and name[1:].isdigit():
        k = int(name[1:])
        if not 1 <= k <= space.dim_p:
            raise SpecError(
                f"task.criterion: E{k} out of range, model has p={space.dim_p}"
            )
        return EkOptimality(k)
    raise SpecError(f"task.criterion: expected D, A or E<k>, got {name!r}")


# ---------------------------------------------------------------------------
# running


def _require_task_kind(spec: ProblemSpec, kind: str):
    stated = spec.task.get("kind")
    if stated is not None and stated != kind:
        raise SpecError(
            f"task.kind: file says {stated!r} but the {kind.replace('_', '-')} "
            "subcommand was invoked"
        )


def run(spec: ProblemSpec, kind: str, parallel: bool = False) -> dict:
    """Execute one task family and return the run record (a plain dict)."""
    _require_task_kind(spec, kind)
    space, support = build_space(spec.model)
    task = spec.task
    config = spec.solver
    t0 = time.perf_counter()
    record = {
        "schema": RECORD_SCHEMA,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "spec_sha256": hashlib.sha256(spec.text.encode()).hexdigest(),
        "task": kind,
        "model": space.name,
    }

    if kind == "optimize":
        criterion = build_criterion(task.get("criterion", "D"), space)
        reports = [solve(criterion, space, config)]
    elif kind == "ek_sweep":
        optima = solve_ek_sweep(space, config, parallel=parallel)
        record["ek_values"] = [o.value for o in optima]
        reports = [o.report for o in optima]
    elif kind == "maximin":
        reports = [solve_maximin(space, config,
                                 precomputed_ek=task.get("normalizers"))]
    elif kind == "d_given_a":
        levels = task.get("a_list")
        if levels is None:
            if "a" not in task:
                raise SpecError("task.a: required for d-given-a")
            levels = [task["a"]]
        reports = [solve_d_given_a(space, a, config) for a in levels]
    elif kind == "sweep_a":
        a_values = task.get("a_values")
        if not a_values:
            raise SpecError("task.a_values: required for sweep-a")
        refs = task.get("references")
        if refs is not None:
            refs = (float(refs[0]), float(refs[1]))
        sweep = efficiency_sweep(space, a_values, config, references=refs,
                                 parallel=parallel)
        record["sweep"] = {
            "phi_d_star": sweep.phi_d_star,
            "phi_a_star": sweep.phi_a_star,
            "points": [
                {"a": p.a, "phi_d": p.phi_d, "phi_a": p.phi_a,
                 "eff_d": p.eff_d, "eff_a": p.eff_a,
                 "stop_reason": p.stop_reason.value if p.stop_reason else None,
                 "error": p.error}
                for p in sweep.points
            ],
        }
        reports = []
    elif kind == "ave":
        if spec.model["kind"] != "compartment":
            raise SpecError(
                "task.prior: averaging needs a parametric model "
                "(model.kind compartment)"
            )
        prior = task.get("prior")
        if not prior:
            raise SpecError("task.prior: required for ave")
        grid = np.asarray(space.labels, dtype=float)
        atoms = [(compartment_model(theta0=theta, grid=grid), w)
                 for theta, w in prior]
        base = build_criterion(task.get("base", "D"), space)
        criterion = AveragedCriterion(base, atoms)
        reports = [solve(criterion, atoms[0][0], config)]
    elif kind == "extended_eval":
        record["extended"] = _extended_eval(task, spec.model, space)
        reports = []
    else:
        raise SpecError(f"task.kind: unhandled kind {kind!r}")

    record["wall_time_s"] = time.perf_counter() - t0
    record["reports"] = [report_to_dict(r, spec.output["trace"]) for r in reports]
    if support is not None and reports:
        for rec, rep in zip(record["reports"], reports):
            if rep.design is not None:
                rec["class_masses"] = [
                    float(v) for v in support.class_masses(rep.design)
                ]
    record["_reports"] = reports  # live objects for table rendering / dump-lp
    record["_space"] = space
    return record


def _extended_eval(task: dict, model: dict, space) -> dict:
    criterion = build_criterion(task.get("criterion", "D"), space)
    weights = task.get("weights")
    design = (uniform_design(space) if weights is None
              else Design(np.asarray(weights, dtype=float)))
    mu_weights = task.get("mu_weights")
    mu = design if mu_weights is None else Design(np.asarray(mu_weights, dtype=float))
    nonlinear = bool(task.get("nonlinear", False))
    if nonlinear and model["kind"] != "compartment":
        raise SpecError("task.nonlinear: only the compartment model has a "
                        "nonlinear response")
    theta0 = np.asarray(model["theta0"], dtype=float) if nonlinear else None
    tup = tuple_from_design(space, mu, theta0=theta0)
    response = compartment_response if nonlinear else None
    extended = extended_objective(criterion, space, design, tup,
                                  response=response)
    matrix_value = phi(criterion, space, design)
    return {
        "criterion": criterion.name,
        "nonlinear_response": nonlinear,
        "matrix_value": float(matrix_value),
        "extended_value": float(extended),
        "difference": float(extended - matrix_value),
    }


# ---------------------------------------------------------------------------
# records


def report_to_dict(report: SolveReport, with_trace: bool = False) -> dict:
    """JSON-ready view of a SolveReport; floats keep full precision."""
    out = {
        "criterion": getattr(report.criterion, "name", str(report.criterion)),
        "stop_reason": report.stop_reason.value,
        "phi_value": report.phi_value,
        "upper_bound": report.upper_bound,
        "gap": report.gap,
        "iterations": report.iterations,
        "equivalence_gap": report.equivalence_gap,
        "equivalence_reliable": report.equivalence_reliable,
        "regularized": report.regularized,
        "diagnostic": report.diagnostic,
        "a_target": report.a_target,
        "a_value": report.a_value,
        "delta_a_achieved": report.delta_a_achieved,
        "psi_star": report.psi_star,
        "wall_time": report.wall_time,
        "weights": None if report.design is None
        else [float(v) for v in report.design.w],
        "efficiencies": None if report.efficiencies is None
        else [float(v) for v in report.efficiencies],
    }
    if with_trace:
        out["trace"] = [
            {"iteration": e.iteration, "upper_bound": e.upper_bound,
             "value": e.value, "gap": e.gap, "a_value": e.a_value,
             "a_gap": e.a_gap}
            for e in (report.trace or [])
        ]
    return out


def report_from_dict(data: dict) -> SolveReport:
    """Rebuild a SolveReport from its JSON form (weights bit-for-bit)."""
    from .cutting_plane import TraceEntry

    design = (None if data.get("weights") is None
              else Design.from_exact_weights(data["weights"]))
    efficiencies = (None if data.get("efficiencies") is None
                    else np.asarray(data["efficiencies"], dtype=float))
    trace = None
    if "trace" in data:
        trace = [TraceEntry(**entry) for entry in data["trace"]]
    return SolveReport(
        criterion=data["criterion"],
        stop_reason=StopReason(data["stop_reason"]),
        design=design,
        phi_value=data["phi_value"],
        upper_bound=data["upper_bound"],
        gap=data["gap"],
        iterations=data["iterations"],
        equivalence_gap=data["equivalence_gap"],
        equivalence_reliable=data["equivalence_reliable"],
        trace=trace,
        regularized=data["regularized"],
        diagnostic=data["diagnostic"],
        a_target=data["a_target"],
        a_value=data["a_value"],
        delta_a_achieved=data["delta_a_achieved"],
        efficiencies=efficiencies,
        psi_star=data["psi_star"],
        wall_time=data["wall_time"],
    )


def _public_record(record: dict) -> dict:
    return {k: v for k, v in record.items() if not k.startswith("_")}


# ---------------------------------------------------------------------------
# emission


def _fmt(value, digits=6) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    return str(value)


def _label_cell(label) -> str:
    """Labels rounded for table display (grid floats carry arithmetic dust)."""
    if isinstance(label, float):
        return f"{label:.10g}"
    if isinstance(label, tuple):
        return "(" + ",".join(f"{v:.10g}" for v in label) + ")"
    return str(label)


def _design_table(space, weights, lines: list):
    design = Design(np.asarray(weights, dtype=float))
    idx = design.support(DISPLAY_TOL)
    labels = [space.labels[i] for i in idx]
    cells_l = [_label_cell(l) for l in labels]
    cells_w = [f"{design.w[i]:.4f}" for i in idx]
    width = [max(len(a), len(b)) for a, b in zip(cells_l, cells_w)]
    lines.append("  support  " + "  ".join(c.rjust(w) for c, w in zip(cells_l, width)))
    lines.append("  weight   " + "  ".join(c.rjust(w) for c, w in zip(cells_w, width)))
    pruned = int(np.sum((design.w > 0) & (design.w <= DISPLAY_TOL)))
    if pruned:
        lines.append(f"  ({pruned} points below {DISPLAY_TOL:g} not shown)")


def _report_table(space, rep_dict: dict, lines: list):
    lines.append(f"criterion {rep_dict['criterion']}  (model {space.name})")
    if rep_dict.get("weights") is not None:
        _design_table(space, rep_dict["weights"], lines)
    row = [f"phi* = {_fmt(rep_dict['phi_value'], 7)}"]
    if rep_dict.get("a_target") is not None:
        row.append(f"A = {_fmt(rep_dict['a_value'], 5)} (level {_fmt(rep_dict['a_target'], 5)})")
    if rep_dict.get("psi_star") is not None:
        row.append(f"Psi* = {_fmt(rep_dict['psi_star'], 7)}")
    row.append(f"iterations = {rep_dict['iterations']}")
    row.append(f"time = {_fmt(rep_dict['wall_time'], 3)}s")
    lines.append("  " + "   ".join(row))
    gap = rep_dict.get("equivalence_gap")
    if gap is not None:
        tag = "" if rep_dict.get("equivalence_reliable", True) else "  [tie-limited]"
        lines.append(f"  d(xi*) = {_fmt(gap, 3)}{tag}")
    lines.append(f"  certified gap = {_fmt(rep_dict['gap'], 3)}   "
                 f"stop: {rep_dict['stop_reason']}")
    if rep_dict.get("efficiencies") is not None:
        effs = "  ".join(f"{v:.4f}" for v in rep_dict["efficiencies"])
        lines.append(f"  E_k efficiencies: {effs}")
    if rep_dict.get("class_masses") is not None:
        masses = "  ".join(f"{v:.4f}" for v in rep_dict["class_masses"])
        lines.append(f"  class masses C_0..C_q: {masses}")
    if rep_dict.get("diagnostic"):
        lines.append(f"  note: {rep_dict['diagnostic']}")


def format_table(record: dict) -> str:
    space = record["_space"]
    lines = [f"optdesign {record['version']}  task {record['task']}  "
             f"[{record['timestamp']}]"]
    if record["task"] == "ek_sweep":
        lines.append("  k   E_k(opt)      iterations  stop")
        for k, (value, rep) in enumerate(
                zip(record["ek_values"], record["reports"]), start=1):
            lines.append(f"  {k:<3} {value:<13.8g} {rep['iterations']:<11} "
                         f"{rep['stop_reason']}")
    elif record["task"] == "sweep_a":
        sweep = record["sweep"]
        lines.append(f"  phi_D* = {_fmt(sweep['phi_d_star'], 7)}   "
                     f"phi_A* = {_fmt(sweep['phi_a_star'], 7)}")
        lines.append("  a          phi_D       phi_A       eff_D     eff_A")
        for p in sweep["points"]:
            if p["error"]:
                lines.append(f"  {p['a']:<10.6g} failed: {p['error']}")
            else:
                lines.append(
                    f"  {p['a']:<10.6g} {p['phi_d']:<11.6g} {p['phi_a']:<11.6g}"
                    f" {p['eff_d']:<9.6f} {p['eff_a']:<9.6f}"
                )
    elif record["task"] == "extended_eval":
        ext = record["extended"]
        lines.append(f"  criterion {ext['criterion']}  "
                     f"(nonlinear response: {ext['nonlinear_response']})")
        lines.append(f"  matrix criterion value   = {_fmt(ext['matrix_value'], 12)}")
        lines.append(f"  extended objective value = {_fmt(ext['extended_value'], 12)}")
        lines.append(f"  difference               = {_fmt(ext['difference'], 3)}")
    else:
        for rep in record["reports"]:
            _report_table(space, rep, lines)
    lines.append(f"total wall time {record['wall_time_s']:.2f}s")
    return "\n".join(lines) + "\n"


def format_csv(record: dict) -> str:
    """Stable machine-readable layout; schemas documented in docs/."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    task = record["task"]
    if task == "ek_sweep":
        writer.writerow(["k", "value", "iterations", "stop_reason"])
        for k, (value, rep) in enumerate(
                zip(record["ek_values"], record["reports"]), start=1):
            writer.writerow([k, repr(value), rep["iterations"],
                             rep["stop_reason"]])
    elif task == "sweep_a":
        writer.writerow(["a", "phi_d", "phi_a", "eff_d", "eff_a",
                         "stop_reason", "error"])
        for p in record["sweep"]["points"]:
            writer.writerow([
                repr(p["a"]),
                "" if p["phi_d"] is None else repr(p["phi_d"]),
                "" if p["phi_a"] is None else repr(p["phi_a"]),
                "" if p["eff_d"] is None else repr(p["eff_d"]),
                "" if p["eff_a"] is None else repr(p["eff_a"]),
                p["stop_reason"] or "", p["error"] or "",
            ])
    elif task == "extended_eval":
        writer.writerow(["quantity", "value"])
        for key, value in record["extended"].items():
            writer.writerow([key, repr(value) if isinstance(value, float) else value])
    else:
        writer.writerow(["report", "index", "label", "weight"])
        space = record["_space"]
        for r, rep in enumerate(record["reports"]):
            weights = rep.get("weights") or []
            for i, w in enumerate(weights):
                writer.writerow([r, i, space.labels[i], repr(w)])
    return buf.getvalue()


def format_json(record: dict) -> str:
    return json.dumps(_public_record(record), indent=2) + "\n"


# ---------------------------------------------------------------------------
# entry point


def _exit_code(record: dict) -> int:
    reasons = [rep["stop_reason"] for rep in record.get("reports", [])]
    if StopReason.INFEASIBLE_CONSTRAINT.value in reasons:
        return EXIT_INFEASIBLE
    if StopReason.ITER_LIMIT.value in reasons:
        return EXIT_ITER_LIMIT
    return EXIT_OK


_SUBCOMMANDS = {
    "solve": "optimize",
    "ek-sweep": "ek_sweep",
    "maximin": "maximin",
    "d-given-a": "d_given_a",
    "sweep-a": "sweep_a",
    "ave": "ave",
    "extended-eval": "extended_eval",
    "validate": None,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optdesign",
        description="Optimal experimental designs by cutting-plane LP",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name, help=f"{name} task")
        p.add_argument("--spec", required=True, help="problem file (YAML)")
        if name == "validate":
            continue
        p.add_argument("--out", help="write output to this path")
        p.add_argument("--format", choices=("table", "csv", "json"),
                       help="override output.format")
        p.add_argument("--epsilon", type=float, help="override solver.epsilon")
        p.add_argument("--gamma", type=float, help="override solver.gamma")
        p.add_argument("--max-iter", type=int, help="override solver.max_iter")
        p.add_argument("--trace", action="store_true",
                       help="include the per-iteration trace in the output")
        p.add_argument("--parallel", action="store_true",
                       help="run sweep points concurrently")
        p.add_argument("--dump-lp", action="store_true",
                       help="print the final master LP after the result")
    return parser


def _apply_overrides(spec: ProblemSpec, args) -> ProblemSpec:
    changes = {}
    if args.epsilon is not None:
        changes["epsilon"] = args.epsilon
    if args.gamma is not None:
        changes["gamma"] = args.gamma
    if args.max_iter is not None:
        changes["max_iter"] = args.max_iter
    if changes:
        current = {f.name: getattr(spec.solver, f.name)
                   for f in fields(SolveConfig)}
        current.update(changes)
        try:
            spec.solver = SolveConfig(**current)
        except ValueError as err:
            raise SpecError(f"solver: {err}") from err
    if args.format:
        spec.output["format"] = args.format
    if args.out:
        spec.output["path"] = args.out
    if args.trace:
        spec.output["trace"] = True
    return spec


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = open(args.spec, encoding="utf-8").read()
    except OSError as err:
        print(f"cannot read problem file: {err}", file=sys.stderr)
        return EXIT_IO
    try:
        spec = parse_spec(text)
        if args.command == "validate":
            print(f"problem file OK: model {spec.model['kind']}, "
                  f"task {spec.task.get('kind', '(chosen by subcommand)')}")
            return EXIT_OK
        spec = _apply_overrides(spec, args)
        record = run(spec, _SUBCOMMANDS[args.command], parallel=args.parallel)
    except SpecError as err:
        for line in err.errors:
            print(f"problem file error: {line}", file=sys.stderr)
        return EXIT_SPEC
    except (ValueError, TypeError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_SPEC

    fmt = spec.output["format"]
    rendered = {"table": format_table, "csv": format_csv,
                "json": format_json}[fmt](record)
    path = spec.output.get("path")
    if path:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(rendered)
        except OSError as err:
            print(f"cannot write output: {err}", file=sys.stderr)
            return EXIT_IO
        print(f"wrote {fmt} output to {path}")
    else:
        sys.stdout.write(rendered)
    if getattr(args, "dump_lp", False):
        for rep in record.get("_reports", []):
            if rep.lp is not None:
                sys.stdout.write(dump_lp(rep.lp) + "\n")
    return _exit_code(record)


if __name__ == "__main__":
    sys.exit(main())
