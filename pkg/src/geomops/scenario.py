"""Scenario files: a validated JSON description of a chart, its structure and a task list.

A scenario names a structure (catalog entry or matrix of expressions), an
optional reference metric, a volume, named functions and maps, and a list of
tasks.  ``run_scenario`` executes the tasks in order and returns a report
dictionary; each verification task carries ``residual``, ``tol`` and
``passed``.  Input problems raise :class:`ScenarioError`; numerical failures
inside a task are recorded on that task and the run continues.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from . import catalog as _catalog
from . import verify as _verify
from .box import Box
from .calculus import bracket, bracket_skew, bracket_sym, grad_left, grad_right
from .catalog import CatalogEntry
from .errors import DimensionError, ExprSyntaxError, GeomOpsError
from .fields import DiffeoMap, ScalarField, matrix, scalar
from .flowdyn import flow_jacobian, gradient_field, transport_check
from .measure import density_volume, laplace_left, laplace_right, lebesgue, liouville_volume, rescale_volume, riemannian_volume
from .morph import (
    check_bracket_naturality,
    check_div_naturality,
    check_grad_naturality,
    check_laplace_naturality,
    is_geometromorphism,
)
from .quad import dirichlet_energy, el_residual, green_combined, green_left, green_riemannian, green_right, symplectic_green
from .structure import GeometricStructure, adjoint_left, adjoint_right

__all__ = ["SCHEMA_ID", "ScenarioError", "Scenario", "schema", "validate", "load", "build", "run_task", "run_scenario", "DEFAULT_TOLS"]

SCHEMA_ID = "geomops.scenario/1"

# per-task default tolerances: algebraic 1e-9, differential 1e-8, integral/flow 1e-6
DEFAULT_TOLS = {
    "eval": 1e-9,
    "grad": 1e-9,
    "bracket": 1e-9,
    "adjoint": 1e-9,
    "laplace": 1e-8,
    "morphcheck": 1e-8,
    "flow": 1e-6,
    "transport": 1e-6,
    "green": 1e-6,
    "dirichlet": 1e-6,
    "verify": None,
}


class ScenarioError(GeomOpsError, ValueError):
    """The scenario (or command line) is malformed; maps to exit code 2."""


@lru_cache(maxsize=1)
def schema() -> dict:
    text = resources.files("geomops").joinpath("scenario_schema.json").read_text()
    return json.loads(text)


def validate(doc) -> None:
    try:
        jsonschema.validate(doc, schema())
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ScenarioError(f"scenario invalid at {where}: {e.message}") from None


def load(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ScenarioError(f"cannot read scenario {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ScenarioError(f"scenario {path} is not valid JSON: {e}") from None
    validate(doc)
    return doc


# ---------------------------------------------------------------- building

class Scenario:
    """Resolved scenario: every name turned into a field, structure or map."""

    def __init__(self, name, dim, box, b, metric, volume, functions, morphisms, entry):
        self.name = name
        self.dim = dim
        self.box = box
        self.b = b
        self.metric = metric
        self.volume = volume
        self.functions = functions
        self.morphisms = morphisms
        self.entry = entry

    def function(self, ref, what="F") -> ScalarField:
        if ref is None:
            raise ScenarioError(f"task needs a function {what}")
        if isinstance(ref, str) and ref in self.functions:
            return self.functions[ref]
        return _expr(ref, self.dim, what)

    def as_entry(self) -> CatalogEntry:
        """A catalog-shaped view, so the verification suites can run on any scenario."""
        if self.entry is not None and self.entry.structure is self.b and self.entry.volume is self.volume:
            return self.entry
        funcs, polys = _catalog._pools(self.dim, self.box)
        funcs.update(self.functions)
        return CatalogEntry(self.name, self.dim, self.b, self.volume, self.box, self.metric,
                            funcs, polys, dict(self.morphisms), {}, "scenario")


def _expr(ref, dim, what):
    try:
        return scalar(ref, dim)
    except (ExprSyntaxError, DimensionError) as e:
        raise ScenarioError(f"{what}: {e}") from None


def _box(spec, dim) -> Box:
    try:
        box = Box.from_flat(spec) if isinstance(spec, list) else Box(tuple(spec["lower"]), tuple(spec["upper"]))
    except ValueError as e:
        raise ScenarioError(f"box: {e}") from None
    if box.dim != dim:
        raise ScenarioError(f"box has dimension {box.dim}, scenario has {dim}")
    return box


def _structure(spec, dim, box, what):
    """Returns ``(structure, entry)``; ``entry`` is set for catalog references."""
    if isinstance(spec, str):
        try:
            entry = _catalog.get(spec)
        except (KeyError, ValueError) as e:
            raise ScenarioError(f"{what}: {e.args[0] if e.args else e}") from None
        return entry.structure, entry
    n = len(spec)
    if any(len(row) != n for row in spec):
        raise ScenarioError(f"{what}: matrix must be square")
    if dim is not None and n != dim:
        raise ScenarioError(f"{what}: {n}x{n} matrix in a scenario of dimension {dim}")
    try:
        return GeometricStructure(matrix(spec, n), box, "custom" if what == "structure" else what), None
    except (ExprSyntaxError, DimensionError) as e:
        raise ScenarioError(f"{what}: {e}") from None


def build(doc: dict) -> Scenario:
    """Resolve a validated scenario document."""
    validate(doc)
    dim = doc.get("dimension")
    b, entry = _structure(doc["structure"], dim, None, "structure")
    if entry is not None:
        if dim is not None and dim != entry.dim:
            raise ScenarioError(f"catalog entry {entry.name} has dimension {entry.dim}, scenario says {dim}")
        dim = entry.dim
    else:
        dim = b.dim
    box = _box(doc["box"], dim) if "box" in doc else (entry.box if entry else Box.cube(dim))
    if entry is None or "box" in doc:
        b = GeometricStructure(b.matrix, box, b.name if entry is None else entry.name)
    metric = entry.metric if entry else None
    if "metric" in doc:
        metric, _ = _structure(doc["metric"], dim, box, "metric")
        if metric.dim != dim:
            raise ScenarioError("metric dimension does not match the structure")
        metric = GeometricStructure(metric.matrix, box, metric.name)
    try:
        volume = _volume(doc.get("volume"), dim, box, b, metric, entry)
    except GeomOpsError as e:
        if isinstance(e, ScenarioError):
            raise
        raise ScenarioError(f"volume: {e}") from None
    functions = dict(entry.functions) if entry else {}
    for k, v in doc.get("functions", {}).items():
        functions[k] = _expr(v, dim, f"function {k}")
    morphisms = dict(entry.morphisms) if entry else {}
    for m in doc.get("morphisms", []):
        if len(m["forward"]) != dim or ("inverse" in m and len(m["inverse"]) != dim):
            raise ScenarioError(f"morphism {m['name']}: needs {dim} components")
        try:
            morphisms[m["name"]] = DiffeoMap.from_exprs(m["forward"], m.get("inverse"), m["name"])
        except (ExprSyntaxError, DimensionError) as e:
            raise ScenarioError(f"morphism {m['name']}: {e}") from None
    name = doc.get("name") or (entry.name if entry else "custom")
    return Scenario(name, dim, box, b, metric, volume, functions, morphisms, entry)


def _volume(spec, dim, box, b, metric, entry):
    if spec is None:
        if entry is not None and entry.box == box:
            return entry.volume
        if entry is not None:
            return _volume({"kind": entry.volume.kind}, dim, box, b, metric, None)
        return lebesgue(dim, box)
    kind = spec["kind"]
    if kind == "lebesgue":
        mu = lebesgue(dim, box)
    elif kind == "riemannian":
        g = metric if metric is not None else b
        mu = riemannian_volume(GeometricStructure(g.matrix, box, g.name))
    elif kind == "liouville":
        mu = liouville_volume(b)
    else:
        if "expr" not in spec:
            raise ScenarioError("volume of kind density needs an expr")
        mu = density_volume(_expr(spec["expr"], dim, "volume expr"), dim, box)
    if "scale" in spec:
        mu = rescale_volume(mu, _expr(spec["scale"], dim, "volume scale"))
    return mu


# ------------------------------------------------------------------- tasks

def _points(sc: Scenario, task):
    pts = task.get("points")
    if pts is None:
        return sc.box.probes(8)
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != sc.dim:
        raise ScenarioError(f"points must have {sc.dim} coordinates each")
    return pts


def _sides(task):
    side = task.get("side", "both")
    return ["L", "R"] if side == "both" else [side]


def _argmax(diff, pts):
    d = np.abs(np.asarray(diff, dtype=float)).reshape(len(pts), -1).max(axis=1)
    i = int(np.argmax(d))
    return float(d[i]), pts[i].tolist()


def _table(pts, columns, values):
    """CSV-ready table: point coordinates followed by value columns."""
    n = pts.shape[1]
    head = [f"x{i + 1}" for i in range(n)] + columns
    rows = [list(map(float, p)) + [float(v) for v in np.ravel(vals)] for p, vals in zip(pts, values)]
    return {"columns": head, "rows": rows}


def _task_eval(sc, task):
    pts = _points(sc, task)
    F = sc.function(task.get("F"))
    v = F(pts)
    return {"value": v.tolist(), "points": pts.tolist(), "table": _table(pts, ["F"], v[:, None])}


def _task_grad(sc, task):
    pts = _points(sc, task)
    F = sc.function(task.get("F"))
    dF = F.jet(pts, 1).grad
    Bv = sc.b.matrix(pts)
    out, cols, vals = {}, [], []
    worst, where = 0.0, None
    for side in _sides(task):
        if side == "L":
            g = grad_left(sc.b, F)(pts)
            diff = np.einsum("mi,mij->mj", g, Bv) - dF
        else:
            g = grad_right(sc.b, F)(pts)
            diff = np.einsum("mij,mj->mi", Bv, g) - dF
        r, p = _argmax(diff, pts)
        if r >= worst:
            worst, where = r, p
        out[f"grad_{side}"] = g.tolist()
        cols += [f"grad{side}_{i + 1}" for i in range(sc.dim)]
        vals.append(g)
    out.update(value=out[f"grad_{_sides(task)[0]}"], points=pts.tolist(), residual=worst, argmax_point=where,
               identity="defining relation b(gradL F, e_i) = dF_i, b(e_i, gradR F) = dF_i",
               table=_table(pts, cols, np.concatenate(vals, axis=1)))
    return out


def _task_bracket(sc, task):
    pts = _points(sc, task)
    F, G = sc.function(task.get("F")), sc.function(task.get("G"), "G")
    variant = task.get("variant", "full")
    makers = {"full": bracket, "sym": bracket_sym, "skew": bracket_skew}
    if variant not in makers:
        raise ScenarioError(f"bracket variant must be one of {', '.join(makers)}")
    v = makers[variant](sc.b, F, G)(pts)
    Bv = sc.b.matrix(pts)
    lhs = np.einsum("mi,mij,mj->m", grad_left(sc.b, F)(pts), Bv, grad_left(sc.b, G)(pts))
    rhs = np.einsum("mi,mij,mj->m", grad_right(sc.b, F)(pts), Bv, grad_right(sc.b, G)(pts))
    r, p = _argmax(lhs - rhs, pts)
    return {"value": v.tolist(), "variant": variant, "points": pts.tolist(), "residual": r, "argmax_point": p,
            "identity": "b(gradL F, gradL G) = b(gradR F, gradR G)", "table": _table(pts, [f"bracket_{variant}"], v[:, None])}


def _task_laplace(sc, task):
    pts = _points(sc, task)
    F = sc.function(task.get("F"))
    out, cols, vals = {}, [], []
    worst, where = 0.0, None
    half = bracket_sym(sc.b, F, F)(pts)
    for side in _sides(task):
        lap = laplace_left if side == "L" else laplace_right
        v = lap(sc.b, sc.volume, F)(pts)
        defect = lap(sc.b, sc.volume, F * F)(pts) - 2.0 * F(pts) * v
        r, p = _argmax(half - 0.5 * defect, pts)
        if r >= worst:
            worst, where = r, p
        out[f"laplace_{side}"] = v.tolist()
        cols.append(f"laplace_{side}")
        vals.append(v[:, None])
    out.update(value=out[f"laplace_{_sides(task)[0]}"], points=pts.tolist(), residual=worst, argmax_point=where,
               identity="{F,F}_sym = (Lap(F^2) - 2 F Lap F) / 2",
               table=_table(pts, cols, np.concatenate(vals, axis=1)))
    return out


def _task_adjoint(sc, task):
    pts = _points(sc, task)
    if "A" not in task:
        raise ScenarioError("adjoint task needs a matrix A")
    try:
        A = matrix(task["A"], sc.dim)
    except (ExprSyntaxError, DimensionError) as e:
        raise ScenarioError(f"A: {e}") from None
    L, R = adjoint_left(sc.b, A), adjoint_right(sc.b, A)
    Av = A(pts)
    diff = np.concatenate([(adjoint_right(sc.b, L)(pts) - Av).reshape(len(pts), -1),
                           (adjoint_left(sc.b, R)(pts) - Av).reshape(len(pts), -1)], axis=1)
    r, p = _argmax(diff, pts)
    Lv, Rv = L(pts), R(pts)
    n2 = sc.dim * sc.dim
    cols = [f"L_{i + 1}{j + 1}" for i in range(sc.dim) for j in range(sc.dim)]
    cols += [f"R_{i + 1}{j + 1}" for i in range(sc.dim) for j in range(sc.dim)]
    table = _table(pts, cols, np.concatenate([Lv.reshape(-1, n2), Rv.reshape(-1, n2)], axis=1))
    return {"adjoint_L": Lv.tolist(), "adjoint_R": Rv.tolist(), "value": Lv.tolist(), "points": pts.tolist(),
            "residual": r, "argmax_point": p, "identity": "(A^{*L})^{*R} = A = (A^{*R})^{*L}", "table": table}


def _task_flow(sc, task):
    F = sc.function(task.get("F"))
    seed = np.asarray(task.get("seed", sc.box.center.tolist()), dtype=float)
    if seed.shape != (sc.dim,):
        raise ScenarioError(f"seed must have {sc.dim} coordinates")
    T, steps = float(task.get("T", 1.0)), int(task.get("steps", 1000))
    X = gradient_field(sc.b, F, task.get("field", "left"))
    J = flow_jacobian(X, seed, T, steps)
    traj = J.trajectory
    stride = max(1, steps // 100)
    idx = list(range(0, steps + 1, stride))
    if idx[-1] != steps:
        idx.append(steps)
    sample = traj.states[idx]
    Fv = F(sample)
    table = {"columns": ["t"] + [f"x{i + 1}" for i in range(sc.dim)] + ["F"],
             "rows": [[float(traj.t[k])] + list(map(float, s)) + [float(f)] for k, s, f in zip(idx, sample, Fv)]}
    return {"value": traj.end.tolist(), "endpoint": traj.end.tolist(), "field": task.get("field", "left"),
            "T": T, "steps": steps, "jacobian_det": float(np.linalg.det(J.end)),
            "F_start": float(Fv[0]), "F_end": float(Fv[-1]), "table": table}


def _task_transport(sc, task):
    F = sc.function(task.get("F"))
    U = _box(task["U"], sc.dim) if "U" in task else sc.box
    side = task.get("side", "L")
    if side == "both":
        raise ScenarioError("transport takes side L or R")
    rep = transport_check(sc.b, sc.volume, F, U, float(task.get("T", 0.1)), int(task.get("steps", 1000)),
                          int(task.get("order", 8)), side, domain=sc.box)
    vals = {k: v for k, v in rep.values.items() if k != "volumes"}
    vols = rep.values["volumes"]
    h = float(task.get("T", 0.1)) / int(task.get("steps", 1000))
    stride = max(1, (len(vols) - 1) // 100)
    table = {"columns": ["t", "volume"], "rows": [[k * h, float(vols[k])] for k in range(0, len(vols), stride)]}
    return {"value": rep.values["volume"], "residual": rep.residual,
            "identity": "d/dt m(Phi_t U) = int_{Phi_t U} Lap F dm (relative)", **vals, "table": table}


def _task_green(sc, task):
    F, G = sc.function(task.get("F")), sc.function(task.get("G"), "G")
    order, panels = int(task.get("order", 8)), int(task.get("panels", 1))
    variant = task.get("variant", "left")
    b, mu, box = sc.b, sc.volume, sc.box
    if variant == "left":
        rep = green_left(b, mu, F, G, box, order, panels)
    elif variant == "right":
        rep = green_right(b, mu, F, G, box, order, panels)
    elif variant == "combined":
        rep = green_combined(b, mu, F, G, box, order, panels)
    elif variant in ("riemannian", "riemannian-L", "riemannian-R"):
        if sc.metric is None:
            raise ScenarioError("riemannian Green identity needs a metric")
        rep = green_riemannian(b, sc.metric, F, G, box, order, "R" if variant.endswith("R") else "L", panels)
    elif variant == "symplectic":
        f = sc.function(task.get("f", 1.0), "f")
        rep = symplectic_green(b, f, F, G, box, order, panels)
    else:
        raise ScenarioError("green variant must be left, right, combined, riemannian[-L|-R] or symplectic")
    d = rep.to_dict()
    d.update(d["parts"])
    d["value"] = d["lhs"]
    return d


def _task_dirichlet(sc, task):
    F = sc.function(task.get("F"))
    order, panels = int(task.get("order", 8)), int(task.get("panels", 1))
    energy = dirichlet_energy(sc.b, sc.volume, F, sc.box, order, panels)
    out = {"value": energy, "energy": energy}
    if "deltaF" in task:
        dF = sc.function(task["deltaF"], "deltaF")
        rep = el_residual(sc.b, sc.volume, F, dF, sc.box, int(task.get("order", 16)),
                          float(task.get("lam", 1e-4)), panels=int(task.get("panels", 16)))
        out.update(rep.to_dict())
        out["value"] = energy
        out["identity"] = "numeric dE = analytic dE"
    return out


def _task_morphcheck(sc, task):
    name = task.get("morphism")
    if name not in sc.morphisms:
        raise ScenarioError(f"unknown morphism {name!r}; known: {', '.join(sc.morphisms) or 'none'}")
    phi = sc.morphisms[name]
    pts = task.get("points")
    pts = sc.box.probes(50) if pts is None else _points(sc, task)
    which = task.get("check", "all")
    reports = []
    F = sc.function(task.get("F", f"x1^2 + x{sc.dim}"), "F")
    G = sc.function(task.get("G", "x1"), "G")
    checks = ["geometromorphism", "grad", "bracket", "div", "laplace"] if which == "all" else [which]
    for c in checks:
        if c == "geometromorphism":
            reports.append(is_geometromorphism(phi, sc.b, sc.b, pts))
        elif c == "grad":
            reports.append(check_grad_naturality(phi, sc.b, sc.b, F, pts))
        elif c == "bracket":
            reports.append(check_bracket_naturality(phi, sc.b, sc.b, F, G, pts))
        elif c == "div":
            reports.append(check_div_naturality(phi, sc.volume, sc.volume, grad_left(sc.b, F), pts))
        else:
            reports.append(check_laplace_naturality(phi, sc.b, sc.volume, sc.b, sc.volume, F, pts))
    worst = max(reports, key=lambda r: r.max_residual)
    return {"morphism": name, "reports": [r.to_dict() for r in reports], "residual": worst.max_residual,
            "argmax_point": worst.argmax_point, "identity": worst.name, "value": worst.max_residual}


def _task_verify(sc, task):
    suite = task.get("suite", "all")
    entry = sc.as_entry()
    try:
        checks = _verify.run_all(entry) if suite == "all" else _verify.run_suite(suite, entry)
    except KeyError as e:
        raise ScenarioError(e.args[0]) from None
    failed = [c for c in checks if not c.passed]
    return {
        "suite": suite,
        "checks": [c.to_dict() for c in checks],
        "failed": [f"{c.suite}.{c.check}" for c in failed],
        "passed_override": not failed,
        "table": {"columns": ["suite", "check", "residual", "tol", "passed", "skipped"],
                  "rows": [[c.suite, c.check, c.residual, c.tol, c.passed, c.skipped] for c in checks]},
    }


TASKS = {
    "eval": _task_eval,
    "grad": _task_grad,
    "bracket": _task_bracket,
    "laplace": _task_laplace,
    "adjoint": _task_adjoint,
    "flow": _task_flow,
    "transport": _task_transport,
    "green": _task_green,
    "dirichlet": _task_dirichlet,
    "morphcheck": _task_morphcheck,
    "verify": _task_verify,
}


def _close(value, expect):
    a = np.asarray(value, dtype=float)
    e = np.asarray(expect, dtype=float)
    try:
        e = np.broadcast_to(e, a.shape)
    except ValueError:
        raise ScenarioError(f"expect has shape {e.shape}, task value has shape {a.shape}") from None
    return float(np.max(np.abs(a - e))) if a.size else 0.0


def run_task(sc: Scenario, task: dict) -> dict:
    """Run one task; numerical failures are caught and recorded, input errors propagate."""
    kind = task["task"]
    tol = task.get("tol", DEFAULT_TOLS[kind])
    head = {"task": kind}
    if "id" in task:
        head["id"] = task["id"]
    try:
        out = TASKS[kind](sc, task)
    except ScenarioError:
        raise
    except GeomOpsError as e:
        res = {**head, "passed": False, "error": type(e).__name__, "message": str(e)}
        point = getattr(e, "point", None)
        if point is not None:
            res["argmax_point"] = np.asarray(point, dtype=float).tolist()
        return res
    override = out.pop("passed_override", None)
    if "expect" in task:
        gap = _close(out.get("value"), task["expect"])
        out["expect_gap"] = gap
        out["residual"] = max(out.get("residual", 0.0), gap)
        out.setdefault("identity", "value = expect")
    if override is not None:
        passed = override
    elif "residual" in out and tol is not None:
        passed = bool(out["residual"] < tol)
        out["tol"] = tol
    else:
        passed = None
    return {**head, **out, "passed": passed}


def run_scenario(doc: dict) -> dict:
    """Validate, build and run every task; ``passed`` is False if any verifying task failed."""
    sc = build(doc)
    results = [run_task(sc, t) for t in doc["tasks"]]
    return {
        "schema": "geomops.report/1",
        "scenario": sc.name,
        "dimension": sc.dim,
        "box": sc.box.to_flat(),
        "structure": sc.b.name,
        "volume": sc.volume.kind,
        "tasks": results,
        "passed": all(r["passed"] is not False for r in results),
    }
