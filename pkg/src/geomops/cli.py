"""Command line front door.

Every operator subcommand is turned into a one-task scenario and run through
the same code path as ``geomops run scenario.json``.  Exit codes: 0 when all
verifying tasks pass, 1 on a numerical failure, 2 on malformed input.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import sys

from . import __version__
from . import catalog as _catalog
from . import scenario as _scenario
from .errors import GeomOpsError

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

OPERATORS = ["eval", "grad", "bracket", "laplace", "adjoint", "flow", "transport", "green", "dirichlet", "morphcheck", "verify"]


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _InputError(message)


def _floats(text: str, what: str) -> list:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise _InputError(f"{what}: expected comma separated numbers, got {text!r}") from None


def _rows(text: str, what: str, numeric: bool = False) -> list:
    """``a,b;c,d`` or a JSON array of arrays."""
    text = text.strip()
    if text.startswith("["):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise _InputError(f"{what}: {e}") from None
    rows = [r for r in text.split(";") if r.strip()]
    if numeric:
        return [_floats(r, what) for r in rows]
    return [[c.strip() for c in r.split(",")] for r in rows]


def _structure_ref(text: str):
    t = text.strip()
    # catalog names never contain commas or semicolons; a bare number is a 1x1 matrix
    if t.startswith("[") or ";" in t or "," in t or t.replace(".", "", 1).lstrip("-").isdigit():
        return _rows(t, "--structure")
    return t


def _volume_spec(text: str) -> dict:
    kind, _, expr = text.partition(":")
    if kind not in ("lebesgue", "riemannian", "liouville", "density"):
        raise _InputError(f"--volume: unknown kind {kind!r}")
    spec = {"kind": kind}
    if expr:
        spec["expr"] = expr
    return spec


def _common(p):
    g = p.add_argument_group("chart")
    g.add_argument("--structure", "--catalog", dest="structure", default="euclidean",
                   help="catalog entry name (e.g. shear2, euclidean(3)) or matrix rows 'a,b;c,d'")
    g.add_argument("--dim", type=int, help="chart dimension (inferred from the structure when omitted)")
    g.add_argument("--metric", help="reference metric: catalog name or matrix rows")
    g.add_argument("--volume", help="lebesgue, riemannian, liouville or density:<expr>")
    g.add_argument("--box", help="box bounds a1,b1,a2,b2,...")
    o = p.add_argument_group("output")
    o.add_argument("--report", help="write the JSON report here (default: stdout)")
    o.add_argument("--csv", help="write pointwise tables as CSV here")
    o.add_argument("--no-timestamp", action="store_true", help="omit the timestamp for byte-identical reports")
    o.add_argument("--tol", type=float, help="override the task tolerance")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="geomops", description="Operators of general geometric structures on coordinate charts.")
    p.add_argument("--version", action="version", version=f"geomops {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a scenario JSON file")
    r.add_argument("scenario")
    r.add_argument("--report")
    r.add_argument("--csv")
    r.add_argument("--no-timestamp", action="store_true")

    c = sub.add_parser("catalog", help="list catalog entries")
    c.add_argument("name", nargs="?", help="show one entry in detail")
    c.add_argument("--report")
    c.add_argument("--no-timestamp", action="store_true")

    helps = {
        "eval": "evaluate F at points",
        "grad": "left/right gradients of F",
        "bracket": "the b-bracket {F,G} or its sym/skew part",
        "laplace": "left/right Laplacians of F",
        "adjoint": "left/right adjoints of a matrix field A",
        "flow": "integrate a gradient-like flow",
        "transport": "transport theorem for a flowed box",
        "green": "Green identities on the box",
        "dirichlet": "Dirichlet energy and its first variation",
        "morphcheck": "geometromorphism and naturality checks",
        "verify": "run invariant suites",
    }
    for name in OPERATORS:
        s = sub.add_parser(name, help=helps[name])
        _common(s)
        s.add_argument("--F", help="function: expression or pool name")
        s.add_argument("--G", help="second function")
        s.add_argument("--f", help="auxiliary factor (symplectic Green) ")
        s.add_argument("--deltaF", help="variation for the Euler-Lagrange check (e.g. bump)")
        s.add_argument("--lam", type=float)
        s.add_argument("--A", help="matrix rows for adjoint")
        s.add_argument("--points", help="points 'x,y;x,y'")
        s.add_argument("--seed", help="flow seed point 'x,y'")
        s.add_argument("--T", type=float)
        s.add_argument("--steps", type=int)
        s.add_argument("--field", choices=["left", "right", "sym", "skew"])
        s.add_argument("--side", choices=["L", "R", "both"])
        s.add_argument("--variant", help="bracket: full/sym/skew; green: left/right/combined/riemannian/symplectic")
        s.add_argument("--order", type=int)
        s.add_argument("--panels", type=int)
        s.add_argument("--U", help="transported box a1,b1,...")
        s.add_argument("--morphism")
        s.add_argument("--check", choices=["geometromorphism", "grad", "bracket", "div", "laplace", "all"])
        s.add_argument("--suite", default=None, help="suite name or all")
        s.add_argument("--expect", help="expected value (JSON) compared against the task value")
    return p


def _doc_from_args(a) -> dict:
    doc = {"schema": _scenario.SCHEMA_ID, "structure": _structure_ref(a.structure)}
    if a.dim is not None:
        doc["dimension"] = a.dim
    if a.metric:
        doc["metric"] = _structure_ref(a.metric)
    if a.volume:
        doc["volume"] = _volume_spec(a.volume)
    if a.box:
        doc["box"] = _floats(a.box, "--box")
    task = {"task": a.command}
    for key in ("F", "G", "f", "deltaF", "lam", "T", "steps", "field", "side", "variant", "order", "panels",
                "morphism", "check", "suite", "tol"):
        v = getattr(a, key)
        if v is not None:
            task[key] = v
    if a.command == "verify" and "suite" not in task:
        task["suite"] = "all"
    if a.A:
        task["A"] = _rows(a.A, "--A")
    if a.points:
        task["points"] = _rows(a.points, "--points", numeric=True)
    if a.seed:
        task["seed"] = _floats(a.seed, "--seed")
    if a.U:
        task["U"] = _floats(a.U, "--U")
    if a.expect:
        try:
            task["expect"] = json.loads(a.expect)
        except json.JSONDecodeError as e:
            raise _InputError(f"--expect: {e}") from None
    doc["tasks"] = [task]
    return doc


def _emit(report: dict, path, no_timestamp: bool):
    report = dict(report)
    report["version"] = __version__
    if not no_timestamp:
        report["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_csv(tasks, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for k, t in enumerate(tasks):
            table = t.get("table")
            if not table:
                continue
            w.writerow(["task_index", "task"] + table["columns"])
            for row in table["rows"]:
                w.writerow([k, t["task"]] + [repr(v) if isinstance(v, float) else v for v in row])


def _summary(report: dict) -> str:
    lines = []
    for t in report["tasks"]:
        status = {True: "PASS", False: "FAIL", None: "done"}[t["passed"]]
        line = f"{status} {t['task']}"
        if "residual" in t:
            line += f" residual={t['residual']:.3e}"
        if t["passed"] is False:
            if "message" in t:
                line += f" {t.get('error')}: {t['message']}"
            elif "identity" in t:
                line += f" identity: {t['identity']}"
            if t.get("argmax_point") is not None and "message" not in t:
                line += f" at {t['argmax_point']}"
            if t.get("failed"):
                line += " failed: " + ", ".join(t["failed"])
        lines.append(line)
    return "\n".join(lines)


def _run_doc(doc, a) -> int:
    report = _scenario.run_scenario(doc)
    csv_path = getattr(a, "csv", None)
    if csv_path:
        _write_csv(report["tasks"], csv_path)
    for t in report["tasks"]:
        t.pop("table", None)
    _emit(report, a.report, a.no_timestamp)
    if a.report or not report["passed"]:
        print(_summary(report), file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def _catalog_cmd(a) -> int:
    if a.name:
        try:
            entry = _catalog.get(a.name)
        except (KeyError, ValueError) as e:
            raise _InputError(e.args[0] if e.args else str(e)) from None
        out = {"entries": [entry.summary()]}
    else:
        out = {"entries": [e.summary() for e in _catalog.entries()]}
    _emit(out, a.report, a.no_timestamp)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        a = build_parser().parse_args(argv)
        if a.command == "catalog":
            return _catalog_cmd(a)
        doc = _scenario.load(a.scenario) if a.command == "run" else _doc_from_args(a)
        return _run_doc(doc, a)
    except _InputError as e:
        print(f"geomops: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except _scenario.ScenarioError as e:
        print(f"geomops: input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except GeomOpsError as e:
        print(f"geomops: numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
