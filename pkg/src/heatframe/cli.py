"""Command-line entry point: ``heatframe solve <file>``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .components import connect_system, instantiate_components
from .errors import BudgetExceeded, HeatFrameError
from .fem import problem_from_system, run_adaptive
from .fem.adaptive import MAX_DOFS, THETA, TOL_ENERGY, TOL_QOI
from .fem.mesh import cross_coordinate
from .genwall import check_ordering, compute_bounds
from .parser import parse_statement
from .quasi1d import solve_quasi1d
from .report import (REPORT_SCHEMA, dumps, render_bounds_figure, render_field_contour, render_field_curve,
                     render_geometry_figure, render_graph_figure)
from .template import GENWALL, QUASI1D, assemble_template, check_well_posed, classify_problem

OUT_ENV = "HEATFRAME_OUT"
EXIT_OK, EXIT_DEFECT, EXIT_USAGE = 0, 1, 2


@dataclass
class RunResult:
    report: dict
    figures: dict[str, bytes] = field(default_factory=dict)
    data: dict[str, str] = field(default_factory=dict)
    timing: dict[str, float] = field(default_factory=dict)
    exit_code: int = EXIT_OK


class _Clock:
    def __init__(self):
        self.stages: dict[str, float] = {}
        self._t = time.perf_counter()

    def lap(self, name: str) -> None:
        now = time.perf_counter()
        self.stages[name] = round(now - self._t, 6)
        self._t = now


def _failure(problem: str, defects: list[dict], partial: dict | None = None) -> dict:
    rep = {"schema": REPORT_SCHEMA, "problem": problem, "ok": False, "defects": defects}
    if partial:
        rep.update(partial)
    return rep


def _quasi1d(system, template, cls, rep: dict, res: RunResult, render: bool) -> None:
    sol = solve_quasi1d(system, template)
    rates = sol.boundary_rates
    total = sum(rates.values())
    scale = max((abs(v) for v in rates.values()), default=0.0)
    samples = sol.samples()
    qois = []
    for spec, value in sol.qoi_results:
        entry = {"spec": spec.to_dict()}
        entry["value"] = {"data": "field.json", "figure": "field.svg" if render else None} \
            if spec.kind == "temperature_field_plot" else value
        qois.append(entry)
    rep["biot"] = {**cls.meta()["Bi"].to_dict(), "verdict": cls.meta()["bi_gate"],
                   "threshold": cls.meta()["bi_threshold"]}
    rep["qoi"] = qois
    rep["solution"] = {
        "ports": [{"x": x, "T": sol.port_values[d]} for d, x in enumerate(sol.dof_x)],
        "segments": [s.to_dict() for s in sol.segments],
        "boundary_heat_rates": dict(sorted(rates.items())),
        "energy_imbalance": abs(total) / scale if scale else 0.0,
        "residual": sol.residual,
        "flux_sign": "outward positive",
    }
    res.data["field.json"] = json.dumps({"components": samples}, sort_keys=True)
    if render:
        res.figures["field.svg"] = render_field_curve(samples, template.through_axis)


def _genwall(system, template, cls, rep: dict, res: RunResult, fe: bool, tol: float, tol_energy: float,
             theta: float, max_dofs: int, render: bool, clock: _Clock) -> None:
    bounds = compute_bounds(system, template, cls)
    clock.lap("bounds")
    rep["bounds"] = {
        "constants": bounds.constants.to_dict(),
        "upper": {"dof_x": bounds.upper.dof_x, "dof_values": bounds.upper.dof_values, "n_dofs": bounds.upper.n_dofs},
        "lower": [{"members": list(m.members), "x": m.x, "T": m.T, "loaded": m.loaded}
                  for m in bounds.lower.members],
        "notes": bounds.notes,
    }
    if fe:
        problem = problem_from_system(system, template, bounds.constants)
        try:
            sol = run_adaptive(problem, tol, tol_energy, theta, max_dofs)
        except BudgetExceeded as exc:
            sol = exc.partial
            res.exit_code = EXIT_DEFECT
            rep["ok"] = False
            rep["defects"] = [exc.as_dict()]
        clock.lap("fem")
        bounds.H_FE = float(sol.qoi_value)
        bounds.fe_error_estimate = float(sol.qoi_error_estimate)
        rep["fe"] = sol.to_dict()
        cross = cross_coordinate(system)
        res.data["fe_field.json"] = json.dumps(sol.mesh.to_dict(sol.u), sort_keys=True)
        if render:
            res.figures["field.svg"] = render_field_contour(sol.mesh, sol.u, template.through_axis, cross)
    rep["bound_panel"] = bounds.panel()
    rep["ordering"] = check_ordering(bounds).to_dict()
    rep["qoi"] = [{"spec": q.to_dict(), "value": bounds.panel()} for q in template.qoi]
    if render:
        res.figures["bounds.svg"] = render_bounds_figure(bounds.panel())


def run(path: str | Path, fe: bool = False, tol: float = TOL_QOI, commonsense: str | None = None,
        tol_energy: float = TOL_ENERGY, theta: float = THETA, max_dofs: int = MAX_DOFS,
        render: bool = True) -> RunResult:
    """Full pipeline on one statement file; never raises for modelling defects."""
    path = Path(path)
    name = path.stem
    clock = _Clock()
    res = RunResult({})
    try:
        text = path.read_text(encoding="utf-8")
        frame = parse_statement(text, commonsense, name)
        clock.lap("parse")
        template = assemble_template(frame)
        diagnosis = check_well_posed(template)
        if not diagnosis.ok:
            res.report = _failure(name, [d.to_dict() for d in diagnosis.defects],
                                  {"diagnosis": diagnosis.to_dict(), "template": template.to_dict()})
            res.exit_code = EXIT_DEFECT
            return res
        cls = classify_problem(template)
        system = connect_system(instantiate_components(template), frame.graph)
        clock.lap("template")
        rep = {
            "schema": REPORT_SCHEMA,
            "version": __version__,
            "problem": name,
            "ok": True,
            "class": cls.to_dict(),
            "parse": frame.summary(),
            "template": template.to_dict(),
            "diagnosis": diagnosis.to_dict(),
        }
        if cls.tag == QUASI1D:
            _quasi1d(system, template, cls, rep, res, render)
        elif cls.tag == GENWALL:
            _genwall(system, template, cls, rep, res, fe, tol, tol_energy, theta, max_dofs, render, clock)
        clock.lap("solve")
        if render:
            res.figures["graph.svg"] = render_graph_figure(frame)
            cross = cross_coordinate(system) if cls.tag == GENWALL else None
            res.figures["geometry.svg"] = render_geometry_figure(system, template, cross)
            clock.lap("figures")
        rep["figures"] = sorted(res.figures)
        rep["data_files"] = sorted(res.data)
        res.report = rep
    except HeatFrameError as exc:
        res.report = _failure(name, [exc.as_dict()])
        res.exit_code = EXIT_DEFECT
    except OSError as exc:
        res.report = _failure(name, [{"code": "ReadError", "message": str(exc), "sentence": None}])
        res.exit_code = EXIT_DEFECT
    res.timing = dict(clock.stages)
    return res


def write_outputs(res: RunResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(dumps(res.report), encoding="utf-8")
    (out_dir / "timing.json").write_text(json.dumps(res.timing, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    for fname, blob in res.figures.items():
        (out_dir / fname).write_bytes(blob)
    for fname, text in res.data.items():
        (out_dir / fname).write_text(text + "\n", encoding="utf-8")


def _summary(rep: dict) -> list[str]:
    lines = [f"{rep['problem']}: {rep.get('class', {}).get('tag', 'failed')}"]
    if not rep.get("ok", False):
        lines += [f"  defect {d['code']}: {d['message']}" for d in rep.get("defects", [])]
    if "biot" in rep:
        lines.append(f"  Biot number {rep['biot']['value']:.6g} ({rep['biot']['verdict']})")
    if "solution" in rep:
        for p in rep["solution"]["ports"]:
            lines.append(f"  T({p['x']:g}) = {p['T']:.6f}")
    if "bound_panel" in rep:
        b = rep["bound_panel"]
        lines.append(f"  H_LB = {b['H_LB']:.6f}  H_UB = {b['H_UB']:.6f}")
        if b["H_FE"] is not None:
            lines.append(f"  H_FE = {b['H_FE']:.6f} +/- {b['fe_error_estimate']:.2e}")
    return lines


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heatframe", description="Solve heat conduction word problems.")
    ap.add_argument("--version", action="version", version=f"heatframe {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="parse, classify and solve a problem statement")
    s.add_argument("file")
    s.add_argument("--fe", action="store_true", help="also run adaptive finite elements (generalized walls)")
    s.add_argument("--tol", type=float, default=TOL_QOI, help="relative tolerance on the FE quantity of interest")
    s.add_argument("--tol-energy", type=float, default=TOL_ENERGY,
                   help="squared energy error estimate relative to the solution energy")
    s.add_argument("--theta", type=float, default=THETA, help="marking fraction")
    s.add_argument("--max-dofs", type=int, default=MAX_DOFS)
    s.add_argument("--commonsense", help="commonsense database file replacing the bundled one")
    s.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./heatframe-out)")
    s.add_argument("--json-only", action="store_true", help="skip figures and print the report to stdout")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    commonsense = None
    if args.commonsense:
        try:
            commonsense = Path(args.commonsense).read_text(encoding="utf-8")
        except OSError as exc:
            print(f"heatframe: cannot read {args.commonsense}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    res = run(args.file, fe=args.fe, tol=args.tol, commonsense=commonsense, tol_energy=args.tol_energy,
              theta=args.theta, max_dofs=args.max_dofs, render=not args.json_only)
    base = Path(args.out or os.environ.get(OUT_ENV) or "heatframe-out")
    out_dir = base / Path(args.file).stem
    write_outputs(res, out_dir)
    if args.json_only or res.exit_code != EXIT_OK:
        sys.stdout.write(dumps(res.report))
    else:
        print("\n".join(_summary(res.report)))
        print(f"  written to {out_dir}")
    return res.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
