"""Batch front-end: validated JSON configs in, solved artifacts out.

Configs are JSON objects discriminated by a required ``"type"`` key;
unknown keys anywhere are rejected with their full path. Two shapes:

``"cantilever"`` runs one end-loaded strip coupled to a beam::

    {
      "type": "cantilever",
      "solid":    {"basis": "lagrange", "degree": 1,
                   "nelems": [40, 10], "span": [0.0, 24.0]},
      "beam":     {"basis": "lagrange", "degree": 1, "nelems": 29,
                   "span": [24.0, 48.0], "theory": "timoshenko"},
      "material": {"E": 3.0e7, "nu": 0.3, "depth": 6.0},
      "load":     {"P": 1000.0},
      "coupling": {"l_c": 24.0, "alpha": 4.7128e7,
                   "n_cut": 10, "tau": 0.01},
      "outputs":  {"centerline_csv": "centerline.csv",
                   "vtk": "solid.vtk", "report": "report.txt",
                   "samples": 97},
      "checks":   {"tip_rel_err": [0.0, 0.015]}
    }

Every block is optional and defaults to the values above. ``alpha`` is
a positive number or ``"auto"``. A ``beam.span`` starting left of
``coupling.l_c`` makes the overlap non-conforming; the covered part of
the beam axis is deactivated. ``checks`` maps result metrics to
inclusive ``[lo, hi]`` bands; a violated band is a tolerance failure
(exit code 2), not an error.

``"bench"`` re-runs a registered benchmark case::

    {"type": "bench", "case": "timo-q4-conforming", "overrides": {}}

Exit codes: 0 success and all bands met, 2 band violated, 1 error.
"""

import argparse
import csv
import json
import pathlib
import sys
import time

import numpy as np

from mdfem import bench
from mdfem.errors import ConfigError, MdfemError

# Result metrics a cantilever config may put bands on.
_METRICS = (
    "alpha", "tip_uy", "tip_uy_exact", "tip_rel_err",
    "centerline_uy_rel_l2", "region_disp_rel_l2", "sxx_line_rel_l2",
    "interface_sxy_rel_l2", "residual", "runtime_s",
)

_DEFAULTS = {
    "solid": {"basis": "lagrange", "degree": 1, "nelems": [40, 10],
              "span": [0.0, 24.0]},
    "beam": {"basis": "lagrange", "degree": 1, "nelems": 29,
             "span": [24.0, 48.0], "theory": "timoshenko"},
    "material": {"E": 3.0e7, "nu": 0.3, "depth": 6.0},
    "load": {"P": 1000.0},
    "outputs": {"centerline_csv": "centerline.csv", "vtk": "solid.vtk",
                "report": "report.txt", "samples": 97},
}


# Config loading and validation ----------------------------------------


def _fail(path, msg):
    raise ConfigError(f"{path}: {msg}")


def _block(cfg, path, key, known):
    raw = cfg.get(key, {})
    if not isinstance(raw, dict):
        _fail(f"{path}{key}", "expected an object")
    for k in raw:
        if k not in known:
            _fail(f"{path}{key}.{k}", "unknown key")
    return raw


def _number(block, path, key, default, *, lo=None, hi=None,
            lo_open=False):
    v = block.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(f"{path}.{key}", "expected a number")
    v = float(v)
    if not np.isfinite(v):
        _fail(f"{path}.{key}", "must be finite")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        _fail(f"{path}.{key}", f"must be {'>' if lo_open else '>='} {lo}")
    if hi is not None and v > hi:
        _fail(f"{path}.{key}", f"must be <= {hi}")
    return v


def _integer(block, path, key, default, *, lo=1):
    v = block.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(f"{path}.{key}", "expected an integer")
    if v < lo:
        _fail(f"{path}.{key}", f"must be >= {lo}")
    return v


def _choice(block, path, key, default, choices):
    v = block.get(key, default)
    if v not in choices:
        _fail(f"{path}.{key}", f"expected one of {', '.join(choices)}")
    return v


def _span(block, path, key, default):
    v = block.get(key, default)
    if (not isinstance(v, list) or len(v) != 2
            or any(isinstance(c, bool) or not isinstance(c, (int, float))
                   for c in v)):
        _fail(f"{path}.{key}", "expected [lo, hi]")
    lo, hi = float(v[0]), float(v[1])
    if not lo < hi:
        _fail(f"{path}.{key}", "must be increasing")
    return [lo, hi]


def _out_name(block, path, key, default):
    v = block.get(key, default)
    if v is None:
        return None
    if not isinstance(v, str) or not v:
        _fail(f"{path}.{key}", "expected a file name or null")
    return v


def _validate_cantilever(cfg):
    d = _DEFAULTS
    solid = _block(cfg, "", "solid", ("basis", "degree", "nelems", "span"))
    basis = _choice(solid, "solid", "basis", d["solid"]["basis"],
                    ("lagrange", "spline"))
    nelems = solid.get("nelems", d["solid"]["nelems"])
    if (not isinstance(nelems, list) or len(nelems) != 2
            or any(isinstance(n, bool) or not isinstance(n, int)
                   or n < 1 for n in nelems)):
        _fail("solid.nelems", "expected [nx, ny] positive integers")
    out_solid = {
        "basis": basis,
        "degree": _integer(solid, "solid", "degree", d["solid"]["degree"]),
        "nelems": list(nelems),
        "span": _span(solid, "solid", "span", d["solid"]["span"]),
    }

    beam = _block(cfg, "", "beam",
                  ("basis", "degree", "nelems", "span", "theory"))
    out_beam = {
        "basis": _choice(beam, "beam", "basis", d["beam"]["basis"],
                         ("lagrange", "spline")),
        "degree": _integer(beam, "beam", "degree", d["beam"]["degree"]),
        "nelems": _integer(beam, "beam", "nelems", d["beam"]["nelems"]),
        "span": _span(beam, "beam", "span", d["beam"]["span"]),
        "theory": _choice(beam, "beam", "theory", d["beam"]["theory"],
                          ("euler_bernoulli", "timoshenko")),
    }

    material = _block(cfg, "", "material", ("E", "nu", "depth"))
    out_material = {
        "E": _number(material, "material", "E", d["material"]["E"],
                     lo=0.0, lo_open=True),
        "nu": _number(material, "material", "nu", d["material"]["nu"],
                      lo=0.0, hi=0.49),
        "depth": _number(material, "material", "depth",
                         d["material"]["depth"], lo=0.0, lo_open=True),
    }

    load = _block(cfg, "", "load", ("P",))
    out_load = {"P": _number(load, "load", "P", d["load"]["P"])}

    coupling = _block(cfg, "", "coupling", ("l_c", "alpha", "n_cut", "tau"))
    alpha = coupling.get("alpha", "auto")
    if alpha != "auto":
        alpha = _number(coupling, "coupling", "alpha", None,
                        lo=0.0, lo_open=True)
    out_coupling = {
        "l_c": _number(coupling, "coupling", "l_c", out_solid["span"][1]),
        "alpha": alpha,
        "n_cut": _integer(coupling, "coupling", "n_cut", 10),
        "tau": _number(coupling, "coupling", "tau", 0.01, lo=0.0, hi=1.0,
                       lo_open=True),
    }
    if out_coupling["l_c"] != out_solid["span"][1]:
        _fail("coupling.l_c", "must sit on the solid's right face "
              f"(solid.span[1] = {out_solid['span'][1]:g})")
    if not out_beam["span"][0] <= out_coupling["l_c"] < out_beam["span"][1]:
        _fail("beam.span", "must reach the interface at l_c")

    outputs = _block(cfg, "", "outputs",
                     ("centerline_csv", "vtk", "report", "samples"))
    out_outputs = {
        k: _out_name(outputs, "outputs", k, d["outputs"][k])
        for k in ("centerline_csv", "vtk", "report")
    }
    out_outputs["samples"] = _integer(outputs, "outputs", "samples",
                                      d["outputs"]["samples"], lo=2)

    checks = _block(cfg, "", "checks", _METRICS)
    out_checks = {}
    for key, band in checks.items():
        if (not isinstance(band, list) or len(band) != 2
                or any(isinstance(c, bool)
                       or not isinstance(c, (int, float)) for c in band)
                or not band[0] <= band[1]):
            _fail(f"checks.{key}", "expected [lo, hi] with lo <= hi")
        out_checks[key] = [float(band[0]), float(band[1])]

    return {"type": "cantilever", "solid": out_solid, "beam": out_beam,
            "material": out_material, "load": out_load,
            "coupling": out_coupling, "outputs": out_outputs,
            "checks": out_checks}


def _validate_bench(cfg):
    case = cfg.get("case")
    if not isinstance(case, str) or not case:
        _fail("case", "expected a bench case name")
    overrides = cfg.get("overrides", {})
    if not isinstance(overrides, dict):
        _fail("overrides", "expected an object")
    for k, v in overrides.items():
        if isinstance(v, bool) or not isinstance(v, (int, float, str)):
            _fail(f"overrides.{k}", "expected a number or string")
    return {"type": "bench", "case": case, "overrides": dict(overrides)}


def validate_config(cfg):
    """Normalize a raw config dict, filling defaults; raises ConfigError."""
    if not isinstance(cfg, dict):
        _fail("", "expected a JSON object")
    kind = cfg.get("type")
    if kind == "cantilever":
        known = ("type", "solid", "beam", "material", "load", "coupling",
                 "outputs", "checks")
    elif kind == "bench":
        known = ("type", "case", "overrides")
    else:
        _fail("type", "expected 'cantilever' or 'bench'")
    for k in cfg:
        if k not in known:
            _fail(k, "unknown key")
    if kind == "cantilever":
        return _validate_cantilever(cfg)
    return _validate_bench(cfg)


def load_config(path):
    """Read, parse and validate a UTF-8 JSON config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return validate_config(raw)


def dump_config(cfg):
    """Serialize an effective config deterministically."""
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"


# Artifact writers ------------------------------------------------------


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, header, rows):
    """Comma-separated values, header row, 17 significant digits, LF."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def von_mises(stress):
    """Von Mises stress from rows of Voigt components (2D plane stress
    ``[s11, s22, s12]`` or 3D ``[s11, s22, s33, s12, s23, s13]``)."""
    s = np.atleast_2d(np.asarray(stress, dtype=float))
    if s.shape[1] == 3:
        s11, s22, s12 = s.T
        sq = s11**2 - s11 * s22 + s22**2 + 3.0 * s12**2
    elif s.shape[1] == 6:
        s11, s22, s33, s12, s23, s13 = s.T
        sq = 0.5 * ((s11 - s22) ** 2 + (s22 - s33) ** 2
                    + (s33 - s11) ** 2) + 3.0 * (s12**2 + s23**2 + s13**2)
    else:
        raise ConfigError(f"expected 3 or 6 stress components, "
                          f"got {s.shape[1]}")
    return np.sqrt(np.maximum(sq, 0.0))


def _grid_points(mesh):
    """Element-corner grid of a box mesh, first direction fastest."""
    axes = [np.linspace(mesh.box[k, 0], mesh.box[k, 1], n + 1)
            for k, n in enumerate(mesh.nelem_per_dir)]
    shape = [len(a) for a in axes]
    pts = np.empty((int(np.prod(shape)), mesh.dim))
    for pid in range(pts.shape[0]):
        rest = pid
        for k, n in enumerate(shape):
            pts[pid, k] = axes[k][rest % n]
            rest //= n
    return pts, shape


def _grid_cells(shape):
    """Quad/hex connectivity over a corner grid, VTK corner order."""
    if len(shape) == 2:
        (n0, n1), stride = shape, shape[0]
        cells = []
        for j in range(n1 - 1):
            for i in range(n0 - 1):
                p = i + stride * j
                cells.append([p, p + 1, p + 1 + stride, p + stride])
        return np.array(cells), 9
    n0, n1, n2 = shape
    cells = []
    for k in range(n2 - 1):
        for j in range(n1 - 1):
            for i in range(n0 - 1):
                p = i + n0 * (j + n1 * k)
                quad = [p, p + 1, p + 1 + n0, p + n0]
                cells.append(quad + [q + n0 * n1 for q in quad])
    return np.array(cells), 12


def solid_field_grid(solid, a_model):
    """Sample displacement and von Mises stress on the element corners.

    Returns ``(points, cells, cell_type, u, vm)`` ready for the VTK
    writer.
    """
    mesh = solid.mesh
    pts, shape = _grid_points(mesh)
    u = np.empty((pts.shape[0], mesh.dim))
    vm = np.empty(pts.shape[0])
    for pid, x in enumerate(pts):
        e = mesh.element_containing(x)
        parent = mesh.local_to_parent(e, x[None, :])
        up, sp = solid.recover(e, parent, a_model)
        u[pid] = up[0]
        vm[pid] = von_mises(sp[0])[0]
    cells, cell_type = _grid_cells(shape)
    return pts, cells, cell_type, u, vm


def write_vtk(path, title, points, cells, cell_type, displacement,
              von_mises_values):
    """Legacy ASCII VTK 3.0 unstructured grid with point data."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    disp = np.atleast_2d(np.asarray(displacement, dtype=float))
    if points.shape[1] < 3:
        pad = np.zeros((points.shape[0], 3 - points.shape[1]))
        points = np.hstack([points, pad])
        disp = np.hstack([disp, np.zeros_like(pad)])
    cells = np.asarray(cells, dtype=int)
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {points.shape[0]} double",
    ]
    lines += [" ".join(_fmt(c) for c in p) for p in points]
    nc, npc = cells.shape
    lines.append(f"CELLS {nc} {nc * (npc + 1)}")
    lines += [f"{npc} " + " ".join(str(c) for c in row) for row in cells]
    lines.append(f"CELL_TYPES {nc}")
    lines += [str(cell_type)] * nc
    lines.append(f"POINT_DATA {points.shape[0]}")
    lines.append("VECTORS displacement double")
    lines += [" ".join(_fmt(c) for c in row) for row in disp]
    lines.append("SCALARS von_mises double 1")
    lines.append("LOOKUP_TABLE default")
    lines += [_fmt(v) for v in von_mises_values]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# Reports ---------------------------------------------------------------


def _check_rows(metrics, checks):
    rows = []
    for key, (lo, hi) in checks.items():
        value = metrics.get(key)
        ok = value is not None and lo <= value <= hi
        rows.append((key, value, lo, hi, bool(ok)))
    return rows


def _report_lines(name, metrics, rows):
    lines = [f"case {name}"]
    for key in sorted(metrics):
        if not key.startswith("_"):
            lines.append(f"  {key} = {metrics[key]:.10g}")
    for key, value, lo, hi, ok in rows:
        shown = "missing" if value is None else f"{value:.10g}"
        verdict = "PASS" if ok else "FAIL"
        lines.append(f"  check {key} = {shown} in [{lo:g}, {hi:g}] "
                     f"-> {verdict}")
    lines.append("PASS" if all(r[4] for r in rows) else "FAIL")
    return lines


def _emit(out_dir, name, text):
    path = out_dir / name
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _write_case_artifacts(out_dir, name, cfg, metrics, rows):
    out_dir.mkdir(parents=True, exist_ok=True)
    _emit(out_dir, "config.json", dump_config(cfg))
    # Wall time goes in the report only, keeping the CSV record
    # byte-identical across runs of the same config.
    scalars = sorted(k for k in metrics
                     if not k.startswith("_") and k != "runtime_s")
    write_csv(out_dir / "metrics.csv", ("metric", "value"),
              [(k, metrics[k]) for k in scalars])
    if "_centerline" in metrics:
        write_csv(out_dir / "centerline.csv", ("x", "uy", "uy_exact"),
                  metrics["_centerline"])
    report = "\n".join(_report_lines(name, metrics, rows)) + "\n"
    _emit(out_dir, "report.txt", report)
    return report


# Subcommands -----------------------------------------------------------


def _cantilever_call(cfg, **extra):
    """Translate an effective cantilever config into a solver call."""
    c = cfg
    consts = {"E": c["material"]["E"], "nu": c["material"]["nu"],
              "D": c["material"]["depth"], "L": c["beam"]["span"][1],
              "P": c["load"]["P"]}
    covered_to = (c["coupling"]["l_c"]
                  if c["beam"]["span"][0] < c["coupling"]["l_c"] else None)
    return bench.run_cantilever(
        c["solid"]["basis"], c["solid"]["degree"],
        tuple(c["solid"]["nelems"]), c["beam"]["nelems"],
        solid_span=tuple(c["solid"]["span"]),
        beam_span=tuple(c["beam"]["span"]), covered_to=covered_to,
        ncut=c["coupling"]["n_cut"], threshold=c["coupling"]["tau"],
        consts=consts, nsample=c["outputs"]["samples"], **extra)


def _run_cantilever_config(cfg, out_dir, quiet):
    t0 = time.perf_counter()
    metrics, state = _cantilever_call(cfg, alpha=cfg["coupling"]["alpha"],
                                      return_state=True)
    metrics["runtime_s"] = time.perf_counter() - t0
    rows = _check_rows(metrics, cfg["checks"])

    out_dir.mkdir(parents=True, exist_ok=True)
    _emit(out_dir, "config.json", dump_config(cfg))
    outs = cfg["outputs"]
    if outs["centerline_csv"]:
        write_csv(out_dir / outs["centerline_csv"], ("x", "uy", "uy_exact"),
                  metrics["_centerline"])
    if outs["vtk"]:
        a_s = state["system"].model_part(state["solution"].a, 0)
        grid = solid_field_grid(state["solid"], a_s)
        write_vtk(out_dir / outs["vtk"], "coupled cantilever, solid part",
                  *grid)
    report = "\n".join(_report_lines("cantilever", metrics, rows)) + "\n"
    if outs["report"]:
        _emit(out_dir, outs["report"], report)
    if not quiet:
        print(report, end="")
    return 0 if all(r[4] for r in rows) else 2


def _run_bench_case(name, overrides, out_dir, quiet):
    metrics = bench.run_case(name, **overrides)
    rows = bench.check_case(name, metrics)
    cfg = {"type": "bench", "case": name, "overrides": dict(overrides)}
    report = _write_case_artifacts(out_dir, name, cfg, metrics, rows)
    if not quiet:
        print(report, end="")
    return 0 if all(r[4] for r in rows) else 2


def _cmd_run(args):
    cfg = load_config(args.config)
    out_dir = _out_path(args)
    if cfg["type"] == "bench":
        return _run_bench_case(cfg["case"], cfg["overrides"],
                               out_dir / cfg["case"], args.quiet)
    return _run_cantilever_config(cfg, out_dir, args.quiet)


def _cmd_bench(args):
    names = bench.case_names() if args.case == "all" else [args.case]
    out_dir = _out_path(args)
    worst = 0
    for name in names:
        code = _run_bench_case(name, {}, out_dir / name, args.quiet)
        worst = max(worst, code)
    return worst


def _cmd_alpha(args):
    cfg = load_config(args.config)
    if cfg["type"] != "cantilever":
        raise ConfigError(
            "type: alpha estimation expects a 'cantilever' config")
    metrics = _cantilever_call(cfg, alpha="auto")
    alpha = metrics["alpha"]
    print(f"alpha = {alpha:.6e}")
    print(f"lambda1 = {2.0 * alpha:.6e}")
    return 0


def _out_path(args):
    return pathlib.Path(args.out_dir)


class _Parser(argparse.ArgumentParser):
    # Usage mistakes are plain errors (exit 1); exit 2 is reserved for
    # tolerance failures.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser():
    parser = _Parser(prog="mdfem",
                     description="Mixed-dimensional coupled analyses.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an analysis from a JSON config")
    run.add_argument("config")
    bench_p = sub.add_parser("bench", help="run a registered bench case")
    bench_p.add_argument("case",
                         help="case name or 'all' "
                              f"({', '.join(bench.case_names())})")
    alpha = sub.add_parser(
        "alpha", help="estimate the stabilization parameter for a config")
    alpha.add_argument("config")

    for p, func in ((run, _cmd_run), (bench_p, _cmd_bench),
                    (alpha, _cmd_alpha)):
        p.add_argument("--out-dir", default=".",
                       help="directory for artifacts (default: .)")
        p.add_argument("--quiet", action="store_true",
                       help="suppress the report on stdout")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except MdfemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
