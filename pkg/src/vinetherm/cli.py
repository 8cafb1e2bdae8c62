"""Command-line entry point.

Every subcommand writes its CSV and/or SVG outputs plus ``manifest.json`` to
``--out``.  Exit codes: 0 success, 1 usage, 2 invalid input, 3 solver
failure.  Failures print one JSON line to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, calib, engine, heatfield, kinematics, ppam, svg, thermo
from .errors import SolverError, ValidationError, VineError
from .scene import Scene, parse_scene

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def sample_path(name) -> Path:
    """Path of a file shipped in the package data directory."""
    return Path(str(resources.files("vinetherm") / "data" / name))


# ---------------------------------------------------------------------------
# Output bookkeeping

class Outputs:
    def __init__(self, out_dir, fmt):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.fmt = fmt
        self.files: list[str] = []

    @property
    def csv(self):
        return self.fmt in ("csv", "both")

    @property
    def svg(self):
        return self.fmt in ("svg", "both")

    def write_csv(self, name, header, rows, comments=()):
        calib.write_csv(self.dir / name, header, rows, comments)
        self.files.append(name)

    def write_text(self, name, text):
        (self.dir / name).write_text(text, encoding="utf-8", newline="\n")
        self.files.append(name)

    def manifest(self, command, config, input_path=None):
        digest = None
        if input_path is not None:
            digest = hashlib.sha256(Path(input_path).read_bytes()).hexdigest()
        doc = {
            "command": command,
            "version": __version__,
            "input": str(input_path) if input_path is not None else None,
            "input_sha256": digest,
            "config": config,
            "outputs": sorted(self.files),
        }
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        (self.dir / "manifest.json").write_text(text, encoding="utf-8", newline="\n")


def _load_scene(args) -> tuple[Scene, Path]:
    path = Path(args.scene) if args.scene else sample_path("default.yaml")
    return parse_scene(path), path


def _fmt(x):
    return calib.format_float(x)


# ---------------------------------------------------------------------------
# Subcommands

def cmd_force_curve(args, out: Outputs):
    sc, path = _load_scene(args)
    geom, fluid = sc.robot.actuator, sc.robot.fluid
    gzf = ppam.zero_force_gamma(geom.l_over_r)
    gammas = np.linspace(ppam.GAMMA_MIN, gzf, args.samples)
    temps = list(args.temps)
    cols = []
    for T in temps:
        pg = thermo.gauge_pressure(T, fluid)
        cols.append([ppam.force(pg, geom, g) for g in gammas])
    header = ["gamma"] + [f"force_T{T:g}" for T in temps]
    rows = [[g] + [c[i] for c in cols] for i, g in enumerate(gammas)]
    if out.csv:
        out.write_csv("force_curve.csv", header, rows, [f"units: 1, N; zero-force gamma {_fmt(gzf)}"])
    if out.svg:
        fmax = max(max(c) for c in cols) or 1.0
        lines = [svg.Polyline(np.column_stack([gammas / gzf, np.asarray(c) / fmax]),
                              svg.PALETTE[k % len(svg.PALETTE)], label=f"T = {T:g} K")
                 for k, (T, c) in enumerate(zip(temps, cols))]
        out.write_text("force_curve.svg", svg.emit_svg(lines, title="force vs contraction (normalised)"))
    config = {"scene": sc.resolved, "temps": temps, "samples": args.samples}
    return config, path, f"zero-force gamma {_fmt(gzf)}"


def cmd_flux_map(args, out: Outputs):
    sc, path = _load_scene(args)
    xs, ys, grid = heatfield.isoflux_grid(sc.heat, args.bounds, args.resolution)
    if out.csv:
        rows = ((x, y, grid[j, i]) for j, y in enumerate(ys) for i, x in enumerate(xs)
                if np.isfinite(grid[j, i]))
        out.write_csv("flux_map.csv", ["x", "y", "flux"], rows, ["units: m, m, W/m^2"])
    if out.svg:
        polys = []
        for k, level in enumerate(args.levels):
            for line in svg.contour_lines(xs, ys, grid, level):
                polys.append(svg.Polyline(line, svg.PALETTE[k % len(svg.PALETTE)], 1.0, label=f"{level:g} W/m^2"))
        for occ in sc.heat.occluders:
            polys.append(svg.Polyline(occ.polygon, "#444444", 1.0, closed=True, fill="#bbbbbb"))
        markers = [svg.Marker(h.position, label="heater") for h in sc.heat.heaters]
        b = args.bounds
        out.write_text("flux_map.svg", svg.emit_svg(polys, markers, bounds=b, title="isoflux contours"))
    config = {"scene": sc.resolved, "bounds": list(args.bounds), "resolution": list(args.resolution),
              "levels": list(args.levels)}
    return config, path, f"flux range {_fmt(np.nanmin(grid))} .. {_fmt(np.nanmax(grid))} W/m^2"


def cmd_gamma_vs_flux(args, out: Outputs):
    sc, path = _load_scene(args)
    cfg = sc.robot
    fluxes = np.linspace(args.flux_min, args.flux_max, args.samples)
    T = thermo.equilibrium_temp(fluxes, cfg.thermal, sc.heat.ambient_temp, cfg.thermal_mode)
    pg = np.asarray(thermo.gauge_pressure(T, cfg.fluid), dtype=float)
    g = np.asarray(ppam.gamma_from_force(args.force, pg, cfg.actuator, unreachable="slack"))
    rows = list(zip(fluxes, T, pg, g))
    if out.csv:
        out.write_csv("gamma_vs_flux.csv", ["flux", "temperature", "gauge_pressure", "gamma"], rows,
                      [f"units: W/m^2, K, Pa, 1; force {_fmt(args.force)} N"])
    if out.svg:
        gzf = ppam.zero_force_gamma(cfg.actuator.l_over_r)
        span = max(args.flux_max - args.flux_min, 1e-9)
        line = svg.Polyline(np.column_stack([(fluxes - args.flux_min) / span, g / gzf]), label="gamma / gamma_zf")
        out.write_text("gamma_vs_flux.svg", svg.emit_svg([line], title="contraction for fixed force vs flux"))
    config = {"scene": sc.resolved, "force": args.force, "flux_min": args.flux_min,
              "flux_max": args.flux_max, "samples": args.samples}
    return config, path, f"gamma at max flux {_fmt(g[-1])}"


def cmd_verify_kinematics(args, out: Outputs):
    geom = kinematics.ChainGeometry(args.l0, args.d)
    gammas = np.tile([args.gamma1, args.gamma2], (args.segments, 1))
    variants = {
        "kinematics.csv": kinematics.segment_angles(gammas, geom),
        "kinematics_constant_curvature.csv": kinematics.constant_curvature_angles(gammas, geom),
    }
    polys = []
    summary = ""
    for k, (name, thetas) in enumerate(variants.items()):
        pose = kinematics.chain_pose(gammas, geom, thetas)
        # row i: section i, points at its far interface, heading of that section
        headings = pose.headings
        rows = [[i + 1, pose.side1[i + 1, 0], pose.side1[i + 1, 1], pose.side2[i + 1, 0], pose.side2[i + 1, 1],
                 math.degrees(thetas[i]), math.degrees(headings[i])] for i in range(len(thetas))]
        if out.csv:
            out.write_csv(name, ["index", "x1", "y1", "x2", "y2", "theta_deg", "heading_deg"], rows,
                          ["units: 1, m, m, m, m, deg, deg"])
        color = svg.PALETTE[k]
        polys += [svg.Polyline(pose.side1, color, label=f"{name} side 1"),
                  svg.Polyline(pose.side2, color, label=f"{name} side 2")]
        if k == 0:
            summary = (f"angles {', '.join(f'{math.degrees(t):.2f}' for t in thetas)} deg; "
                       f"tip heading {math.degrees(pose.tip_heading):.2f} deg")
    if out.svg:
        out.write_text("kinematics.svg", svg.emit_svg(polys, title="chain pose"))
    config = {"gamma1": args.gamma1, "gamma2": args.gamma2, "segments": args.segments, "l0": args.l0, "d": args.d}
    return config, None, summary


def _target(args, sc: Scene):
    if args.target is not None:
        return tuple(args.target)
    return sc.heat.heaters[0].position


def cmd_simulate(args, out: Outputs):
    sc, path = _load_scene(args)
    dt = args.dt if args.dt is not None else sc.sim.dt
    t_end = args.t_end if args.t_end is not None else sc.sim.t_end
    every = args.sample_every if args.sample_every is not None else sc.sim.sample_every
    cfg = sc.robot
    traj = engine.run(sc.heat, cfg, dt, t_end, every)
    target = _target(args, sc)
    final = engine.world_pose(traj.final.gammas, cfg)
    err = math.degrees(engine.bearing_error(final, target))
    if out.csv:
        out.write_csv("trajectory.csv", engine.TRAJECTORY_HEADER, traj.rows(),
                      ["units: s, 1, m, m, m, m, K, K, 1, 1"])
    if out.svg:
        n = len(traj.samples)
        polys = []
        for occ in sc.heat.occluders:
            polys.append(svg.Polyline(occ.polygon, "#444444", 1.0, closed=True, fill="#bbbbbb"))
        for k, s in enumerate(traj.samples):
            shade = int(200 - 200 * k / max(n - 1, 1))
            color = f"#{shade:02x}{shade:02x}ff"
            polys.append(svg.Polyline(0.5 * (s.side1 + s.side2), color, 1.0, label=f"t = {s.time:g} s"))
        last = traj.final
        polys += [svg.Polyline(last.side1, "#d62728", 1.5), svg.Polyline(last.side2, "#1f77b4", 1.5)]
        markers = [svg.Marker(h.position, label="heater") for h in sc.heat.heaters]
        out.write_text("trajectory.svg", svg.emit_svg(polys, markers, title="robot trajectory"))
    config = {"scene": sc.resolved, "dt": dt, "t_end": t_end, "sample_every": every, "target": list(target)}
    return config, path, f"final bearing error {err:.3f} deg after {traj.final.time:g} s, {len(traj.final.gammas)} segments"


def cmd_fit(args, out: Outputs):
    path = Path(args.table) if args.table else sample_path("flux_vs_distance.csv")
    table = calib.MeasurementTable.from_csv(path)
    families = calib.FAMILIES if args.family == "all" else (args.family,)
    results = [calib.fit_decay(table, fam) for fam in families]
    comments = [f"units: {table.units[0]}, {table.units[1]}"]
    for r in results:
        comments.append(f"{r.family}: params {' '.join(_fmt(p) for p in r.params)}; rss {_fmt(r.rss)}")
    header = ["abscissa", "ordinate"] + [f"pred_{r.family.replace('-', '_')}" for r in results]
    rows = [[x, y] + [float(r.predict(x)) for r in results] for x, y in zip(table.abscissa, table.ordinate)]
    if out.csv:
        out.write_csv("fit.csv", header, rows, comments)
    if out.svg:
        xs = np.linspace(table.abscissa[0], table.abscissa[-1], 200)
        ymax = float(np.max(table.ordinate))
        polys = [svg.Polyline(np.column_stack([xs, r.predict(xs) / ymax]), svg.PALETTE[k + 1], label=r.family)
                 for k, r in enumerate(results)]
        markers = [svg.Marker((x, y / ymax), radius=2.5, color="#000000")
                   for x, y in zip(table.abscissa, table.ordinate)]
        out.write_text("fit.svg", svg.emit_svg(polys, markers, title="decay fits (normalised)"))
    config = {"table": str(path), "family": args.family}
    summary = "; ".join(f"{r.family} {' '.join(_fmt(p) for p in r.params)}" for r in results)
    return config, path, summary


COMMANDS = {
    "force-curve": cmd_force_curve,
    "flux-map": cmd_flux_map,
    "gamma-vs-flux": cmd_gamma_vs_flux,
    "verify-kinematics": cmd_verify_kinematics,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--format", choices=("csv", "svg", "both"), default="csv")
    scene_opt = _Parser(add_help=False)
    scene_opt.add_argument("--scene", help="scene YAML (default: the shipped reference scene)")

    p = _Parser(prog="vinetherm", description="Heat-steered growing robot models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("force-curve", parents=[common, scene_opt], help="force vs contraction at fixed temperatures")
    s.add_argument("--temps", type=float, nargs="+", default=[315.0, 320.0], help="temperatures (K)")
    s.add_argument("--samples", type=int, default=50)

    s = sub.add_parser("flux-map", parents=[common, scene_opt], help="incident flux on a grid")
    s.add_argument("--bounds", type=float, nargs=4, default=[-1.0, 1.0, -1.0, 1.0],
                   metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    s.add_argument("--resolution", type=int, nargs=2, default=[81, 81], metavar=("NX", "NY"))
    s.add_argument("--levels", type=float, nargs="+", default=[200.0, 300.0, 500.0, 1000.0],
                   help="contour levels (W/m^2) for SVG output")

    s = sub.add_parser("gamma-vs-flux", parents=[common, scene_opt], help="contraction needed for a force vs flux")
    s.add_argument("--force", type=float, default=5.0, help="muscle force (N)")
    s.add_argument("--flux-min", type=float, default=100.0)
    s.add_argument("--flux-max", type=float, default=3000.0)
    s.add_argument("--samples", type=int, default=60)

    s = sub.add_parser("verify-kinematics", parents=[common], help="chain pose for uniform contractions")
    s.add_argument("--gamma1", type=float, default=0.163)
    s.add_argument("--gamma2", type=float, default=0.0)
    s.add_argument("--segments", type=int, default=5)
    s.add_argument("--l0", type=float, default=0.041, help="section length (m)")
    s.add_argument("--d", type=float, default=0.050, help="muscle spacing (m)")

    s = sub.add_parser("simulate", parents=[common, scene_opt], help="grow-and-steer simulation")
    s.add_argument("--dt", type=float)
    s.add_argument("--t-end", type=float)
    s.add_argument("--sample-every", type=int)
    s.add_argument("--target", type=float, nargs=2, metavar=("X", "Y"),
                   help="bearing target (default: first heater)")

    s = sub.add_parser("fit", parents=[common], help="fit decay laws to a distance table")
    s.add_argument("--table", help="CSV with header abscissa,ordinate (default: shipped flux sample)")
    s.add_argument("--family", choices=calib.FAMILIES + ("all",), default="all")
    return p


def _fail(code, exc, command=None):
    doc = {"error": type(exc).__name__, "exit": code, "message": str(exc)}
    if command:
        doc["command"] = command
    print(json.dumps(doc), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _fail(EXIT_USAGE, exc)
    try:
        out = Outputs(args.out, args.format)
        config, input_path, summary = COMMANDS[args.command](args, out)
        out.manifest(args.command, config, input_path)
    except ValidationError as exc:
        return _fail(EXIT_INVALID, exc, args.command)
    except (SolverError, VineError) as exc:
        return _fail(EXIT_SOLVER, exc, args.command)
    except OSError as exc:
        return _fail(EXIT_INVALID, exc, args.command)
    print(f"{args.command}: {summary}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
