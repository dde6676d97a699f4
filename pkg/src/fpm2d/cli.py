"""Command-line front end: ``fpm2d solve | converge | fracture | import-check``.

Settings come from built-in defaults, then an optional JSON config file
(``--config``), then explicit flags.  Every run directory receives the fully
resolved ``config.json``.  The output root defaults to ``$FPM_OUTPUT_ROOT``
or the working directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from .approximation import Material
from .assembly import Discretization, Model
from .benchmarks import (BUILDERS, DEFAULT_SEED, build_benchmark, cook_tip_displacement,
                         stress_concentration)
from .export import write_csv, write_vtk
from .meshio import MeshFormatError, mesh_model, read_mesh
from .solve import residual, solve_system, postprocess

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_WARNING = 3

FRACTURE_BUILDERS = ("mode1_square", "mixed_mode_plate", "hole_plate", "oblique_crack_plate", "cracked_disk")
_RANDOM_BUILDERS = ("patch", "hole_plate", "oblique_crack_plate", "cracked_disk")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Resolved settings of one run."""

    command: str = "solve"
    benchmark: str | None = None
    mesh: str | None = None
    resolution: str | None = None
    resolutions: list[str] = field(default_factory=list)
    options: dict = field(default_factory=dict)
    backend: str = "gfd"
    order: int = 1
    eta: float | None = None
    eta_factor: float | None = None
    segment_points: int | None = None
    solver: str = "direct"
    kernel: str | None = None
    material: dict | None = None
    bcs: dict = field(default_factory=dict)
    edge_boxes: list = field(default_factory=list)
    output: str | None = None
    seed: int = DEFAULT_SEED
    criterion: str = "max_hoop"
    threshold: float | None = None
    steps: int = 10
    peak: float = 1.0
    load_factors: list[float] | None = None
    max_inner: int = 50
    snapshots: bool = True

    def validate(self) -> None:
        if self.order not in (1, 2):
            raise ConfigError("order must be 1 or 2")
        if self.backend not in ("gfd", "csrbf"):
            raise ConfigError("backend must be 'gfd' or 'csrbf'")
        if self.solver not in ("direct", "cg"):
            raise ConfigError("solver must be 'direct' or 'cg'")
        if self.eta is not None and self.eta_factor is not None:
            raise ConfigError("give either eta or eta_factor, not both")
        for name in ("eta", "eta_factor"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be positive")
        if self.segment_points is not None and self.segment_points not in (1, 2, 3, 4, 5):
            raise ConfigError("segment_points must be between 1 and 5")
        if self.command == "fracture":
            if self.criterion not in ("max_hoop", "hoop_initiation", "ber_initiation"):
                raise ConfigError(f"unknown criterion {self.criterion!r}")
            if self.criterion == "ber_initiation" and self.order != 1:
                raise ConfigError("the bonding energy rate criterion requires linear trials (order 1)")
            if self.steps < 1:
                raise ConfigError("steps must be at least 1")
            if self.benchmark is not None and self.benchmark not in FRACTURE_BUILDERS:
                raise ConfigError(f"fracture model must be one of {FRACTURE_BUILDERS}")
        if self.command == "converge" and len(self.resolutions) < 2:
            raise ConfigError("convergence study needs at least two resolutions")
        if self.command in ("solve", "fracture", "converge"):
            if (self.benchmark is None) == (self.mesh is None):
                raise ConfigError("give exactly one of benchmark or mesh")
        if self.command == "converge" and self.mesh is not None:
            raise ConfigError("convergence studies need a benchmark with an exact field")


def _coerce(value: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def _parse_option(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ConfigError(f"option {text!r} is not key=value")
    k, v = text.split("=", 1)
    return k.strip(), _coerce(v.strip())


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the JSON file, then flags that were given explicitly."""
    data: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    known = {f.name for f in fields(RunConfig)}
    extra = sorted(set(data) - known)
    if extra:
        raise ConfigError(f"unknown config keys: {extra}")
    data["command"] = args.command
    for name in known - {"command", "options"}:
        v = getattr(args, name, None)
        if v is not None:
            data[name] = v
    opts = dict(data.get("options") or {})
    for item in getattr(args, "option", None) or []:
        k, v = _parse_option(item)
        opts[k] = v
    data["options"] = opts
    cfg = RunConfig(**data)
    cfg.validate()
    return cfg


# ----------------------------------------------------------------------------
# model construction


def _builder(name: str):
    if name in BUILDERS:
        return BUILDERS[name]
    from . import fracture

    if name in FRACTURE_BUILDERS:
        return getattr(fracture, name)
    raise ConfigError(f"unknown benchmark {name!r}; choose from {sorted(set(BUILDERS) | set(FRACTURE_BUILDERS))}")


def build_model(cfg: RunConfig, resolution: str | None = None) -> Model:
    if cfg.mesh is not None:
        from .assembly import BoundarySpec

        mesh = read_mesh(cfg.mesh)
        for entry in cfg.edge_boxes:
            if mesh.tag_edges(entry["tag"], entry["box"]) == 0:
                raise ConfigError(f"edge box for tag {entry['tag']!r} selects no boundary edge")
        bcs = {}
        for tag, spec in cfg.bcs.items():
            t = spec.get("traction")
            bcs[tag] = BoundarySpec(u1=spec.get("u1"), u2=spec.get("u2"),
                                    traction=tuple(t) if t is not None else None)
        mat = Material(**cfg.material) if cfg.material else None
        return mesh_model(mesh, mat, bcs)
    builder = _builder(cfg.benchmark)
    opts = dict(cfg.options)
    res = resolution or cfg.resolution
    if res is not None:
        if cfg.benchmark == "hole_plate":
            opts.setdefault("n", int(res))
        elif cfg.benchmark in ("oblique_crack_plate", "cracked_disk"):
            opts.setdefault("n_points", int(res))
        else:
            opts["resolution"] = res
    if cfg.benchmark in _RANDOM_BUILDERS:
        opts.setdefault("seed", cfg.seed)
    if cfg.material and "E" in cfg.material:
        opts.setdefault("E", cfg.material["E"])
    if cfg.material and "nu" in cfg.material:
        opts.setdefault("nu", cfg.material["nu"])
    try:
        return builder(**opts)
    except TypeError as exc:
        raise ConfigError(f"bad options for {cfg.benchmark}: {exc}") from None


def discretize(cfg: RunConfig, model: Model) -> Discretization:
    eta = cfg.eta
    if cfg.eta_factor is not None:
        eta = cfg.eta_factor * model.material.E
    return Discretization(model, order=cfg.order, backend=cfg.backend, eta=eta,
                          segment_points=cfg.segment_points, kernel=cfg.kernel)


def _output_dir(cfg: RunConfig, label: str) -> str:
    root = os.environ.get("FPM_OUTPUT_ROOT") or os.getcwd()
    out = cfg.output if cfg.output is not None else f"{cfg.command}-{label}"
    path = out if os.path.isabs(out) else os.path.join(root, out)
    os.makedirs(path, exist_ok=True)
    return path


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _echo_config(path: str, cfg: RunConfig) -> None:
    _write_json(os.path.join(path, "config.json"), dict(asdict(cfg), version=__version__))


def _label(cfg: RunConfig) -> str:
    if cfg.mesh is not None:
        return os.path.splitext(os.path.basename(cfg.mesh))[0]
    return cfg.benchmark


def _solve(disc: Discretization, cfg: RunConfig, scale: float = 1.0):
    system = disc.system(scale)
    q = solve_system(system, cfg.solver)
    return postprocess(q, disc), residual(system, q)


def _extras(model: Model, sol, cfg: RunConfig) -> dict:
    """Problem-specific quantities of interest."""
    out: dict = {}
    if model.name == "hole_quarter":
        out["scf"] = stress_concentration(sol, model)
    if model.name == "cook":
        out["u2_A"] = cook_tip_displacement(sol)
    contour = model.meta.get("contour")
    if contour is not None and "tip" in model.meta:
        from .fracture import RectContour, interaction_integral_sifs, j_integral, k_from_j

        rect = RectContour(tuple(model.meta["tip"]), contour[0], contour[1], model.meta.get("crack_angle", 0.0))
        J = j_integral(sol, rect, released=model.released)
        sif = interaction_integral_sifs(sol, rect, released=model.released)
        out.update(J=J, K_I_from_J=k_from_j(J, model.material), K_I=sif.K_I, K_II=sif.K_II,
                   contour=[contour[0], contour[1]])
    return out


# ----------------------------------------------------------------------------
# commands


def cmd_solve(cfg: RunConfig) -> int:
    model = build_model(cfg)
    out = _output_dir(cfg, _label(cfg))
    _echo_config(out, cfg)
    t0 = time.perf_counter()
    disc = discretize(cfg, model)
    sol, res = _solve(disc, cfg)
    elapsed = time.perf_counter() - t0
    write_vtk(os.path.join(out, "field.vtk"), sol, f"fpm2d {model.name}")
    write_csv(os.path.join(out, "field.csv"), sol)
    report = dict(model=model.name, n_points=model.partition.n_points, n_dofs=disc.n_dofs,
                  residual=res, strain_energy=sol.energy, seconds=elapsed)
    if model.exact is not None:
        from .solve import error_norms

        r_u, r_E = error_norms(sol, model.exact)
        report.update(r_u=r_u, r_E=r_E)
    report.update(_extras(model, sol, cfg))
    _write_json(os.path.join(out, "report.json"), report)
    _say(report, out)
    return EXIT_OK


def fit_slope(h, err) -> float:
    """Least-squares slope of log(err) against log(h)."""
    h, err = np.asarray(h, float), np.asarray(err, float)
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def cmd_converge(cfg: RunConfig) -> int:
    from .solve import error_norms

    out = _output_dir(cfg, _label(cfg))
    _echo_config(out, cfg)
    rows = []
    for res in cfg.resolutions:
        model = build_model(cfg, res)
        if model.exact is None:
            raise ConfigError(f"benchmark {cfg.benchmark!r} has no exact field")
        sol, _ = _solve(discretize(cfg, model), cfg)
        r_u, r_E = error_norms(sol, model.exact)
        h = float(np.sqrt(model.partition.domain_area / model.partition.n_points))
        rows.append((res, model.partition.n_points, h, r_u, r_E))
    with open(os.path.join(out, "convergence.csv"), "w", newline="\n") as fh:
        fh.write("resolution,n_points,h,r_u,r_E\n")
        for res, n, h, r_u, r_E in rows:
            fh.write(f"{res},{n},{h:.17g},{r_u:.17g},{r_E:.17g}\n")
    hs = [r[2] for r in rows]
    report = dict(model=cfg.benchmark, resolutions=[r[0] for r in rows],
                  r_u=[r[3] for r in rows], r_E=[r[4] for r in rows],
                  monotone_r_u=bool(all(a > b for a, b in zip([r[3] for r in rows], [r[3] for r in rows][1:]))),
                  monotone_r_E=bool(all(a > b for a, b in zip([r[4] for r in rows], [r[4] for r in rows][1:]))))
    if min(min(report["r_u"]), min(report["r_E"])) > 0:
        report.update(slope_r_u=fit_slope(hs, report["r_u"]), slope_r_E=fit_slope(hs, report["r_E"]))
    _write_json(os.path.join(out, "report.json"), report)
    _say(report, out)
    return EXIT_OK


def cmd_fracture(cfg: RunConfig) -> int:
    from .fracture import CriterionSpec, LoadProgram, quasi_static_drive, write_history_csv, write_polylines

    model = build_model(cfg)
    out = _output_dir(cfg, _label(cfg))
    _echo_config(out, cfg)
    disc = discretize(cfg, model)
    program = (LoadProgram(factors=tuple(cfg.load_factors)) if cfg.load_factors
               else LoadProgram(cfg.steps, cfg.peak))
    crit = CriterionSpec(cfg.criterion, cfg.threshold)
    step_rows = []

    def on_step(rec, sol):
        if cfg.snapshots:
            write_vtk(os.path.join(out, f"step_{rec.step:04d}.vtk"), sol, f"fpm2d {model.name} step {rec.step}")
        step_rows.append(rec)

    result = quasi_static_drive(disc, program, crit, max_inner=cfg.max_inner, on_step=on_step)
    write_history_csv(os.path.join(out, "history.csv"), result.state)
    write_polylines(os.path.join(out, "crack_paths.txt"), result.state)
    with open(os.path.join(out, "steps.csv"), "w", newline="\n") as fh:
        fh.write("step,load,released,solves,energy\n")
        for r in step_rows:
            fh.write(f"{r.step},{r.load:.17g},{len(r.released)},{r.solves},{r.energy:.17g}\n")
    report = dict(model=model.name, criterion=crit.kind, threshold=crit.threshold,
                  steps_run=len(result.steps), n_released=result.n_released, arrested=result.arrested,
                  disconnection=None if result.disconnection is None else asdict(result.disconnection))
    _write_json(os.path.join(out, "report.json"), report)
    _say(report, out)
    if result.disconnection is not None:
        print(f"warning: body disconnected at step {result.disconnection.step}: "
              f"{result.disconnection.message}", file=sys.stderr)
        return EXIT_WARNING
    return EXIT_OK


def cmd_import_check(args: argparse.Namespace) -> int:
    mesh = read_mesh(args.mesh)
    for item in args.edge_box or []:
        tag, box = _parse_box(item)
        mesh.tag_edges(tag, box)
    from .geometry import partition_from_mesh

    part, cloud = partition_from_mesh(mesh.nodes, mesh.elements, mesh.edge_tags)
    tags: dict[str, int] = {}
    for t in part.ext_tags:
        tags[t] = tags.get(t, 0) + 1
    report = dict(source=mesh.source, nodes=len(mesh.nodes), elements=len(mesh.elements),
                  internal_segments=int(part.n_segments), boundary_segments=len(part.ext_tags),
                  boundary_tags=tags, boundary_points=int(np.count_nonzero(cloud.boundary)),
                  area=float(part.domain_area), declared_bcs=sorted(mesh.bcs))
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def _say(report: dict, out: str) -> None:
    keys = [k for k in ("r_u", "r_E", "scf", "u2_A", "K_I_from_J", "K_I", "K_II", "slope_r_u", "slope_r_E",
                        "n_released", "steps_run") if k in report]
    body = ", ".join(f"{k}={report[k]:.6g}" if isinstance(report[k], float) else f"{k}={report[k]}" for k in keys)
    print(f"{report.get('model')}: {body}" if body else str(report.get("model")))
    print(f"artifacts in {out}")


def _parse_box(text: str):
    tag, _, rest = text.partition("=")
    vals = [float(v) for v in rest.split(",")]
    if not tag or len(vals) != 4:
        raise ConfigError(f"edge box {text!r} must look like tag=x0,y0,x1,y1")
    return tag, vals


# ----------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, fracture: bool = False) -> None:
    p.add_argument("--config", help="JSON file with run settings")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--benchmark", help="named model")
    src.add_argument("--mesh", help="mesh file (.fpm text or .inp)")
    p.add_argument("--points", dest="resolution", help="resolution, e.g. 41x6 or 793")
    p.add_argument("--option", action="append", metavar="KEY=VALUE", help="builder option (JSON value)")
    p.add_argument("--backend", choices=("gfd", "csrbf"))
    p.add_argument("--order", type=int, choices=(1, 2))
    eta = p.add_mutually_exclusive_group()
    eta.add_argument("--eta", dest="eta_factor", type=float, help="penalty as a multiple of E")
    eta.add_argument("--eta-abs", dest="eta", type=float, help="absolute penalty")
    p.add_argument("--segment-points", type=int, help="Gauss points per internal segment")
    p.add_argument("--solver", choices=("direct", "cg"))
    p.add_argument("--kernel", choices=("python", "compiled"), help="force a kernel backend")
    p.add_argument("--output", "-o", help="output directory (relative to $FPM_OUTPUT_ROOT)")
    p.add_argument("--seed", type=int, help="seed for random point sets")
    p.add_argument("--edge-box", dest="edge_box_flags", action="append", metavar="TAG=X0,Y0,X1,Y1",
                   help="tag boundary edges of a mesh inside a box")
    p.add_argument("--bc", dest="bc_flags", action="append", metavar="TAG:KEY=VALUE[,KEY=VALUE]",
                   help="boundary condition for a mesh edge tag (keys u1, u2, t1, t2)")
    if fracture:
        p.add_argument("--criterion", choices=("max_hoop", "hoop_initiation", "ber_initiation"))
        p.add_argument("--threshold", type=float)
        p.add_argument("--steps", type=int)
        p.add_argument("--peak", type=float, help="load factor at the last step")
        p.add_argument("--max-inner", type=int)
        p.add_argument("--no-snapshots", dest="snapshots", action="store_const", const=False)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fpm2d", description="Fragile Points Method for 2D elasticity and fracture")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("solve", help="solve one model and write fields"))
    p = sub.add_parser("converge", help="error norms over several resolutions")
    _common(p)
    p.add_argument("--resolutions", nargs="+", help="two or more resolutions")
    _common(sub.add_parser("fracture", help="quasi-static crack growth"), fracture=True)
    p = sub.add_parser("import-check", help="read a mesh and summarise its partition")
    p.add_argument("mesh")
    p.add_argument("--edge-box", action="append", metavar="TAG=X0,Y0,X1,Y1")
    return parser


def _mesh_flags(args, cfg: RunConfig) -> None:
    for item in getattr(args, "edge_box_flags", None) or []:
        tag, box = _parse_box(item)
        cfg.edge_boxes.append({"tag": tag, "box": box})
    for item in getattr(args, "bc_flags", None) or []:
        tag, _, rest = item.partition(":")
        spec: dict = {}
        for kv in filter(None, rest.split(",")):
            k, v = _parse_option(kv)
            if k in ("u1", "u2"):
                spec[k] = float(v)
            elif k in ("t1", "t2"):
                t = list(spec.get("traction", [0.0, 0.0]))
                t[int(k[1]) - 1] = float(v)
                spec["traction"] = t
            else:
                raise ConfigError(f"unknown boundary key {k!r}")
        cfg.bcs[tag] = spec


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "import-check":
            return cmd_import_check(args)
        cfg = resolve_config(args)
        _mesh_flags(args, cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            if cfg.command == "solve":
                return cmd_solve(cfg)
            if cfg.command == "converge":
                return cmd_converge(cfg)
            return cmd_fracture(cfg)
    except (ConfigError, MeshFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
