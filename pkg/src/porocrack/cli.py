"""Command-line front end.

    porocrack mesh   --config run.json --output out/
    porocrack solve  --config run.json --override material.beta=-2
    porocrack sweep  --config run.json --threads 2
    porocrack probe  --config run.json --state out/state_beta_-2.npz
    porocrack verify [--quick]

Exit status is 0 on success and the ``exit_code`` of the raised
:class:`porocrack.errors.PorocrackError` subclass otherwise.
"""

import argparse
import json
import logging
import os
import sys
from importlib import metadata

import numpy as np

from . import config as config_mod
from . import verify as verify_mod
from .errors import ConfigError, InconsistentState, PorocrackError, VerificationFailed
from .fem import FieldState
from .meshkit import corner_jacobians
from .postproc import build_fan_table, export_csv, export_mesh, export_vtk
from .runner import Problem, beta_list, build_mesh, material_params, run_sweep, sweep_tables

log = logging.getLogger("porocrack")


def _version():
    try:
        return metadata.version("porocrack")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _beta_tag(beta):
    return f"beta_{beta:+g}"


def _write_json(path, obj):
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _manifest(outdir, cfg, mesh, command, extra=None):
    data = {"command": command, "tool": "porocrack", "version": _version(),
            "config_sha256": config_mod.digest(cfg), "mesh_sha256": mesh.digest(),
            "n_nodes": mesh.n_nodes, "n_elements": mesh.n_elements, "element_kind": mesh.kind}
    data.update(extra or {})
    _write_json(os.path.join(outdir, "manifest.json"), data)


def _outdir(args, cfg):
    outdir = args.output or cfg["outputs"]["directory"]
    os.makedirs(outdir, exist_ok=True)
    return outdir


def _save_state(path, result, cfg, mesh):
    np.savez(path, u=result.state.u, beta=result.beta, mesh_sha256=mesh.digest(),
             config=json.dumps(cfg, sort_keys=True))


def _write_beta_outputs(outdir, cfg, problem, result):
    formats = cfg["outputs"]["formats"]
    tag = _beta_tag(result.beta)
    if "vtk" in formats:
        export_vtk(problem.mesh, result.fields, os.path.join(outdir, f"fields_{tag}.vtk"))
    if "csv" in formats:
        export_csv(result.probe, os.path.join(outdir, f"probe_{tag}.csv"))
        export_csv(build_fan_table({result.beta: result.fan}),
                   os.path.join(outdir, f"fan_{tag}.csv"))
    if "json" in formats:
        _write_json(os.path.join(outdir, f"picard_{tag}.json"), result.report.to_dict())
    _save_state(os.path.join(outdir, f"state_{tag}.npz"), result, cfg, problem.mesh)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_mesh(args, cfg):
    mesh = build_mesh(cfg)
    outdir = _outdir(args, cfg)
    export_mesh(mesh, os.path.join(outdir, "mesh.msh"))
    if "vtk" in cfg["outputs"]["formats"]:
        export_vtk(mesh, None, os.path.join(outdir, "mesh.vtk"))
    lo, hi = mesh.bounding_box()
    stats = {"n_nodes": mesh.n_nodes, "n_elements": mesh.n_elements, "kind": mesh.kind,
             "face_tags": {k: int(len(v)) for k, v in sorted(mesh.face_tags.items())},
             "crack_tips": {k: v.tolist() for k, v in sorted(mesh.crack_tips.items())},
             "bounding_box": [lo.tolist(), hi.tolist()],
             "min_jacobian": float(corner_jacobians(mesh).min())}
    _write_json(os.path.join(outdir, "mesh_stats.json"), stats)
    _manifest(outdir, cfg, mesh, "mesh")
    print(json.dumps(stats, indent=2, sort_keys=True))
    return 0


def cmd_solve(args, cfg):
    problem = Problem(cfg)
    beta = float(cfg["material"].get("beta", 0.0))
    result = problem.run(beta)
    outdir = _outdir(args, cfg)
    _write_beta_outputs(outdir, cfg, problem, result)
    _manifest(outdir, cfg, problem.mesh, "solve", {"beta": beta})
    rep = result.report
    print(f"beta={beta:g}: converged={rep.converged} iterations={rep.iterations} "
          f"near-tip T22={result.probe.T22[0]:.6g} eps22={result.probe.eps22[0]:.6g} "
          f"W={result.probe.W[0]:.6g}")
    return 0


def cmd_sweep(args, cfg):
    problem = Problem(cfg)
    betas = beta_list(cfg)
    if 0.0 not in betas:
        betas = [0.0] + betas
    results = run_sweep(problem, betas, args.threads)
    outdir = _outdir(args, cfg)
    for r in results:
        _write_beta_outputs(outdir, cfg, problem, r)
    table, fan = sweep_tables(results)
    export_csv(table, os.path.join(outdir, "sweep.csv"))
    neg = [b for b in betas if b < 0]
    pos = [b for b in betas if b > 0]
    if neg:
        export_csv(table.subset([0.0] + neg), os.path.join(outdir, "sweep_negative.csv"))
    if pos:
        export_csv(table.subset([0.0] + pos), os.path.join(outdir, "sweep_positive.csv"))
    export_csv(fan, os.path.join(outdir, "fan_energy.csv"))
    tips = sorted({name for r in results for name in r.tip_probes})
    rows = [["tip"] + [r.beta for r in results]]
    rows += [[name] + [r.tip_probes[name].W[0] for r in results] for name in tips]
    export_csv(rows, os.path.join(outdir, "tips_energy.csv"))
    if "json" in cfg["outputs"]["formats"]:
        _write_json(os.path.join(outdir, "picard_reports.json"),
                    {_beta_tag(r.beta): r.report.to_dict() for r in results})
    _manifest(outdir, cfg, problem.mesh, "sweep", {"betas": betas, "threads": args.threads})
    for row in table.rows():
        print(",".join(v if isinstance(v, str) else format(v, ".6g") for v in row))
    failed = [r.beta for r in results if not r.report.converged]
    if failed:
        log.error("Picard did not converge for beta in %s", failed)
        return 10
    return 0


def cmd_probe(args, cfg):
    if not args.state:
        raise ConfigError("/", "probe needs --state pointing at a state_*.npz file")
    problem = Problem(cfg)
    data = np.load(args.state)
    if str(data["mesh_sha256"]) != problem.mesh.digest():
        raise InconsistentState("stored state was computed on a different mesh")
    beta = float(data["beta"])
    state = FieldState.from_displacement(problem.assembler.geom, data["u"])
    result = problem.postprocess(beta, state)
    outdir = _outdir(args, cfg)
    tag = _beta_tag(beta)
    export_csv(result.probe, os.path.join(outdir, f"probe_{tag}.csv"))
    export_csv(build_fan_table({beta: result.fan}), os.path.join(outdir, f"fan_{tag}.csv"))
    for name, p in sorted(result.tip_probes.items()):
        export_csv(p, os.path.join(outdir, f"probe_{tag}_tip{name}.csv"))
    _manifest(outdir, cfg, problem.mesh, "probe", {"beta": beta, "state": args.state})
    print(f"beta={beta:g}: near-tip W along fan: "
          + " ".join(f"{p.angle:g}:{p.W[0]:.4g}" for p in result.fan))
    return 0


def cmd_verify(args, cfg):
    params = material_params(cfg, 0.0)
    report = verify_mod.run_all(params, quick=args.quick)
    outdir = _outdir(args, cfg)
    _write_json(os.path.join(outdir, "verification.json"), report)
    for b in report["batteries"]:
        extra = f" rate={b['rate']:.3f}" if "rate" in b else ""
        print(f"{b['battery']}: {'PASS' if b['passed'] else 'FAIL'}{extra}")
    if not report["passed"]:
        raise VerificationFailed("verification battery failed; see verification.json")
    return 0


COMMANDS = {"mesh": cmd_mesh, "solve": cmd_solve, "sweep": cmd_sweep, "probe": cmd_probe,
            "verify": cmd_verify}


def build_parser():
    parser = argparse.ArgumentParser(prog="porocrack", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration (defaults built in)")
        p.add_argument("--output", help="output directory (overrides outputs.directory)")
        p.add_argument("--threads", type=int, default=1, help="concurrent sweep entries")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted config override, value parsed as JSON when possible")
        if name == "probe":
            p.add_argument("--state", help="state_*.npz written by solve or sweep")
        if name == "verify":
            p.add_argument("--quick", action="store_true", help="coarser convergence levels")
    return parser


def main(argv=None):
    logging.basicConfig(level=os.environ.get("PORO_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = config_mod.load(args.config, args.override)
        return COMMANDS[args.command](args, cfg)
    except PorocrackError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
