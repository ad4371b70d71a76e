"""End-to-end runs built from a validated configuration."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import config as config_mod
from .errors import ConfigError, MissingTag
from .fem import Assembler, DofMap
from .material import MaterialParams
from .meshkit import generate_cross_crack_plate, import_gmsh, parse_length
from .picard import initial_guess_linear, picard_solve
from .postproc import (build_fan_table, build_sweep_table, outward_direction, probe_ray,
                       ray_fan, recover_fields)

log = logging.getLogger(__name__)


def build_mesh(cfg):
    geometry = cfg["geometry"]
    if "plate" in geometry:
        return generate_cross_crack_plate(config_mod.plate_spec(cfg))
    spec = geometry["mesh"]
    mesh = import_gmsh(spec["path"], require_crack=spec.get("require_crack", True))
    for name, point in spec.get("tips", {}).items():
        mesh.crack_tips[name] = np.array([parse_length(v) for v in point])
    return mesh


def build_dofs(mesh, cfg):
    bcs = cfg["bcs"]
    only_y = bcs.get("constrain_only_y", False)
    constraints = {}
    for tag in ("y_min", "y_max"):
        vec = [float(v) for v in bcs[tag]]
        constraints[tag] = [None, vec[1], None] if only_y else vec
    dofs = DofMap.from_dirichlet(mesh, constraints)
    if not bcs.get("pins"):
        return dofs
    fixed, values = [dofs.fixed], [dofs.values]
    for pin in bcs["pins"]:
        node = int(np.argmin(np.linalg.norm(mesh.nodes - np.asarray(pin["point"]), axis=1)))
        for c in pin["components"]:
            fixed.append([3 * node + c])
            values.append([0.0])
    return DofMap(mesh.n_nodes, np.concatenate(fixed), np.concatenate(values))


def material_params(cfg, beta=None):
    m = cfg["material"]
    return MaterialParams(E=float(m["E"]), nu=float(m["nu"]),
                          beta=float(m.get("beta", 0.0) if beta is None else beta),
                          delta1=float(m.get("delta1", 0.0)), delta2=float(m.get("delta2", 0.0)),
                          delta3=float(m.get("delta3", 0.0)))


@dataclass
class BetaResult:
    beta: float
    state: object
    report: object
    fields: object
    probe: object
    tip_probes: dict
    fan: list


class Problem:
    """Mesh, constraints and reusable assembly context for one configuration."""

    def __init__(self, cfg, mesh=None):
        self.cfg = cfg
        self.mesh = mesh if mesh is not None else build_mesh(cfg)
        self.dofs = build_dofs(self.mesh, cfg)
        self.assembler = Assembler(self.mesh, self.dofs)
        self.base = material_params(cfg, 0.0)
        s = cfg["solver"]
        self.tol, self.max_iter = s["tol"], s["max_iter"]
        self.linear_tol, self.method = s["linear_rel_tol"], s["linear_method"]
        self._linear = None

    def tip(self, name):
        if name not in self.mesh.crack_tips:
            raise MissingTag(f"mesh has no crack tip {name!r}; "
                             f"available: {sorted(self.mesh.crack_tips)}")
        return self.mesh.crack_tips[name]

    def linear_state(self):
        if self._linear is None:
            self._linear = initial_guess_linear(self.mesh, self.dofs, self.base, None,
                                                self.linear_tol, self.method, self.assembler)
        return self._linear

    def solve(self, beta, u0=None):
        params = self.base.with_beta(beta)
        u0 = self.linear_state() if u0 is None else u0
        return picard_solve(self.mesh, self.dofs, params, None, self.tol, self.max_iter, u0,
                            self.linear_tol, self.method, self.assembler)

    def postprocess(self, beta, state, report=None):
        params = self.base.with_beta(beta)
        fields = recover_fields(self.mesh, self.dofs, state, params, self.assembler.geom)
        pc = self.cfg["probes"]
        length, n = parse_length(pc["length"]), pc["samples"]
        tip = self.tip(pc["tip"])
        probe = probe_ray(fields, self.mesh, tip, outward_direction(tip), length, n)
        tip_probes = {}
        for name in pc.get("compare_tips", []):
            if name in self.mesh.crack_tips:
                t = self.mesh.crack_tips[name]
                tip_probes[name] = probe_ray(fields, self.mesh, t, outward_direction(t), length, n)
        fan = ray_fan(fields, self.mesh, tip, pc["angles"], length, n)
        return BetaResult(float(beta), state, report, fields, probe, tip_probes, fan)

    def run(self, beta):
        state, report = self.solve(beta)
        return self.postprocess(beta, state, report)


def beta_list(cfg):
    m = cfg["material"]
    if "beta_list" in m:
        return [float(b) for b in m["beta_list"]]
    return [float(m.get("beta", 0.0))]


def run_sweep(problem, betas, threads=1):
    """Solve every beta from the classical solution; results keep the input order."""
    if not betas:
        raise ConfigError("/material/beta_list", "beta_list must be nonempty")
    problem.linear_state()
    problem.mesh._locator  # build once before any worker touches it
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        results = list(pool.map(problem.run, betas))
    return results


def sweep_tables(results):
    by_beta = {r.beta: r for r in results}
    table = build_sweep_table({b: r.probe for b, r in by_beta.items()})
    ordered = sorted(by_beta)
    fan = build_fan_table({b: by_beta[b].fan for b in ordered})
    return table, fan
