"""Field recovery, ray probing, sweep tables and file output.

Nodal fields are recovered by volume-weighted averaging of the quadrature
point strains over the elements sharing a node.  Slit nodes are duplicated
per side, so the averaging never mixes the two crack faces.  The nodal stress
is then the constitutive stress of the averaged strain and the nodal strain
is recomputed from that stress through the inverse relation, so the recovered
pair satisfies the material law exactly at every node.
"""

import csv
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from . import material
from .errors import IoError, MissingBaseline, NotFound
from .fem import ElementGeometry, strain_at_qp
from .meshkit import locate_point, shape_functions, write_gmsh

log = logging.getLogger(__name__)

COMPONENTS = ("11", "22", "33", "23", "13", "12")
VTK_CELL_TYPES = {"hex8": 12, "tet4": 10}


@dataclass
class RecoveredFields:
    stress: np.ndarray
    strain: np.ndarray
    energy: np.ndarray
    displacement: np.ndarray
    meta: dict = field(default_factory=dict)


@dataclass
class ProbeResult:
    origin: np.ndarray
    direction: np.ndarray
    r: np.ndarray
    T22: np.ndarray
    eps22: np.ndarray
    W: np.ndarray
    angle: float = 0.0

    @property
    def near_tip_energy(self):
        return float(self.W[0])


@dataclass
class SweepTable:
    betas: list
    T22: list
    eps22: list
    W: list

    @staticmethod
    def _pct(values, base):
        return [(v - base) / base * 100.0 for v in values]

    def _base(self, values):
        return values[self.betas.index(0.0)]

    @property
    def T22_pct(self):
        return self._pct(self.T22, self._base(self.T22))

    @property
    def eps22_pct(self):
        return self._pct(self.eps22, self._base(self.eps22))

    @property
    def W_pct(self):
        return self._pct(self.W, self._base(self.W))

    def subset(self, betas):
        idx = [self.betas.index(float(b)) for b in betas]
        return SweepTable([self.betas[i] for i in idx], [self.T22[i] for i in idx],
                          [self.eps22[i] for i in idx], [self.W[i] for i in idx])

    def rows(self):
        return [
            ["beta"] + self.betas,
            ["T22"] + self.T22,
            ["T22_change_percent"] + self.T22_pct,
            ["eps22"] + self.eps22,
            ["eps22_change_percent"] + self.eps22_pct,
            ["W"] + self.W,
            ["W_change_percent"] + self.W_pct,
        ]


@dataclass
class FanTable:
    """Near-tip energy per direction (rows) and beta (columns)."""

    betas: list
    labels: list
    angles: list
    energy: np.ndarray

    def rows(self):
        out = [["direction", "angle_deg"] + list(self.betas)]
        for label, angle, row in zip(self.labels, self.angles, self.energy):
            out.append([label, angle] + list(row))
        return out


# --------------------------------------------------------------------------
# recovery
# --------------------------------------------------------------------------

def nodal_average(mesh, geom, qp_values):
    """Volume-weighted average of per-quadrature-point values onto nodes."""
    qp_values = np.asarray(qp_values, dtype=float)
    trailing = qp_values.shape[2:]
    w = geom.wdet
    # each element spreads its integrated value equally to its nodes
    elem_int = np.einsum("eq,eq...->e...", w, qp_values)
    elem_vol = w.sum(axis=1)
    n = mesh.elements.shape[1]
    num = np.zeros((mesh.n_nodes,) + trailing)
    den = np.zeros(mesh.n_nodes)
    np.add.at(num, mesh.elements.ravel(), np.repeat(elem_int, n, axis=0))
    np.add.at(den, mesh.elements.ravel(), np.repeat(elem_vol, n))
    used = den > 0
    num[used] /= den[used].reshape((-1,) + (1,) * len(trailing))
    return num


def recover_fields(mesh, dofs, state, params, geom=None):
    """Nodal stress, strain and energy density from a converged displacement."""
    geom = geom or ElementGeometry(mesh)
    u = np.asarray(state.u if hasattr(state, "u") else state, dtype=float)
    if u.shape != (dofs.n_dofs,):
        raise ValueError(f"displacement has {u.size} entries, expected {dofs.n_dofs}")
    eps_qp = strain_at_qp(geom, u)
    material.density_factor(params.beta, material.trace(eps_qp))
    eps_bar = nodal_average(mesh, geom, eps_qp)
    tr = material.trace(eps_bar)
    stress = material.stress_from_strain(eps_bar, params)
    strain = material.strain_from_stress(stress, tr, params)
    energy = material.strain_energy_density(stress, strain)
    return RecoveredFields(stress, strain, energy, u.reshape(-1, 3),
                           {"method": "volume-weighted strain averaging",
                            "mesh": mesh.digest()[:16], "beta": params.beta})


def interpolate(mesh, nodal, point):
    """Value of a nodal field at ``point`` through the element shape functions."""
    elem, xi = locate_point(mesh, point)
    values, _ = shape_functions(mesh.kind, xi)
    return np.tensordot(values, np.asarray(nodal)[mesh.elements[elem]], axes=(0, 0))


# --------------------------------------------------------------------------
# probes
# --------------------------------------------------------------------------

def probe_ray(fields, mesh, origin, direction, length, n_samples, angle=0.0):
    """Sample T22, eps22 and W at ``r_k = k length / n``, k = 1..n.

    The tip itself (r = 0) is excluded.  Samples leaving the mesh end the ray
    with a warning.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    locate_point(mesh, origin)
    stacked = np.column_stack([fields.stress[:, 1], fields.strain[:, 1], fields.energy])
    rs, vals = [], []
    for k in range(1, n_samples + 1):
        r = k * length / n_samples
        try:
            vals.append(interpolate(mesh, stacked, origin + r * direction))
        except NotFound:
            log.warning("ray from %s clipped at r = %.4g (left the mesh)", origin.tolist(), r)
            break
        rs.append(r)
    if not rs:
        raise NotFound("no probe sample lies inside the mesh")
    vals = np.array(vals)
    return ProbeResult(origin, direction, np.array(rs), vals[:, 0], vals[:, 1], vals[:, 2],
                       float(angle))


def ray_fan(fields, mesh, tip, angles, length, n_samples):
    """One in-plane probe per angle (degrees from +x) from the same tip."""
    if len(angles) == 0:
        raise ValueError("angles must be nonempty")
    tip = np.asarray(tip, dtype=float)
    out = []
    for a in angles:
        th = np.deg2rad(a)
        out.append(probe_ray(fields, mesh, tip, (np.cos(th), np.sin(th), 0.0), length,
                             n_samples, angle=float(a)))
    return out


def outward_direction(tip):
    """In-plane unit vector from the star center through ``tip``."""
    d = np.array([tip[0], tip[1], 0.0])
    return d / np.linalg.norm(d)


def build_sweep_table(probes):
    """Near-tip (first-sample) values per beta; ``probes`` maps beta to a ProbeResult."""
    betas = [float(b) for b in probes]
    if 0.0 not in betas:
        raise MissingBaseline("the sweep has no beta = 0 baseline")
    items = list(probes.values())
    return SweepTable(betas, [float(p.T22[0]) for p in items], [float(p.eps22[0]) for p in items],
                      [float(p.W[0]) for p in items])


def build_fan_table(fans):
    """``fans`` maps beta to the list of ProbeResults returned by :func:`ray_fan`."""
    betas = [float(b) for b in fans]
    first = next(iter(fans.values()))
    labels = ["r"] + [f"r{k}" for k in range(1, len(first))]
    angles = [p.angle for p in first]
    energy = np.array([[fan[i].near_tip_energy for fan in fans.values()]
                       for i in range(len(first))])
    return FanTable(betas, labels, angles, energy)


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, str):
        return v
    return format(float(v), ".9g")


def _atomic_write(path, write):
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def export_csv(obj, path):
    """CSV with a header row, '.' decimals, LF line endings and 9 significant digits."""
    if isinstance(obj, ProbeResult):
        rows = [["r", "T22", "eps22", "W"]]
        rows += [[r, a, b, c] for r, a, b, c in zip(obj.r, obj.T22, obj.eps22, obj.W)]
    elif hasattr(obj, "rows"):
        rows = obj.rows()
    else:
        rows = obj

    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        for row in rows:
            w.writerow([_fmt(v) for v in row])

    _atomic_write(path, write)


def export_vtk(mesh, fields, path):
    """Legacy ASCII VTK unstructured grid with displacement, stress, strain and W."""

    def write(fh):
        n = mesh.n_nodes
        fh.write("# vtk DataFile Version 3.0\nporocrack fields\nASCII\n"
                 "DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {n} double\n")
        for x, y, z in mesh.nodes.tolist():
            fh.write(f"{x!r} {y!r} {z!r}\n")
        k = mesh.elements.shape[1]
        fh.write(f"CELLS {mesh.n_elements} {mesh.n_elements * (k + 1)}\n")
        for conn in mesh.elements.tolist():
            fh.write(f"{k} " + " ".join(map(str, conn)) + "\n")
        fh.write(f"CELL_TYPES {mesh.n_elements}\n")
        fh.write((f"{VTK_CELL_TYPES[mesh.kind]}\n") * mesh.n_elements)
        fh.write(f"POINT_DATA {n}\n")
        if fields is None:
            return
        fh.write("VECTORS displacement double\n")
        for row in np.asarray(fields.displacement).tolist():
            fh.write(" ".join(_fmt(v) for v in row) + "\n")
        arrays = [(f"T{c}", fields.stress[:, i]) for i, c in enumerate(COMPONENTS)]
        arrays += [(f"eps{c}", fields.strain[:, i]) for i, c in enumerate(COMPONENTS)]
        arrays.append(("W", fields.energy))
        for name, values in arrays:
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            fh.write("\n".join(_fmt(v) for v in values) + "\n")

    _atomic_write(path, write)


def export_mesh(mesh, path):
    try:
        write_gmsh(mesh, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
