"""Meshes of the cracked plate.

Two sources are supported: a structured hexahedral generator that embeds a
cross-shaped zero-opening slit (the four-tip star A, B, C, D) by duplicating
the nodes on the slit, and a reader for Gmsh MSH 2.2 ASCII files for true
wedge geometries produced by an external mesher.

All lengths are in meters.
"""

import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .errors import (BadSpec, DegenerateElement, MeshError, MissingTag, NotFound,
                     ParseError, Unsupported, UnsupportedElement)

HEX_CORNERS = np.array([
    [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
    [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
], dtype=float)

TET_CORNERS = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)

# local node ids of the six hex faces, ordered so the normal points outward
HEX_FACES = {
    "x-": (0, 4, 7, 3), "x+": (1, 2, 6, 5),
    "y-": (0, 1, 5, 4), "y+": (3, 7, 6, 2),
    "z-": (0, 3, 2, 1), "z+": (4, 5, 6, 7),
}

NODES_PER_KIND = {"hex8": 8, "tet4": 4}
GMSH_VOLUME_TYPES = {4: "tet4", 5: "hex8"}
GMSH_TYPE_OF_KIND = {"tet4": 4, "hex8": 5}
GMSH_FACE_TYPES = {2: 3, 3: 4}
GMSH_NODE_COUNTS = {1: 2, 2: 3, 3: 4, 4: 4, 5: 8, 6: 6, 7: 5, 15: 1}

TIP_NAMES = ("A", "B", "C", "D")


@dataclass
class Mesh:
    """Uniform-kind volume mesh with tagged boundary faces.

    ``face_tags`` maps a tag name to an ``(n_faces, nodes_per_face)`` array of
    node ids.  ``grid`` is set only for generator output and holds the grid
    lines plus the slit half-length, which is what tip refinement acts on.
    """

    nodes: np.ndarray
    elements: np.ndarray
    kind: str
    face_tags: dict = field(default_factory=dict)
    crack_tips: dict = field(default_factory=dict)
    grid: tuple = None

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=float)
        self.elements = np.ascontiguousarray(self.elements, dtype=np.int64)
        if self.kind not in NODES_PER_KIND:
            raise UnsupportedElement(f"unknown element kind {self.kind!r}")
        self.face_tags = {k: np.asarray(v, dtype=np.int64) for k, v in self.face_tags.items()}
        self.crack_tips = {k: np.asarray(v, dtype=float) for k, v in self.crack_tips.items()}

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.elements)

    def tag_nodes(self, name):
        if name not in self.face_tags:
            raise MissingTag(f"mesh has no face tag {name!r}; available: {sorted(self.face_tags)}")
        return np.unique(self.face_tags[name])

    def bounding_box(self):
        return self.nodes.min(axis=0), self.nodes.max(axis=0)

    def digest(self):
        h = hashlib.sha256()
        h.update(self.kind.encode())
        h.update(self.nodes.tobytes())
        h.update(self.elements.tobytes())
        for name in sorted(self.face_tags):
            h.update(name.encode())
            h.update(self.face_tags[name].tobytes())
        return h.hexdigest()

    @cached_property
    def _locator(self):
        return _PointLocator(self)


@dataclass(frozen=True)
class PlateSpec:
    """Square plate ``[-L/2, L/2]^2 x [0, t]`` with a cross slit of half-arm ``a``."""

    L: float = 0.10
    t: float = 0.01
    a: float = 0.02
    nx: int = 40
    ny: int = 40
    nz: int = 4
    refinement_levels: int = 0

    def validate(self):
        if not (self.L > 0):
            raise BadSpec(f"side length must be positive, got {self.L}")
        if not (self.t > 0):
            raise BadSpec(f"thickness must be positive, got {self.t}")
        if not (0 < self.a < self.L / 2):
            raise BadSpec(f"arm half-length must satisfy 0 < a < L/2, got a={self.a}, L={self.L}")
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 2 or n % 2:
                raise BadSpec(f"{name} must be an even integer >= 2, got {n}")
        if int(self.nz) != self.nz or self.nz < 1:
            raise BadSpec(f"nz must be a positive integer, got {self.nz}")
        if int(self.refinement_levels) != self.refinement_levels or self.refinement_levels < 0:
            raise BadSpec(f"refinement_levels must be a non-negative integer, "
                          f"got {self.refinement_levels}")


# --------------------------------------------------------------------------
# element geometry helpers
# --------------------------------------------------------------------------

def hex_shape(xi):
    """Trilinear shape values ``(..., 8)`` and reference gradients ``(..., 8, 3)``."""
    xi = np.asarray(xi, dtype=float)
    s = 1.0 + xi[..., None, :] * HEX_CORNERS
    values = 0.125 * s[..., 0] * s[..., 1] * s[..., 2]
    grads = np.empty(xi.shape[:-1] + (8, 3))
    grads[..., 0] = 0.125 * HEX_CORNERS[:, 0] * s[..., 1] * s[..., 2]
    grads[..., 1] = 0.125 * HEX_CORNERS[:, 1] * s[..., 0] * s[..., 2]
    grads[..., 2] = 0.125 * HEX_CORNERS[:, 2] * s[..., 0] * s[..., 1]
    return values, grads


def tet_shape(xi):
    xi = np.asarray(xi, dtype=float)
    values = np.stack([1.0 - xi[..., 0] - xi[..., 1] - xi[..., 2],
                       xi[..., 0], xi[..., 1], xi[..., 2]], axis=-1)
    grads = np.broadcast_to(np.array([[-1.0, -1.0, -1.0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]),
                            xi.shape[:-1] + (4, 3)).copy()
    return values, grads


def shape_functions(kind, xi):
    return hex_shape(xi) if kind == "hex8" else tet_shape(xi)


def reference_center(kind):
    return np.zeros(3) if kind == "hex8" else np.full(3, 0.25)


def corner_jacobians(mesh):
    """Jacobian determinants at every element corner, shape ``(n_elements, n_corners)``."""
    coords = mesh.nodes[mesh.elements]
    if mesh.kind == "tet4":
        d = coords[:, 1:] - coords[:, :1]
        return np.linalg.det(d)[:, None]
    _, grads = hex_shape(HEX_CORNERS)
    jac = np.einsum("eai,cak->ecik", coords, grads)
    return np.linalg.det(jac)


def check_mesh(mesh):
    """Raise :class:`MeshError` subclasses on invalid connectivity, orientation or tags."""
    if mesh.elements.ndim != 2 or mesh.elements.shape[1] != NODES_PER_KIND[mesh.kind]:
        raise UnsupportedElement(f"{mesh.kind} connectivity must have "
                                 f"{NODES_PER_KIND[mesh.kind]} columns")
    if mesh.elements.size and (mesh.elements.min() < 0 or mesh.elements.max() >= mesh.n_nodes):
        raise MeshError("element node id out of range")
    dets = corner_jacobians(mesh)
    bad = np.nonzero(~(dets > 0).all(axis=1))[0]
    if bad.size:
        raise DegenerateElement(f"element {int(bad[0])} has non-positive Jacobian/volume")
    seen = {}
    for name in sorted(mesh.face_tags):
        faces = mesh.face_tags[name]
        if faces.size and (faces.min() < 0 or faces.max() >= mesh.n_nodes):
            raise MeshError(f"face tag {name!r} references a missing node")
        for f in map(tuple, np.sort(faces, axis=1)):
            if f in seen and seen[f] != name:
                raise MeshError(f"face {f} carries both tags {seen[f]!r} and {name!r}")
            seen[f] = name
    return mesh


# --------------------------------------------------------------------------
# structured generator
# --------------------------------------------------------------------------

def _merge_lines(values, scale):
    values = np.sort(np.asarray(values, dtype=float))
    keep = np.concatenate([[True], np.diff(values) > 1e-9 * scale])
    return values[keep]


def _refine_lines(lines, centers, scale):
    """One grading pass: bisect every cell within two local cell widths of a center."""
    lines = np.asarray(lines)
    new = [lines]
    for c in centers:
        widths = np.diff(lines)
        touching = (lines[1:] >= c - 1e-9 * scale) & (lines[:-1] <= c + 1e-9 * scale)
        h = widths[touching].min()
        lo, hi = c - 2.0 * h, c + 2.0 * h
        inside = (lines[:-1] >= lo - 1e-9 * scale) & (lines[1:] <= hi + 1e-9 * scale)
        new.append(0.5 * (lines[:-1] + lines[1:])[inside])
    return _merge_lines(np.concatenate(new), scale)


def generate_cross_crack_plate(spec):
    """Structured hex8 plate with a cross slit whose tips are A=(a,0), B=(-a,0), C=(0,a), D=(0,-a)."""
    spec.validate()
    L, t, a = float(spec.L), float(spec.t), float(spec.a)
    xs = _merge_lines(np.concatenate([np.linspace(-L / 2, L / 2, spec.nx + 1), [-a, 0.0, a]]), L)
    ys = _merge_lines(np.concatenate([np.linspace(-L / 2, L / 2, spec.ny + 1), [-a, 0.0, a]]), L)
    zs = np.linspace(0.0, t, spec.nz + 1)
    mesh = _mesh_from_lines(xs, ys, zs, a)
    return refine_near_tips(mesh, spec.refinement_levels)


def refine_near_tips(mesh, levels):
    """Grade the grid lines towards the tips, ``levels`` halving passes.

    Whole grid lines are inserted, so the result stays conforming.  Only
    generator output (which remembers its grid lines) can be refined.
    """
    levels = int(levels)
    if levels < 0:
        raise BadSpec("refinement levels must be non-negative")
    if levels == 0:
        return mesh
    if mesh.grid is None:
        raise Unsupported("tip refinement needs a structured generator mesh")
    xs, ys, zs, a = mesh.grid
    scale = max(xs[-1] - xs[0], ys[-1] - ys[0])
    for _ in range(levels):
        xs = _refine_lines(xs, (-a, 0.0, a), scale)
        ys = _refine_lines(ys, (-a, 0.0, a), scale)
    return _mesh_from_lines(xs, ys, zs, a)


def structured_box(xs, ys, zs):
    """Uncracked hex8 mesh on the tensor grid of the given lines."""
    return _mesh_from_lines(xs, ys, zs, 0.0)


def _mesh_from_lines(xs, ys, zs, a):
    xs, ys, zs = (np.asarray(v, dtype=float) for v in (xs, ys, zs))
    nxp, nyp, nzp = len(xs), len(ys), len(zs)
    ex, ey, ez = nxp - 1, nyp - 1, nzp - 1
    scale = max(xs[-1] - xs[0], ys[-1] - ys[0])
    tol = 1e-9 * scale

    I, J, K = np.meshgrid(np.arange(nxp), np.arange(nyp), np.arange(nzp), indexing="ij")
    I, J, K = (v.transpose(2, 1, 0).ravel() for v in (I, J, K))  # i fastest
    nodes = np.column_stack([xs[I], ys[J], zs[K]])

    def nid(i, j, k):
        return i + nxp * (j + nyp * k)

    ei, ej, ek = np.meshgrid(np.arange(ex), np.arange(ey), np.arange(ez), indexing="ij")
    ei, ej, ek = (v.transpose(2, 1, 0).ravel() for v in (ei, ej, ek))
    offsets = ((0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1))
    elements = np.column_stack([nid(ei + di, ej + dj, ek + dk) for di, dj, dk in offsets])

    j0 = int(np.argmin(np.abs(ys)))
    i0 = int(np.argmin(np.abs(xs)))
    if a and (abs(ys[j0]) > tol or abs(xs[i0]) > tol):
        raise BadSpec("grid lines do not pass through the slit")
    on_x_arm = (J == j0) & (np.abs(nodes[:, 0]) < a - tol)
    on_y_arm = (I == i0) & (np.abs(nodes[:, 1]) < a - tol)

    # Each slit node is split by the side (or quadrant, at the star center) of
    # the element using it.  The (+) side keeps the original id.
    xc = xs[ei] + xs[ei + 1]
    yc = ys[ej] + ys[ej + 1]
    sx = np.where(xc > 0, 1, -1)
    sy = np.where(yc > 0, 1, -1)
    copies = {}
    next_id = len(nodes)
    new_coords = []
    elements = elements.copy()
    for e in range(len(elements)):
        for ln in range(8):
            n = elements[e, ln]
            xa, ya = on_x_arm[n], on_y_arm[n]
            if not (xa or ya):
                continue
            if xa and ya:
                side = (sx[e], sy[e])
                keep = side == (1, 1)
            elif xa:
                side = (0, sy[e])
                keep = sy[e] > 0
            else:
                side = (sx[e], 0)
                keep = sx[e] > 0
            if keep:
                continue
            key = (n, side)
            if key not in copies:
                copies[key] = next_id
                new_coords.append(nodes[n])
                next_id += 1
            elements[e, ln] = copies[key]
    if new_coords:
        nodes = np.vstack([nodes, np.array(new_coords)])

    faces = {name: [] for name in ("x_min", "x_max", "y_min", "y_max", "z_min", "z_max", "crack")}
    for e in range(len(elements)):
        conn = elements[e]
        i, j, k = ei[e], ej[e], ek[e]
        if i == 0:
            faces["x_min"].append(conn[list(HEX_FACES["x-"])])
        if i == ex - 1:
            faces["x_max"].append(conn[list(HEX_FACES["x+"])])
        if j == 0:
            faces["y_min"].append(conn[list(HEX_FACES["y-"])])
        if j == ey - 1:
            faces["y_max"].append(conn[list(HEX_FACES["y+"])])
        if k == 0:
            faces["z_min"].append(conn[list(HEX_FACES["z-"])])
        if k == ez - 1:
            faces["z_max"].append(conn[list(HEX_FACES["z+"])])
        x_in_arm = a > 0 and xs[i] >= -a - tol and xs[i + 1] <= a + tol
        y_in_arm = a > 0 and ys[j] >= -a - tol and ys[j + 1] <= a + tol
        if x_in_arm and j == j0 - 1:
            faces["crack"].append(conn[list(HEX_FACES["y+"])])
        if x_in_arm and j == j0:
            faces["crack"].append(conn[list(HEX_FACES["y-"])])
        if y_in_arm and i == i0 - 1:
            faces["crack"].append(conn[list(HEX_FACES["x+"])])
        if y_in_arm and i == i0:
            faces["crack"].append(conn[list(HEX_FACES["x-"])])
    face_tags = {k: np.array(v, dtype=np.int64).reshape(-1, 4) for k, v in faces.items()}

    zmid = 0.5 * (zs[0] + zs[-1])
    if a > 0:
        tips = {"A": (a, 0.0, zmid), "B": (-a, 0.0, zmid), "C": (0.0, a, zmid),
                "D": (0.0, -a, zmid)}
    else:
        tips = {}
        del face_tags["crack"]
    mesh = Mesh(nodes, elements, "hex8", face_tags, tips, grid=(xs, ys, zs, a))
    return check_mesh(mesh)


# --------------------------------------------------------------------------
# point location
# --------------------------------------------------------------------------

class _PointLocator:
    def __init__(self, mesh):
        self.mesh = mesh
        coords = mesh.nodes[mesh.elements]
        self.coords = coords
        centroids = coords.mean(axis=1)
        self.radius = float(np.max(np.linalg.norm(coords - centroids[:, None], axis=2))) * (1 + 1e-9)
        self.tree = cKDTree(centroids)
        lo, hi = mesh.bounding_box()
        self.lo, self.hi = lo, hi
        self.scale = float(np.max(hi - lo))

    def local_coords(self, elems, x):
        """Reference coordinates of ``x`` in each candidate element."""
        coords = self.coords[elems]
        kind = self.mesh.kind
        if kind == "tet4":
            d = np.swapaxes(coords[:, 1:] - coords[:, :1], 1, 2)
            return np.linalg.solve(d, (x - coords[:, 0])[..., None])[..., 0]
        xi = np.zeros((len(elems), 3))
        for _ in range(50):
            vals, grads = hex_shape(xi)
            r = np.einsum("ea,eai->ei", vals, coords) - x
            jac = np.einsum("eai,eak->eik", coords, grads)
            step = np.linalg.solve(jac, r[..., None])[..., 0]
            xi = xi - step
            if np.max(np.abs(step)) < 1e-14:
                break
        return xi

    def locate(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lo - tol * self.scale) or np.any(x > self.hi + tol * self.scale):
            raise NotFound(f"point {x.tolist()} is outside the mesh bounding box")
        cands = np.array(sorted(self.tree.query_ball_point(x, self.radius)), dtype=np.int64)
        if cands.size:
            xi = self.local_coords(cands, x)
            if self.mesh.kind == "hex8":
                inside = np.all(np.abs(xi) <= 1.0 + tol, axis=1)
            else:
                bary = np.column_stack([1.0 - xi.sum(axis=1), xi])
                inside = np.all(bary >= -tol, axis=1)
            inside &= np.all(np.isfinite(xi), axis=1)
            hit = np.nonzero(inside)[0]
            if hit.size:
                return int(cands[hit[0]]), xi[hit[0]]
        raise NotFound(f"point {x.tolist()} is not inside any element")


def locate_point(mesh, x):
    """Element containing ``x`` (lowest id on ties) and its reference coordinates."""
    return mesh._locator.locate(x)


# --------------------------------------------------------------------------
# Gmsh MSH 2.2 ASCII
# --------------------------------------------------------------------------

def _sections(text):
    sections = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        if not line.startswith("$"):
            raise ParseError(f"line {i + 1}: expected a section header, got {line!r}")
        name = line[1:]
        end = "$End" + name
        body = []
        i += 1
        while i < len(lines) and lines[i].strip() != end:
            body.append(lines[i])
            i += 1
        if i == len(lines):
            raise ParseError(f"section ${name} is not terminated by {end}")
        sections[name] = body
        i += 1
    return sections


def import_gmsh(path, require_crack=True):
    """Read a Gmsh MSH 2.2 ASCII file.

    Surface physical groups become face tags, volume elements must all be of
    one kind (tet4 or hex8), and named physical points (``A``..``D``) become
    crack tips.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    sec = _sections(text)
    for required in ("MeshFormat", "Nodes", "Elements"):
        if required not in sec:
            raise ParseError(f"missing ${required} section")
    fmt = sec["MeshFormat"][0].split() if sec["MeshFormat"] else []
    if len(fmt) < 3 or fmt[0] not in ("2.2", "2.1", "2"):
        version = fmt[0] if fmt else "?"
        raise ParseError(f"unsupported MSH version {version}; only 2.2 ASCII is supported")
    if fmt[1] != "0":
        raise ParseError("binary MSH files are not supported; only 2.2 ASCII")

    physical = {}
    for line in sec.get("PhysicalNames", [])[1:]:
        parts = line.split(maxsplit=2)
        if len(parts) != 3:
            raise ParseError(f"bad $PhysicalNames entry {line!r}")
        physical[(int(parts[0]), int(parts[1]))] = parts[2].strip().strip('"')

    try:
        n_nodes = int(sec["Nodes"][0])
        raw = np.array([line.split() for line in sec["Nodes"][1:1 + n_nodes]], dtype=float)
    except (ValueError, IndexError) as exc:
        raise ParseError(f"malformed $Nodes section: {exc}") from exc
    if raw.shape != (n_nodes, 4):
        raise ParseError("malformed $Nodes section")
    ids = raw[:, 0].astype(np.int64)
    index = {int(g): k for k, g in enumerate(ids)}
    nodes = raw[:, 1:]

    volume, vkinds = [], set()
    faces, tips = {}, {}
    try:
        n_elem = int(sec["Elements"][0])
        records = sec["Elements"][1:1 + n_elem]
        if len(records) != n_elem:
            raise ParseError("$Elements count does not match records")
        for line in records:
            v = [int(s) for s in line.split()]
            etype, ntags = v[1], v[2]
            tags = v[3:3 + ntags]
            conn = v[3 + ntags:]
            if etype not in GMSH_NODE_COUNTS:
                raise UnsupportedElement(f"Gmsh element type {etype} is not supported")
            if len(conn) != GMSH_NODE_COUNTS[etype]:
                raise ParseError(f"element record {line!r} has the wrong node count")
            local = [index[c] for c in conn]
            phys = tags[0] if tags else 0
            if etype in GMSH_VOLUME_TYPES:
                vkinds.add(GMSH_VOLUME_TYPES[etype])
                volume.append(local)
            elif etype in (6, 7):
                raise UnsupportedElement(f"Gmsh element type {etype} (prism/pyramid) is not supported")
            elif etype in GMSH_FACE_TYPES:
                name = physical.get((2, phys))
                if name is not None:
                    faces.setdefault(name, []).append(local)
            elif etype == 15:
                name = physical.get((0, phys))
                if name is not None:
                    tips[name] = nodes[local[0]]
    except KeyError as exc:
        raise ParseError(f"element references unknown node {exc}") from exc
    except ValueError as exc:
        raise ParseError(f"malformed $Elements section: {exc}") from exc

    if not volume:
        raise UnsupportedElement("file contains no tet4/hex8 volume elements")
    if len(vkinds) > 1:
        raise UnsupportedElement(f"mixed volume element kinds {sorted(vkinds)}")
    kind = vkinds.pop()
    required = ["y_min", "y_max"] + (["crack"] if require_crack else [])
    for name in required:
        if name not in faces:
            raise MissingTag(f"physical group {name!r} is missing from {path}")
    face_tags = {}
    for name, fl in faces.items():
        widths = {len(f) for f in fl}
        if len(widths) > 1:
            raise UnsupportedElement(f"face tag {name!r} mixes triangles and quadrilaterals")
        face_tags[name] = np.array(fl, dtype=np.int64)
    mesh = Mesh(nodes, np.array(volume, dtype=np.int64), kind, face_tags, tips)
    return check_mesh(mesh)


def write_gmsh(mesh, path):
    """Write ``mesh`` in the MSH 2.2 ASCII subset read by :func:`import_gmsh`."""
    names = sorted(mesh.face_tags)
    tip_names = sorted(mesh.crack_tips)
    out = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat", "$PhysicalNames",
           str(len(names) + len(tip_names) + 1)]
    for k, name in enumerate(tip_names):
        out.append(f'0 {k + 1} "{name}"')
    for k, name in enumerate(names):
        out.append(f'2 {k + 1} "{name}"')
    out.append('3 1 "domain"')
    out += ["$EndPhysicalNames", "$Nodes", str(mesh.n_nodes)]
    out += [f"{i + 1} {x!r} {y!r} {z!r}" for i, (x, y, z) in
            enumerate(mesh.nodes.tolist())]
    out += ["$EndNodes", "$Elements"]
    records = []
    for k, name in enumerate(tip_names):
        tip = mesh.crack_tips[name]
        n = int(np.argmin(np.linalg.norm(mesh.nodes - tip, axis=1)))
        if not np.allclose(mesh.nodes[n], tip, rtol=0, atol=1e-12 * (1 + np.abs(tip).max())):
            continue
        records.append((15, k + 1, [n]))
    for k, name in enumerate(names):
        for face in mesh.face_tags[name]:
            records.append((2 if len(face) == 3 else 3, k + 1, face))
    vtype = GMSH_TYPE_OF_KIND[mesh.kind]
    records += [(vtype, 1, conn) for conn in mesh.elements]
    out.append(str(len(records)))
    for eid, (etype, phys, conn) in enumerate(records, start=1):
        out.append(f"{eid} {etype} 2 {phys} {phys} " + " ".join(str(int(c) + 1) for c in conn))
    out.append("$EndElements")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


def parse_length(value):
    """Parse a length given as a number (meters) or a string with ``m``/``cm``/``mm`` suffix."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip().lower()
    for suffix, factor in (("mm", 1e-3), ("cm", 1e-2), ("m", 1.0)):
        if text.endswith(suffix):
            return float(text[: -len(suffix)]) * factor
    number = float(text)
    if math.isnan(number):
        raise ValueError("length is NaN")
    return number
