"""Finite element machinery: shape functions, quadrature, assembly, linear solve.

The Picard-frozen bilinear form is

    a(u_prev; u, v) = sum_q w_q |J_q| c_q  E0[eps(u)] : eps(v),
    c_q = 1 / (1 + beta tr eps(u_prev))(x_q)

where ``E0`` is the constant classical isotropic tensor.  Only ``c_q`` changes
between Picard steps, so the geometry (physical shape gradients and weights)
and the sparsity pattern are computed once per mesh.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import material
from .errors import DegenerateStiffness, IndefiniteMatrix, InconsistentState, NotConverged
from .meshkit import hex_shape, shape_functions, tet_shape


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int


def gauss_hex(n):
    """Tensor Gauss-Legendre rule on ``[-1, 1]^3`` with ``n`` points per axis."""
    x, w = np.polynomial.legendre.leggauss(n)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    W = w[:, None, None] * w[None, :, None] * w[None, None, :]
    pts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    return QuadratureRule(pts, W.ravel(), 2 * n - 1)


def quadrature(kind):
    """Default volume rule: 2x2x2 Gauss on hexes, 4-point degree-2 rule on tets."""
    if kind == "hex8":
        return gauss_hex(2)
    if kind == "tet4":
        a, b = 0.5854101966249685, 0.1381966011250105
        pts = np.array([[b, b, b], [a, b, b], [b, a, b], [b, b, a]])
        return QuadratureRule(pts, np.full(4, 1.0 / 24.0), 2)
    raise ValueError(f"unknown element kind {kind!r}")


def shape_eval(kind, local):
    """Nodal basis values and reference gradients at reference point(s) ``local``."""
    return shape_functions(kind, local)


# --------------------------------------------------------------------------
# degrees of freedom
# --------------------------------------------------------------------------

@dataclass
class DofMap:
    """Three displacement dofs per node (``3*node + component``) and the fixed subset."""

    n_nodes: int
    fixed: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        fixed = np.asarray(self.fixed, dtype=np.int64)
        values = np.asarray(self.values, dtype=float)
        order = np.argsort(fixed, kind="stable")
        fixed, values = fixed[order], values[order]
        if fixed.size and np.any(np.diff(fixed) == 0):
            dup = np.nonzero(np.diff(fixed) == 0)[0]
            if not np.allclose(values[dup], values[dup + 1], rtol=1e-12, atol=0):
                raise InconsistentState("conflicting Dirichlet values on a shared dof")
            keep = np.concatenate([[True], np.diff(fixed) != 0])
            fixed, values = fixed[keep], values[keep]
        self.fixed, self.values = fixed, values
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[fixed] = False
        self.free = np.nonzero(mask)[0]

    @property
    def n_dofs(self):
        return 3 * self.n_nodes

    @classmethod
    def from_dirichlet(cls, mesh, bcs):
        """``bcs`` maps a face tag to a 3-vector (``None`` entries stay free) or a callable ``g(x) -> (n, 3)``."""
        fixed, values = [], []
        for name in sorted(bcs):
            nodes = mesh.tag_nodes(name)
            _append_constraints(fixed, values, mesh, nodes, bcs[name])
        return cls(mesh.n_nodes, np.concatenate(fixed or [[]]), np.concatenate(values or [[]]))

    @classmethod
    def from_nodes(cls, mesh, nodes, value):
        fixed, values = [], []
        _append_constraints(fixed, values, mesh, np.asarray(nodes, dtype=np.int64), value)
        return cls(mesh.n_nodes, np.concatenate(fixed), np.concatenate(values))

    def full_vector(self, u_free):
        u = np.zeros(self.n_dofs)
        u[self.fixed] = self.values
        u[self.free] = u_free
        return u


def _append_constraints(fixed, values, mesh, nodes, value):
    if callable(value):
        g = np.asarray(value(mesh.nodes[nodes]), dtype=float).reshape(len(nodes), 3)
        for c in range(3):
            fixed.append(3 * nodes + c)
            values.append(g[:, c])
        return
    for c, v in enumerate(value):
        if v is None:
            continue
        fixed.append(3 * nodes + c)
        values.append(np.full(len(nodes), float(v)))


def boundary_nodes(mesh):
    """Nodes on every tagged face plus all nodes on the bounding box."""
    lo, hi = mesh.bounding_box()
    tol = 1e-9 * np.max(hi - lo)
    on_box = np.any((np.abs(mesh.nodes - lo) < tol) | (np.abs(mesh.nodes - hi) < tol), axis=1)
    return np.nonzero(on_box)[0]


# --------------------------------------------------------------------------
# geometry and field evaluation
# --------------------------------------------------------------------------

class ElementGeometry:
    """Physical shape gradients and integration weights at every quadrature point."""

    def __init__(self, mesh, rule=None):
        self.mesh = mesh
        self.rule = rule or quadrature(mesh.kind)
        values, ref_grads = shape_functions(mesh.kind, self.rule.points)
        coords = mesh.nodes[mesh.elements]
        jac = np.einsum("eai,qak->eqik", coords, ref_grads)
        det = np.linalg.det(jac)
        if np.any(det <= 0):
            e, q = np.argwhere(det <= 0)[0]
            raise DegenerateStiffness(f"non-positive Jacobian in element {e} at point {q}",
                                      element=int(e), qpoint=int(q))
        inv = np.linalg.inv(jac)
        # dN_a/dx_i = sum_k dN_a/dxi_k * dxi_k/dx_i
        self.grads = np.einsum("qak,eqki->eqai", ref_grads, inv)
        self.values = values
        self.wdet = det * self.rule.weights
        self.points = np.einsum("qa,eai->eqi", values, coords)

    @property
    def n_qp(self):
        return len(self.rule.weights)


def displacement_gradient(geom, u):
    """``H[e, q, j, i] = du_j/dx_i`` at all quadrature points."""
    ue = np.asarray(u).reshape(-1, 3)[geom.mesh.elements]
    return np.einsum("eqai,eaj->eqji", geom.grads, ue)


def strain_at_qp(geom, u):
    return material.from_matrix(displacement_gradient(geom, u))


def divergence_at_qp(geom, u):
    ue = np.asarray(u).reshape(-1, 3)[geom.mesh.elements]
    return np.einsum("eqai,eai->eq", geom.grads, ue)


def isotropic_stiffness(lam, mu):
    """6x6 matrix mapping engineering strain to the six stress components."""
    D = np.zeros((6, 6))
    D[:3, :3] = lam
    D[np.arange(3), np.arange(3)] += 2 * mu
    D[np.arange(3, 6), np.arange(3, 6)] = mu
    return D


def strain_displacement(grads):
    """B matrices ``(..., 6, 3n)`` with engineering shear rows (23, 13, 12)."""
    n = grads.shape[-2]
    B = np.zeros(grads.shape[:-2] + (6, 3 * n))
    gx, gy, gz = grads[..., 0], grads[..., 1], grads[..., 2]
    B[..., 0, 0::3] = gx
    B[..., 1, 1::3] = gy
    B[..., 2, 2::3] = gz
    B[..., 3, 1::3] = gz
    B[..., 3, 2::3] = gy
    B[..., 4, 0::3] = gz
    B[..., 4, 2::3] = gx
    B[..., 5, 0::3] = gy
    B[..., 5, 1::3] = gx
    return B


@dataclass
class FieldState:
    """Nodal displacements plus the dilatation cached at every quadrature point."""

    u: np.ndarray
    tr_eps: np.ndarray
    iteration: int = 0

    @classmethod
    def from_displacement(cls, geom, u, iteration=0):
        u = np.asarray(u, dtype=float)
        return cls(u, divergence_at_qp(geom, u), iteration)

    @classmethod
    def zero(cls, geom):
        n = 3 * geom.mesh.n_nodes
        return cls(np.zeros(n), np.zeros(geom.wdet.shape), 0)


@dataclass
class SparseSystem:
    """Free-dof stiffness ``K``, load ``F`` and what is needed to rebuild full vectors."""

    K: sp.csr_matrix
    F: np.ndarray
    dofs: DofMap

    def full_vector(self, u_free):
        return self.dofs.full_vector(u_free)


# --------------------------------------------------------------------------
# assembly
# --------------------------------------------------------------------------

class Assembler:
    """Reusable assembly context for one mesh and one set of Dirichlet constraints."""

    chunk = 4096

    def __init__(self, mesh, dofs, rule=None):
        self.mesh = mesh
        self.dofs = dofs
        self.geom = ElementGeometry(mesh, rule)
        n = mesh.elements.shape[1]
        self.nloc = 3 * n
        edofs = (3 * mesh.elements[:, :, None] + np.arange(3)).reshape(len(mesh.elements), -1)
        self.edofs = edofs
        ndof = dofs.n_dofs
        rows = np.repeat(edofs, self.nloc, axis=1).ravel()
        cols = np.tile(edofs, (1, self.nloc)).ravel()
        keys, self._inverse = np.unique(rows * ndof + cols, return_inverse=True)
        self._inverse = self._inverse.ravel()
        prow, pcol = keys // ndof, keys % ndof
        self._nnz = len(keys)
        indptr = np.searchsorted(prow, np.arange(ndof + 1))
        self._pattern = (pcol, indptr)

        is_free = np.zeros(ndof, dtype=bool)
        is_free[dofs.free] = True
        new_index = -np.ones(ndof, dtype=np.int64)
        new_index[dofs.free] = np.arange(len(dofs.free))
        ff = is_free[prow] & is_free[pcol]
        self._ff_mask = ff
        self._ff_rows = new_index[prow[ff]]
        self._ff_cols = new_index[pcol[ff]]
        self._ff_indptr = np.searchsorted(self._ff_rows, np.arange(len(dofs.free) + 1))
        fc = is_free[prow] & ~is_free[pcol]
        self._fc_mask = fc
        self._fc_rows = new_index[prow[fc]]
        self._fc_cols = pcol[fc]

    # -- coefficients -------------------------------------------------------

    def coefficient(self, params, state_prev):
        """``1 / (1 + beta tr eps(u_prev))`` per quadrature point."""
        if state_prev is None or params.beta == 0.0:
            return np.ones(self.geom.wdet.shape)
        tr = np.asarray(state_prev.tr_eps)
        if tr.shape != self.geom.wdet.shape:
            raise InconsistentState(
                f"cached dilatation has shape {tr.shape}, expected {self.geom.wdet.shape}")
        factor = 1.0 + params.beta * tr
        bad = ~(factor > material.POSITIVITY_FLOOR)
        if np.any(bad):
            e, q = np.argwhere(bad)[0]
            raise DegenerateStiffness(
                f"1 + beta*tr(eps) = {factor[e, q]:.6g} <= {material.POSITIVITY_FLOOR:g} "
                f"in element {e} at quadrature point {q}", element=int(e), qpoint=int(q),
                iteration=state_prev.iteration)
        return 1.0 / factor

    # -- element matrices ---------------------------------------------------

    def element_matrices(self, lam, mu, coef, elems=slice(None)):
        """Element stiffness blocks, ``lam``/``mu`` scalar and ``coef`` per point."""
        G = self.geom.grads[elems]
        ne, nq, n, _ = G.shape
        s = (coef[elems] * self.geom.wdet[elems])[:, :, None]
        Gf = G.reshape(ne, nq, 3 * n)
        P = np.matmul(np.swapaxes(Gf * s, 1, 2), Gf).reshape(ne, n, 3, n, 3)
        dot = np.einsum("eakbk->eab", P)
        Ke = lam * P + mu * P.transpose(0, 1, 4, 3, 2)
        for i in range(3):
            Ke[:, :, i, :, i] += mu * dot
        return Ke.reshape(ne, 3 * n, 3 * n)

    def element_matrices_pointwise(self, params, tr_prev, elems=slice(None)):
        """Same blocks via per-point effective Lame pairs and explicit ``B^T D B``."""
        G = self.geom.grads[elems]
        B = strain_displacement(G)
        base = material.classical_lame(params)
        tr = np.zeros(G.shape[:2]) if tr_prev is None else np.asarray(tr_prev)[elems]
        eff = material.effective_lame(base, params.beta, tr)
        lam = np.broadcast_to(eff.lam, tr.shape)
        mu = np.broadcast_to(eff.mu, tr.shape)
        D = np.zeros(tr.shape + (6, 6))
        D[..., :3, :3] = lam[..., None, None]
        for i in range(3):
            D[..., i, i] += 2 * mu
            D[..., 3 + i, 3 + i] = mu
        w = self.geom.wdet[elems]
        return np.einsum("eqki,eqkl,eqlj,eq->eij", B, D, B, w)

    # -- global objects ------------------------------------------------------

    def global_stiffness(self, params, coef=None):
        """Full (unconstrained) stiffness as CSR; ``coef`` defaults to 1."""
        data = self._global_data(params, coef)
        pcol, indptr = self._pattern
        ndof = self.dofs.n_dofs
        return sp.csr_matrix((data, pcol, indptr), shape=(ndof, ndof))

    def _global_data(self, params, coef):
        lame = material.classical_lame(params)
        if coef is None:
            coef = np.ones(self.geom.wdet.shape)
        ne = self.mesh.n_elements
        parts = []
        for start in range(0, ne, self.chunk):
            sl = slice(start, min(start + self.chunk, ne))
            parts.append(self.element_matrices(lame.lam, lame.mu, coef, sl).ravel())
        vals = np.concatenate(parts) if parts else np.zeros(0)
        return np.bincount(self._inverse, weights=vals, minlength=self._nnz)

    def load_vector(self, body_force=None, tractions=None):
        ndof = self.dofs.n_dofs
        F = np.zeros(ndof)
        if body_force is not None:
            pts = self.geom.points.reshape(-1, 3)
            f = np.asarray(body_force(pts), dtype=float).reshape(self.geom.points.shape)
            # F[a, i] = sum_q wdet N_a f_i
            fe = np.einsum("eq,qa,eqi->eai", self.geom.wdet, self.geom.values, f)
            np.add.at(F, self.edofs.ravel(), fe.reshape(-1))
        for name in sorted(tractions or {}):
            F += surface_load(self.mesh, self.mesh.face_tags[name], tractions[name])
        return F

    def assemble(self, params, state_prev=None, body_force=None, tractions=None):
        coef = self.coefficient(params, state_prev)
        data = self._global_data(params, coef)
        nfree = len(self.dofs.free)
        K = sp.csr_matrix((data[self._ff_mask], self._ff_cols, self._ff_indptr),
                          shape=(nfree, nfree))
        F_full = self.load_vector(body_force, tractions)
        F = F_full[self.dofs.free].copy()
        if self.dofs.fixed.size:
            uc = np.zeros(self.dofs.n_dofs)
            uc[self.dofs.fixed] = self.dofs.values
            lift = np.bincount(self._fc_rows, weights=data[self._fc_mask] * uc[self._fc_cols],
                               minlength=nfree)
            F -= lift
        return SparseSystem(K, F, self.dofs)


def assemble(mesh, dofs, params, state_prev=None, body_force=None, tractions=None,
             assembler=None):
    """Assemble the frozen-coefficient system restricted to the free dofs.

    Dirichlet values are eliminated symmetrically into the load.  Crack faces
    carry no traction and so contribute nothing.
    """
    if assembler is None:
        assembler = Assembler(mesh, dofs)
    if state_prev is not None and np.asarray(state_prev.u).shape != (dofs.n_dofs,):
        raise InconsistentState(
            f"previous state has {np.asarray(state_prev.u).size} entries, expected {dofs.n_dofs}")
    return assembler.assemble(params, state_prev, body_force, tractions)


def surface_load(mesh, faces, traction):
    """Consistent nodal load of a traction (vector or callable) over tagged faces."""
    F = np.zeros(3 * mesh.n_nodes)
    faces = np.asarray(faces, dtype=np.int64)
    if faces.size == 0:
        return F
    coords = mesh.nodes[faces]
    if faces.shape[1] == 4:
        g, w = np.polynomial.legendre.leggauss(2)
        s, t = np.meshgrid(g, g, indexing="ij")
        s, t = s.ravel(), t.ravel()
        wq = (w[:, None] * w[None, :]).ravel()
        cs = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
        N = 0.25 * (1 + s[:, None] * cs[:, 0]) * (1 + t[:, None] * cs[:, 1])
        dNs = 0.25 * cs[:, 0] * (1 + t[:, None] * cs[:, 1])
        dNt = 0.25 * cs[:, 1] * (1 + s[:, None] * cs[:, 0])
    else:
        s = np.array([1 / 6, 2 / 3, 1 / 6])
        t = np.array([1 / 6, 1 / 6, 2 / 3])
        wq = np.full(3, 1 / 6)
        N = np.column_stack([1 - s - t, s, t])
        dNs = np.tile([-1.0, 1.0, 0.0], (3, 1))
        dNt = np.tile([-1.0, 0.0, 1.0], (3, 1))
    xs = np.einsum("qa,fai->fqi", dNs, coords)
    xt = np.einsum("qa,fai->fqi", dNt, coords)
    dA = np.linalg.norm(np.cross(xs, xt), axis=-1) * wq
    x = np.einsum("qa,fai->fqi", N, coords)
    if callable(traction):
        g = np.asarray(traction(x.reshape(-1, 3)), dtype=float).reshape(x.shape)
    else:
        g = np.broadcast_to(np.asarray(traction, dtype=float), x.shape)
    fe = np.einsum("fq,qa,fqi->fai", dA, N, g)
    idx = (3 * faces[:, :, None] + np.arange(3)).ravel()
    np.add.at(F, idx, fe.ravel())
    return F


# --------------------------------------------------------------------------
# linear solve
# --------------------------------------------------------------------------

def _pcg(K, F, rel_tol, maxiter, x0, precond):
    normF = np.linalg.norm(F)
    x = np.zeros_like(F) if x0 is None else np.array(x0, dtype=float)
    r = F - K @ x
    target = rel_tol * normF
    if np.linalg.norm(r) <= target:
        return x
    z = precond(r)
    p = z.copy()
    rz = r @ z
    for _ in range(maxiter):
        Kp = K @ p
        pKp = p @ Kp
        if not pKp > 0:
            raise IndefiniteMatrix(f"conjugate gradient breakdown: p^T K p = {pKp:.3g}")
        alpha = rz / pKp
        x += alpha * p
        r -= alpha * Kp
        if np.linalg.norm(r) <= target:
            # guard against drift of the recursive residual
            true = F - K @ x
            if np.linalg.norm(true) <= target:
                return x
            r = true
        z = precond(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    achieved = np.linalg.norm(F - K @ x) / normF
    raise NotConverged(f"conjugate gradient hit {maxiter} iterations, "
                       f"relative residual {achieved:.3e}", achieved=achieved)


def solve_spd(system, rel_tol=1e-10, method="cg", x0=None, maxiter=None):
    """Solve ``K u = F`` on the free dofs to ``|K u - F| / |F| <= rel_tol``.

    ``method`` is ``"cg"`` (Jacobi-preconditioned conjugate gradient),
    ``"amg"`` (conjugate gradient preconditioned by smoothed aggregation) or
    ``"direct"`` (sparse LU, residual checked afterwards).
    """
    if isinstance(system, SparseSystem):
        K, F = system.K, system.F
    else:
        K, F = system
    K = sp.csr_matrix(K)
    F = np.asarray(F, dtype=float)
    n = len(F)
    if n == 0:
        return np.zeros(0)
    normF = np.linalg.norm(F)
    if normF == 0.0:
        return np.zeros(n)
    if maxiter is None:
        maxiter = max(10 * n, 100)
    if method == "cg":
        diag = K.diagonal()
        if np.any(diag <= 0):
            raise IndefiniteMatrix("non-positive diagonal entry in an SPD system")
        inv = 1.0 / diag
        return _pcg(K, F, rel_tol, maxiter, x0, lambda r: inv * r)
    if method == "amg":
        import pyamg

        ml = pyamg.smoothed_aggregation_solver(K, B=None, symmetry="symmetric")
        M = ml.aspreconditioner(cycle="V")
        return _pcg(K, F, rel_tol, maxiter, x0, lambda r: M @ r)
    if method == "direct":
        x = spla.splu(K.tocsc(), permc_spec="MMD_AT_PLUS_A").solve(F)
        achieved = np.linalg.norm(F - K @ x) / normF
        if not np.all(np.isfinite(x)):
            raise IndefiniteMatrix("direct factorization produced non-finite values")
        if achieved > rel_tol:
            # one step of iterative refinement before giving up
            x = _pcg(K, F, rel_tol, 50, x, lambda r: r / K.diagonal())
        return x
    raise ValueError(f"unknown linear solver {method!r}")
