"""Verification battery: patch tests and manufactured-solution convergence."""

import time
from dataclasses import dataclass

import numpy as np

from . import material
from .fem import Assembler, DofMap, boundary_nodes, displacement_gradient, gauss_hex
from .fem import ElementGeometry
from .meshkit import hex_shape, structured_box
from .picard import Loads, initial_guess_linear, picard_solve


def box_mesh(n, size=1.0):
    """Uncracked ``n^3`` hex8 cube ``[0, size]^3``."""
    lines = np.linspace(0.0, size, n + 1)
    mesh = structured_box(lines, lines, lines)
    mesh.grid = None
    return mesh


def _solve_dirichlet(mesh, params, g, body_force=None, tol=1e-3, linear_tol=1e-12,
                     picard_tol=None, max_iter=1000):
    dofs = DofMap.from_nodes(mesh, boundary_nodes(mesh), g)
    asm = Assembler(mesh, dofs)
    loads = Loads(body_force=body_force)
    if params.beta == 0.0:
        state = initial_guess_linear(mesh, dofs, params, loads, linear_tol, assembler=asm)
        return state, asm, None
    state, report = picard_solve(mesh, dofs, params, loads, tol=picard_tol or tol,
                                 max_iter=max_iter, linear_tol=linear_tol, assembler=asm)
    return state, asm, report


# --------------------------------------------------------------------------
# patch test
# --------------------------------------------------------------------------

def patch_test(params, beta_list, A=None, n=2):
    """Affine Dirichlet data on the whole boundary of an ``n^3`` cube, no body force.

    The discrete solution must reproduce ``u = A x`` at every node.
    """
    A = 0.01 * np.eye(3) if A is None else np.asarray(A, dtype=float)
    mesh = box_mesh(n)
    exact = mesh.nodes @ A.T
    scale = max(np.linalg.norm(A), 1e-300)
    results = []
    for beta in beta_list:
        p = params.with_beta(beta)
        state, _, report = _solve_dirichlet(mesh, p, lambda x: x @ A.T, tol=1e-12)
        err = np.abs(state.u.reshape(-1, 3) - exact)
        worst = int(np.argmax(err.max(axis=1)))
        max_err = float(err.max())
        results.append({"beta": float(beta), "max_error": max_err,
                        "worst_node": worst, "location": mesh.nodes[worst].tolist(),
                        "iterations": report.iterations if report else 1,
                        "passed": bool(max_err <= 1e-9 * scale)})
    return {"battery": "patch_test", "passed": all(r["passed"] for r in results),
            "results": results}


# --------------------------------------------------------------------------
# manufactured solutions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TrigField:
    """``u_i = amp sin(pi x) sin(pi y) sin(pi z)`` on the unit cube (zero on its boundary)."""

    amp: float = 0.01

    def value(self, x):
        s = np.prod(np.sin(np.pi * x), axis=-1)
        return self.amp * np.repeat(s[..., None], 3, axis=-1)

    def gradient(self, x):
        """``H[..., j, i] = du_j/dx_i``."""
        sx, sy, sz = np.moveaxis(np.sin(np.pi * x), -1, 0)
        cx, cy, cz = np.moveaxis(np.cos(np.pi * x), -1, 0)
        row = self.amp * np.pi * np.stack([cx * sy * sz, sx * cy * sz, sx * sy * cz], axis=-1)
        return np.repeat(row[..., None, :], 3, axis=-2)

    def linear_body_force(self, x, params):
        """``-div(lam tr(eps) I + 2 mu eps)`` worked out by hand for this field."""
        lame = material.classical_lame(params)
        lam, mu = lame.lam, lame.mu
        sx, sy, sz = np.moveaxis(np.sin(np.pi * x), -1, 0)
        cx, cy, cz = np.moveaxis(np.cos(np.pi * x), -1, 0)
        s = sx * sy * sz
        cross = np.stack([cx * cy * sz + cx * sy * cz,
                          cx * cy * sz + sx * cy * cz,
                          cx * sy * cz + sx * cy * cz], axis=-1)
        a, k2 = self.amp, np.pi ** 2
        grad_div = a * k2 * (cross - s[..., None])
        lap = -3.0 * a * k2 * s
        return -(lam + mu) * grad_div - mu * lap[..., None]


def stress_field(field, params, x):
    eps = material.from_matrix(field.gradient(x))
    return material.to_matrix(material.stress_from_strain(eps, params))


def mms_nonlinear_body_force(u_exact, params, x, size=1.0, rel_step=1e-6):
    """``f = -div T(u_exact)`` by central differences of the analytic stress."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    h = rel_step * size
    f = np.zeros(x.shape)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        dT = (stress_field(u_exact, params, x + e) - stress_field(u_exact, params, x - e)) / (2 * h)
        f -= dT[..., :, j]
    return f


def l2_error(mesh, u, exact, n_gauss=3):
    rule = gauss_hex(n_gauss)
    geom = ElementGeometry(mesh, rule)
    vals, _ = hex_shape(rule.points)
    ue = np.asarray(u).reshape(-1, 3)[mesh.elements]
    uh = np.einsum("qa,eai->eqi", vals, ue)
    diff = uh - exact(geom.points)
    return float(np.sqrt(np.sum(geom.wdet[..., None] * diff ** 2)))


def _fit_rate(hs, errs):
    return float(-np.polyfit(np.log(1.0 / np.asarray(hs)), np.log(errs), 1)[0])


def _convergence(levels, params, field, body_force, picard_tol):
    hs, errs, interp, times = [], [], [], []
    for n in levels:
        t0 = time.perf_counter()
        mesh = box_mesh(n)
        state, _, _ = _solve_dirichlet(mesh, params, field.value, body_force,
                                       picard_tol=picard_tol)
        errs.append(l2_error(mesh, state.u, field.value))
        interp.append(l2_error(mesh, field.value(mesh.nodes).ravel(), field.value))
        hs.append(1.0 / n)
        times.append(time.perf_counter() - t0)
    rates = [float(np.log(errs[k] / errs[k + 1]) / np.log(hs[k] / hs[k + 1]))
             for k in range(len(errs) - 1)]
    return {"levels": list(levels), "h": hs, "errors": errs, "interpolant_errors": interp,
            "pairwise_rates": rates, "rate": _fit_rate(hs, errs),
            "interpolant_rate": _fit_rate(hs, interp), "seconds": times,
            "monotone": bool(np.all(np.diff(errs) < 0))}


def mms_linear_convergence(levels=(3, 6, 12, 24), params=None, amp=0.01, min_rate=1.9):
    """L2 displacement error of the classical problem against an analytic body force."""
    params = (params or material.MaterialParams()).with_beta(0.0)
    field = TrigField(amp)
    out = _convergence(levels, params, field, lambda x: field.linear_body_force(x, params), None)
    out.update(battery="mms_linear", beta=0.0, min_rate=min_rate,
               passed=bool(out["rate"] >= min_rate and out["monotone"]))
    return out


def mms_nonlinear_convergence(levels=(3, 6, 12, 24), params=None, beta=1.0, amp=0.02,
                              min_rate=1.8, picard_tol=1e-10):
    """Manufactured solution for ``beta != 0`` with a finite-difference body force."""
    params = (params or material.MaterialParams()).with_beta(beta)
    field = TrigField(amp)
    out = _convergence(levels, params, field,
                       lambda x: mms_nonlinear_body_force(field, params, x), picard_tol)
    out.update(battery="mms_nonlinear", beta=float(beta), min_rate=min_rate,
               passed=bool(out["rate"] >= min_rate and out["monotone"]))
    return out


def run_all(params=None, quick=False):
    params = params or material.MaterialParams()
    levels = (2, 4, 8) if quick else (3, 6, 12, 24)
    reports = [patch_test(params, [-2.0, 0.0, 2.0]),
               mms_linear_convergence(levels, params),
               mms_nonlinear_convergence(levels, params)]
    return {"passed": all(r["passed"] for r in reports), "batteries": reports}


__all__ = ["box_mesh", "patch_test", "mms_linear_convergence", "mms_nonlinear_convergence",
           "mms_nonlinear_body_force", "TrigField", "l2_error", "run_all",
           "displacement_gradient"]
