"""Picard (frozen-coefficient) iteration for the density-dependent problem.

Each step freezes ``1 + beta tr eps`` at the previous iterate, solves the
resulting linear elasticity problem with point-wise scaled moduli and stops
once the relative change between successive iterates on the free dofs drops
below ``tol``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateStiffness, NotConverged
from .fem import Assembler, DofMap, FieldState, solve_spd

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 1000
ZERO_NORM = 1e-14


@dataclass
class Loads:
    """Volume force ``f(x) -> (n, 3)`` and tractions per face tag."""

    body_force: object = None
    tractions: dict = field(default_factory=dict)


@dataclass
class PicardReport:
    changes: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    converged: bool = False
    tol: float = DEFAULT_TOL

    @property
    def iterations(self):
        return len(self.changes)

    def to_dict(self):
        return {"converged": self.converged, "iterations": self.iterations, "tol": self.tol,
                "relative_changes": [float(c) for c in self.changes],
                "linear_residuals": [float(r) for r in self.residuals]}


def _solve_step(assembler, params, state, loads, linear_tol, method):
    system = assembler.assemble(params, state, loads.body_force, loads.tractions)
    x0 = None if state is None else state.u[assembler.dofs.free]
    u_free = solve_spd(system, rel_tol=linear_tol, method=method, x0=x0)
    normF = np.linalg.norm(system.F)
    res = np.linalg.norm(system.K @ u_free - system.F) / normF if normF > 0 else 0.0
    return system.full_vector(u_free), res


def initial_guess_linear(mesh, dofs, params, loads=None, linear_tol=1e-10, method="cg",
                         assembler=None):
    """Classical (beta = 0) solution used as the first Picard iterate."""
    assembler = assembler or Assembler(mesh, dofs)
    loads = loads or Loads()
    if dofs.fixed.size == 0:
        log.warning("no Dirichlet constraints: the linear problem is singular")
    u, _ = _solve_step(assembler, params.with_beta(0.0), None, loads, linear_tol, method)
    return FieldState.from_displacement(assembler.geom, u, iteration=0)


def picard_solve(mesh, dofs, params, loads=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                 u0=None, linear_tol=1e-10, method="cg", assembler=None, strict=False):
    """Iterate ``K(u_n) u_{n+1} = F`` until the relative change is below ``tol``.

    ``u0`` may be a :class:`FieldState` or a full displacement vector; when it
    is omitted the classical linear solution is used.  Hitting ``max_iter``
    returns the last iterate with ``report.converged = False`` unless
    ``strict`` is set, in which case :class:`NotConverged` is raised.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    assembler = assembler or Assembler(mesh, dofs)
    loads = loads or Loads()
    geom = assembler.geom
    if u0 is None:
        state = initial_guess_linear(mesh, dofs, params, loads, linear_tol, method, assembler)
    elif isinstance(u0, FieldState):
        state = u0
    else:
        state = FieldState.from_displacement(geom, u0)

    free = dofs.free
    report = PicardReport(tol=tol)
    for n in range(max_iter):
        try:
            u_next, res = _solve_step(assembler, params, state, loads, linear_tol, method)
        except DegenerateStiffness as exc:
            exc.iteration = n
            raise
        diff = np.linalg.norm(u_next[free] - state.u[free])
        size = np.linalg.norm(u_next[free])
        change = diff if size < ZERO_NORM else diff / size
        report.changes.append(float(change))
        report.residuals.append(float(res))
        state = FieldState.from_displacement(geom, u_next, iteration=n + 1)
        log.debug("picard step %d: relative change %.3e", n + 1, change)
        if change < tol:
            report.converged = True
            break
    if not report.converged:
        msg = (f"Picard iteration did not reach tol={tol:g} in {max_iter} steps "
               f"(last change {report.changes[-1]:.3e})")
        if strict:
            raise NotConverged(msg, achieved=report.changes[-1], state=state, report=report)
        log.warning(msg)
    return state, report


__all__ = ["DofMap", "FieldState", "Loads", "PicardReport", "initial_guess_linear",
           "picard_solve"]
