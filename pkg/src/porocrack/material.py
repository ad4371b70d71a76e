"""Density-dependent isotropic elasticity at a material point.

Symmetric tensors are stored as arrays whose last axis has six entries in the
order ``11, 22, 33, 23, 13, 12``.  The stored shear entries are the *tensor*
components (``eps_23``, not the engineering shear ``2 eps_23``).  This is the
only place the convention is defined: :func:`ddot` and the strain-displacement
matrix in :mod:`porocrack.fem` both account for the factor 2 on shear terms.

The stress response is

    T = (2 mu0 eps + lam0 tr(eps) I) / (1 + beta tr(eps))

whose inverse, for a known dilatation ``tr(eps)``, is

    eps = (1 + beta tr(eps)) (C1 T + C2 tr(T) I),   C1 = (1+nu)/E, C2 = -nu/E.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStiffness, InvalidPoisson, NonphysicalDensity

#: ``1 + beta tr(eps)`` must exceed this value; no clamping is applied.
POSITIVITY_FLOOR = 1e-6

VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))
_IDENTITY6 = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
_SHEAR_WEIGHT = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])


@dataclass(frozen=True)
class MaterialParams:
    """Elastic constants plus the coupling parameters of the implicit model.

    ``C1``/``C2`` default to the classical compliances derived from ``E`` and
    ``nu``.  ``delta1..3`` only enter :func:`implicit_residual`.
    """

    E: float = 1.0e5
    nu: float = 0.3
    beta: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0
    delta3: float = 0.0
    C1: float = None
    C2: float = None

    def __post_init__(self):
        if not np.isfinite(self.E) or self.E <= 0:
            raise ValueError(f"Young's modulus must be positive, got {self.E}")
        if not (-1.0 < self.nu < 0.5):
            raise InvalidPoisson(f"Poisson ratio must satisfy -1 < nu < 0.5, got {self.nu}")
        if self.C1 is None:
            object.__setattr__(self, "C1", (1.0 + self.nu) / self.E)
        if self.C2 is None:
            object.__setattr__(self, "C2", -self.nu / self.E)

    def with_beta(self, beta):
        return MaterialParams(self.E, self.nu, float(beta), self.delta1, self.delta2,
                              self.delta3, self.C1, self.C2)


@dataclass(frozen=True)
class LamePair:
    lam: float
    mu: float


@dataclass(frozen=True)
class ComplianceCoeffs:
    phi1: float
    phi2: float


def trace(t):
    t = np.asarray(t, dtype=float)
    return t[..., 0] + t[..., 1] + t[..., 2]


def ddot(a, b):
    """Double contraction ``a : b`` of two six-component symmetric tensors."""
    return np.sum(np.asarray(a) * np.asarray(b) * _SHEAR_WEIGHT, axis=-1)


def to_matrix(t):
    t = np.asarray(t, dtype=float)
    m = np.empty(t.shape[:-1] + (3, 3))
    for k, (i, j) in enumerate(VOIGT_PAIRS):
        m[..., i, j] = t[..., k]
        m[..., j, i] = t[..., k]
    return m


def from_matrix(m):
    m = np.asarray(m, dtype=float)
    sym = 0.5 * (m + np.swapaxes(m, -1, -2))
    return np.stack([sym[..., i, j] for i, j in VOIGT_PAIRS], axis=-1)


def classical_lame(params):
    E, nu = params.E, params.nu
    if nu >= 0.5 or nu <= -1.0:
        raise InvalidPoisson(f"Poisson ratio must satisfy -1 < nu < 0.5, got {nu}")
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return LamePair(lam, mu)


def density_factor(beta, tr_eps):
    """Return ``1 + beta tr(eps)``, raising if it is not above the floor."""
    factor = 1.0 + beta * np.asarray(tr_eps, dtype=float)
    if np.any(~(factor > POSITIVITY_FLOOR)):
        worst = float(np.min(factor))
        raise DegenerateStiffness(
            f"1 + beta*tr(eps) = {worst:.6g} is not above the floor {POSITIVITY_FLOOR:g} "
            f"(beta = {beta:g})")
    return factor


def effective_lame(base, beta, tr_eps):
    factor = density_factor(beta, tr_eps)
    return LamePair(base.lam / factor, base.mu / factor)


def compliance_coeffs(params, tr_eps):
    scale = 1.0 + params.beta * np.asarray(tr_eps, dtype=float)
    return ComplianceCoeffs(params.C1 * scale, params.C2 * scale)


def stress_from_strain(eps, params):
    eps = np.asarray(eps, dtype=float)
    lame = classical_lame(params)
    tr = trace(eps)
    factor = density_factor(params.beta, tr)
    hooke = 2.0 * lame.mu * eps + lame.lam * tr[..., None] * _IDENTITY6
    return hooke / np.asarray(factor)[..., None]


def strain_from_stress(T, tr_eps, params):
    T = np.asarray(T, dtype=float)
    scale = (1.0 + params.beta * np.asarray(tr_eps, dtype=float))[..., None]
    E, nu = params.E, params.nu
    return scale * ((1.0 + nu) / E * T - nu / E * trace(T)[..., None] * _IDENTITY6)


def implicit_residual(T, eps, params):
    """Residual of the stress-strain relation that is linear in both T and eps."""
    T = np.asarray(T, dtype=float)
    eps = np.asarray(eps, dtype=float)
    trT = trace(T)[..., None]
    tre = trace(eps)[..., None]
    p = params
    return ((1.0 + p.delta3 * trT) * eps
            - p.C1 * (1.0 + p.delta1 * tre) * T
            - p.C2 * (1.0 + p.delta2 * tre) * trT * _IDENTITY6)


def density_ratio(tr_eps):
    """Reference-to-current density ratio ``rho0 / rho`` from mass balance."""
    ratio = 1.0 + np.asarray(tr_eps, dtype=float)
    if np.any(~(ratio > 0.0)):
        raise NonphysicalDensity(f"1 + tr(eps) must be positive, got {np.min(ratio):.6g}")
    return ratio if ratio.ndim else float(ratio)


def strain_energy_density(T, eps):
    """``W = T : eps / 2``; the half makes ``beta = 0`` the classical energy."""
    return 0.5 * ddot(T, eps)
