"""Small-matrix algebra of the anti-plane Friedrichs system.

The state vector is ``U = (v, sigma)`` in R^(n+1) with ``v`` the velocity and
``sigma`` the stress vector.  The coefficient matrices are

    A_i = -2 e_1 (.) e_{i+1}        (symmetric tensor product)

and the admissible boundary matrices form the one-parameter family

    M(lam, nu) = lam^-1 e_1 x e_1 + lam (nu x nu)   (stress block).

Everything here works on matrices of size at most 3x3, so plain numpy
is used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AdmissibilityResult",
    "ProjectionTriple",
    "boundary_quadratic",
    "build_anu",
    "build_m",
    "build_system",
    "check_admissible",
    "decompose",
    "kernel_basis",
    "normalize_direction",
]

RANK_TOL = 1e-10
UNIT_TOL = 1e-12


def normalize_direction(nu) -> np.ndarray:
    """Return ``nu`` as a float array, checking that it is a unit vector."""
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if nu.ndim != 1 or nu.size == 0:
        raise ValueError("direction must be a non-empty vector")
    if abs(np.linalg.norm(nu) - 1.0) > UNIT_TOL:
        raise ValueError(f"direction {nu} is not a unit vector")
    return nu


def build_system(n: int) -> list[np.ndarray]:
    """Coefficient matrices ``A_1, ..., A_n`` for spatial dimension ``n``.

    ``A_i`` has exactly two nonzero entries, both -1, at (0, i) and (i, 0).
    """
    if n not in (1, 2):
        raise ValueError(f"unsupported dimension n={n}; expected 1 or 2")
    mats = []
    for i in range(1, n + 1):
        a = np.zeros((n + 1, n + 1))
        a[0, i] = a[i, 0] = -1.0
        mats.append(a)
    return mats


def build_anu(system: list[np.ndarray], nu) -> np.ndarray:
    """Normal matrix ``A_nu = sum_i A_i nu_i``."""
    nu = normalize_direction(nu)
    if len(system) != nu.size:
        raise ValueError("direction dimension does not match the system")
    return sum(a * c for a, c in zip(system, nu))


def build_m(lam: float, nu) -> np.ndarray:
    """Boundary matrix of the impedance condition ``sigma.nu + v/lam = 0``."""
    if not lam > 0:
        raise ValueError(f"impedance lambda must be positive, got {lam}")
    nu = normalize_direction(nu)
    n = nu.size
    m = np.zeros((n + 1, n + 1))
    m[0, 0] = 1.0 / lam
    m[1:, 1:] = lam * np.outer(nu, nu)
    return m


def _rank(a: np.ndarray) -> int:
    s = np.linalg.svd(a, compute_uv=False)
    scale = max(np.abs(a).max(), 1.0)
    return int(np.sum(s > RANK_TOL * scale))


def kernel_basis(a: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``Ker a`` as the columns of the returned array."""
    a = np.atleast_2d(a)
    _, s, vt = np.linalg.svd(a)
    scale = max(np.abs(a).max(), 1.0)
    r = int(np.sum(s > RANK_TOL * scale))
    return vt[r:].T.copy()


@dataclass(frozen=True)
class AdmissibilityResult:
    ok: bool
    reason: str

    def __bool__(self) -> bool:
        return self.ok


def check_admissible(m, nu) -> AdmissibilityResult:
    """Test the four dissipativity conditions on a candidate boundary matrix.

    The conditions are checked in order (symmetry, non-negativity,
    ``Ker A_nu`` inside ``Ker M``, and ``Ker(A_nu - M) + Ker(A_nu + M)``
    spanning the whole space); the reason names the first failure.
    """
    m = np.asarray(m, dtype=float)
    nu = normalize_direction(nu)
    n = nu.size
    if m.shape != (n + 1, n + 1):
        raise ValueError(f"matrix of shape {m.shape} does not match direction of size {n}")
    scale = max(np.abs(m).max(), 1.0)

    if np.abs(m - m.T).max() > RANK_TOL * scale:
        return AdmissibilityResult(False, "M is not symmetric")
    # symmetrized on purpose: also audits non-symmetric candidates
    if np.linalg.eigvalsh(0.5 * (m + m.T)).min() < -RANK_TOL * scale:
        return AdmissibilityResult(False, "not positive semi-definite")

    anu = build_anu(build_system(n), nu) if n in (1, 2) else _anu_general(nu)
    ker_a = kernel_basis(anu)
    if ker_a.size and np.abs(m @ ker_a).max() > RANK_TOL * scale:
        return AdmissibilityResult(False, "Ker A_ν ⊄ Ker M")

    stacked = np.hstack([kernel_basis(anu - m), kernel_basis(anu + m)])
    if stacked.size == 0 or _rank(stacked) != n + 1:
        return AdmissibilityResult(False, "Ker(A_ν−M) + Ker(A_ν+M) does not span")
    return AdmissibilityResult(True, "admissible")


def _anu_general(nu: np.ndarray) -> np.ndarray:
    n = nu.size
    a = np.zeros((n + 1, n + 1))
    a[0, 1:] = a[1:, 0] = -nu
    return a


@dataclass(frozen=True)
class ProjectionTriple:
    """Splitting ``kappa = k0 + kminus + kplus`` along a boundary normal."""

    k0: np.ndarray
    kminus: np.ndarray
    kplus: np.ndarray


def decompose(kappa, nu, lam: float) -> ProjectionTriple:
    """Split a constant state into its ``Ker A_nu`` and ``Ker(A_nu -+ M)`` parts.

    Closed form for ``kappa = (k, tau)`` and ``t = tau.nu``::

        k0     = (0, tau - t nu)
        kminus = ((k - lam t) / 2, (t/2 - k/(2 lam)) nu)
        kplus  = ((k + lam t) / 2, (t/2 + k/(2 lam)) nu)
    """
    if not lam > 0:
        raise ValueError(f"impedance lambda must be positive, got {lam}")
    nu = normalize_direction(nu)
    kappa = np.asarray(kappa, dtype=float)
    if kappa.shape != (nu.size + 1,):
        raise ValueError("kappa must have n+1 components")
    k, tau = kappa[0], kappa[1:]
    t = float(tau @ nu)
    k0 = np.concatenate([[0.0], tau - t * nu])
    km = np.concatenate([[(k - lam * t) / 2.0], (t / 2.0 - k / (2.0 * lam)) * nu])
    kp = np.concatenate([[(k + lam * t) / 2.0], (t / 2.0 + k / (2.0 * lam)) * nu])
    return ProjectionTriple(k0, km, kp)


def boundary_quadratic(kappa, nu, lam: float, sign: int = 1) -> float:
    """``M kappa^± . kappa^±`` in closed form, ``2 lam (k/(2 lam) ± tau.nu/2)^2``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if not lam > 0:
        raise ValueError(f"impedance lambda must be positive, got {lam}")
    nu = normalize_direction(nu)
    kappa = np.asarray(kappa, dtype=float)
    k, t = kappa[0], float(kappa[1:] @ nu)
    return 2.0 * lam * (k / (2.0 * lam) + sign * t / 2.0) ** 2
