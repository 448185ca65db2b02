"""Convex-analytic kernels for the unit-ball yield constraint.

Vectors are stored with the component index on the *last* axis, so every
function accepts a single stress vector as well as a stack of them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "INFINITY",
    "PsiFamily",
    "flow_rule_residual",
    "perzyna_rate",
    "perzyna_resolvent",
    "project_ball",
    "psi",
    "psi_prime",
    "psi_star",
    "truncate",
]


class _Infinity:
    """Value of an indicator function outside its domain.

    Arithmetic on it is deliberately unsupported; callers must branch.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITY"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()


def _norm(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(x * x, axis=-1, keepdims=True))


def project_ball(sigma):
    """Orthogonal projection onto the closed unit ball."""
    sigma = np.asarray(sigma, dtype=float)
    r = _norm(sigma)
    scale = np.where(r > 1.0, 1.0 / np.where(r > 1.0, r, 1.0), 1.0)
    return sigma * scale


def perzyna_rate(sigma, eps: float):
    """Visco-plastic strain rate ``(sigma - P_B(sigma)) / eps``."""
    if not eps > 0:
        raise ValueError(f"viscosity eps must be positive, got {eps}")
    sigma = np.asarray(sigma, dtype=float)
    return (sigma - project_ball(sigma)) / eps


def perzyna_resolvent(sigma_trial, dt_over_eps: float):
    """Solve ``s + r (s - P_B(s)) = sigma_trial`` for ``s`` with ``r = dt/eps``.

    The solution is radial: outside the ball its norm is
    ``(|sigma_trial| + r) / (1 + r)``.
    """
    if dt_over_eps < 0:
        raise ValueError(f"dt/eps must be non-negative, got {dt_over_eps}")
    s = np.asarray(sigma_trial, dtype=float)
    r = _norm(s)
    outside = r > 1.0
    safe = np.where(outside, r, 1.0)
    target = (safe + dt_over_eps) / (1.0 + dt_over_eps)
    return s * np.where(outside, target / safe, 1.0)


@dataclass(frozen=True)
class PsiFamily:
    """Boundary relaxation potential ``psi_lam`` (a Huber function)."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")


def _lam(fam) -> float:
    return fam.lam if isinstance(fam, PsiFamily) else PsiFamily(float(fam)).lam


def psi(fam, z):
    """``z^2 / (2 lam)`` for ``|z| <= lam`` and ``|z| - lam/2`` beyond."""
    lam = _lam(fam)
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    out = np.where(a <= lam, z * z / (2.0 * lam), a - lam / 2.0)
    return out if out.ndim else float(out)


def psi_prime(fam, z):
    lam = _lam(fam)
    out = np.clip(np.asarray(z, dtype=float) / lam, -1.0, 1.0)
    return out if out.ndim else float(out)


def psi_star(fam, y):
    """Convex conjugate ``lam y^2 / 2 + I_[-1,1](y)``.

    Scalars outside ``[-1, 1]`` return :data:`INFINITY`.  Arrays return a
    float array together with a boolean mask of the finite entries.
    """
    lam = _lam(fam)
    if np.ndim(y) == 0:
        y = float(y)
        return INFINITY if abs(y) > 1.0 else lam * y * y / 2.0
    y = np.asarray(y, dtype=float)
    finite = np.abs(y) <= 1.0
    return np.where(finite, lam * y * y / 2.0, 0.0), finite


def truncate(lam: float, z):
    """Clamp ``z`` to ``[-lam, lam]``; equals ``lam * psi_prime(lam, z)``."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    out = np.clip(np.asarray(z, dtype=float), -lam, lam)
    return out if out.ndim else float(out)


def flow_rule_residual(sigma, pdot):
    """``| |pdot| - sigma.pdot |``; zero where Hill's principle holds."""
    sigma = np.asarray(sigma, dtype=float)
    pdot = np.asarray(pdot, dtype=float)
    out = np.abs(np.sqrt(np.sum(pdot * pdot, axis=-1)) - np.sum(sigma * pdot, axis=-1))
    return out if out.ndim else float(out)
