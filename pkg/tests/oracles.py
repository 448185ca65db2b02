"""Independent reference solutions used by the tests.

Nothing here imports the solver; the oracles only share the closed-form
initial profiles, which are re-implemented below.
"""

import numpy as np


def bump_profile(x, center, width, amplitude):
    r = (np.asarray(x, dtype=float) - center) / width
    return amplitude * np.where(np.abs(r) < 1.0, (1.0 - r * r) ** 3, 0.0)


def reflection_coefficient(lam):
    """Velocity reflection coefficient of ``sigma.nu + v/lam = 0`` for unit wave speed.

    With ``a = v - sigma`` (right-moving) and ``b = v + sigma`` (left-moving),
    the condition at the right end reads ``(b - a)/2 = -(a + b)/(2 lam)``,
    so ``b = a (lam - 1)/(lam + 1)``; the left end is symmetric.
    """
    return (lam - 1.0) / (lam + 1.0)


class DAlembert:
    """Linear 1D wave ``v_t = sigma_x``, ``sigma_t = v_x`` on ``[0, L]`` with impedance ends.

    Solved by tracing characteristics back to ``t = 0``, picking up a
    factor ``R`` at every wall reflection.
    """

    def __init__(self, v0, s0, lam, L=1.0):
        self.v0, self.s0, self.L = v0, s0, L
        self.R = reflection_coefficient(lam)

    def _a0(self, x):
        return self.v0(x) - self.s0(x)

    def _b0(self, x):
        return self.v0(x) + self.s0(x)

    def _a(self, x, t):
        if x - t >= 0.0:
            return self._a0(x - t)
        return self.R * self._b(0.0, t - x)

    def _b(self, x, t):
        if x + t <= self.L:
            return self._b0(x + t)
        return self.R * self._a(self.L, t - (self.L - x))

    def __call__(self, x, t):
        """Return ``(v, sigma)`` at the points ``x`` and time ``t``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        a = np.array([self._a(xi, t) for xi in x])
        b = np.array([self._b(xi, t) for xi in x])
        return 0.5 * (a + b), 0.5 * (b - a)


def viscoelastic_leapfrog(v0, s_faces, h, dt, eps, steps):
    """Dense-matrix staggered scheme for ``v_t = (sigma + eps v_x)_x``, ``sigma_t = v_x``.

    Only valid while the data stay away from the boundary (boundary faces
    are held at zero) and below yield.  ``s_faces`` holds the interior faces.
    """
    n = v0.size
    # G: cells -> interior faces, D = -G^T: interior faces -> cells
    G = (np.eye(n - 1, n, 1) - np.eye(n - 1, n)) / h
    D = -G.T
    v, s = v0.astype(float).copy(), s_faces.astype(float).copy()
    hist = [(v.copy(), s.copy())]
    for _ in range(steps):
        gv = G @ v
        s = s + dt * gv
        v = v + dt * (D @ (s + eps * gv))
        hist.append((v.copy(), s.copy()))
    return hist


def bisect_radius(r_trial, k, tol=1e-15):
    """Solve ``s + k (s - 1) = r_trial`` for ``s`` in ``[1, r_trial]`` by bisection."""
    lo, hi = 1.0, r_trial
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid + k * (mid - 1.0) > r_trial:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)
