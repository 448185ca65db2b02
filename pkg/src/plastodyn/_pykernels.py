"""Reference numpy implementation of the time-step kernel.

The compiled kernel in ``_ckernels`` follows this code line for line; any
change here must be mirrored there (the test-suite compares them).

``out`` receives per-step rates (not yet multiplied by ``dt``):

====  ======================================================================
0     plastic dissipation        sum |pdot| h^n
1     viscous dissipation        eps sum |grad v|^2 h^n  (old velocity)
2     boundary flux term         (lam/2) sum (sigma.nu)^2 h^(n-1)  if eps = 0
                                 lam^-1 sum v_b^2 h^(n-1)           if eps > 0
3     boundary potential         sum psi_lam(v_b) h^(n-1)  (|v_b| for dirichlet)
4     external power             sum f (v_old + v_new)/2 h^n + sum g v_b h^(n-1)
5     flow-rule residual         sum over active pairs of |sigma.pdot - |pdot| - eps |pdot|^2|
6     largest pair norm of sigma after the step
7     number of plastically active pairs
8     kinetic energy after the step
9     elastic energy after the step (interior faces)
10    visco-plastic dissipation  eps sum |pdot|^2 h^n
11    velocity increment         sum (v_new - v_old)^2 h^n
====  ======================================================================
"""

from __future__ import annotations

import numpy as np

IMPEDANCE, DIRICHLET, NEUMANN = 0, 1, 2
N_OUT = 12


def _sl(dim, axis, s):
    idx = [slice(None)] * dim
    idx[axis] = s
    return tuple(idx)


def step(u, v, sigma, p, f, g, dt, h, eps, lam, bc, out):
    """Advance one step in place.  See module docstring for ``out``."""
    dim = v.ndim
    cells = v.shape
    vol = h**dim
    area = h ** (dim - 1)
    c = dt / h
    out[:] = 0.0

    # (a) elastic predictor on interior faces, displacement with the old velocity
    grads = []
    for a in range(dim):
        ga = np.diff(v, axis=a) / h
        grads.append(ga)
        sigma[a][_sl(dim, a, slice(1, -1))] += dt * ga
    u += dt * v

    # (b) projection / resolvent per face pair (low faces of each cell)
    sq = np.zeros(cells)
    comps = []
    for a in range(dim):
        comp = sigma[a][_sl(dim, a, slice(0, cells[a]))].copy()
        comp[_sl(dim, a, 0)] = 0.0
        comps.append(comp)
        sq += comp * comp
    r = np.sqrt(sq)
    active = r > 1.0
    safe = np.where(active, r, 1.0)
    if eps > 0:
        k = dt / eps
        scale = np.where(active, (safe + k) / ((1.0 + k) * safe), 1.0)
    else:
        scale = np.where(active, 1.0 / safe, 1.0)
        # c * (1/r) can round to just above the yield surface; step the
        # scale down an ulp at a time until the stored pair is inside
        for _ in range(8):
            rn = np.sqrt(sum((cp * scale) ** 2 for cp in comps))
            over = active & (rn > 1.0)
            if not over.any():
                break
            scale = np.where(over, np.nextafter(scale, 0.0), scale)
    pdot_sq = np.zeros(cells)
    sdotp = np.zeros(cells)
    for a in range(dim):
        new = comps[a] * scale
        pd = (comps[a] - new) / dt
        pdot_sq += pd * pd
        sdotp += new * pd
        view = _sl(dim, a, slice(1, cells[a]))
        sigma[a][view] = new[view]
        p[a][view] += dt * pd[view]
    pdot = np.sqrt(pdot_sq)
    out[0] = pdot.sum() * vol
    out[5] = np.abs(sdotp - pdot - eps * pdot_sq)[active].sum()
    out[6] = np.where(active, np.sqrt(sum((cp * scale) ** 2 for cp in comps)), r).max()
    out[7] = active.sum()

    # (c) interior divergence with explicit viscous flux
    w = v.copy()
    visc = 0.0
    for a in range(dim):
        flux = sigma[a][_sl(dim, a, slice(1, -1))]
        if eps > 0:
            flux = flux + eps * grads[a]
            visc += eps * np.sum(grads[a] * grads[a])
        fx = np.zeros(sigma[a].shape)
        fx[_sl(dim, a, slice(1, -1))] = flux
        w += c * np.diff(fx, axis=a)
    out[1] = visc * vol
    out[10] = eps * pdot_sq.sum() * vol
    if f is not None:
        w += dt * f

    # (d) implicit boundary closure on boundary cells
    m = np.zeros(cells)
    gsum = np.zeros(cells)
    for a in range(dim):
        for side in (0, 1):
            cell = _sl(dim, a, 0 if side == 0 else cells[a] - 1)
            m[cell] += 1.0
            if g is not None:
                gsum[cell] += np.reshape(g[a][side], gsum[cell].shape)
    bmask = m > 0
    cm = c * m
    vn = w.copy()
    if bc == IMPEDANCE and eps > 0:
        vn = np.where(bmask, (w + c * gsum) * lam / (lam + cm), w)
    elif bc == IMPEDANCE:
        lin = np.abs(w) <= lam + cm
        vb = np.where(lin, w * lam / (lam + cm), w - cm * np.sign(w))
        vn = np.where(bmask, vb, w)
    elif bc == DIRICHLET:
        vn = np.where(bmask, np.sign(w) * np.maximum(np.abs(w) - cm, 0.0), w)
    react = np.where(bmask, (w - vn) / np.where(bmask, cm, 1.0), 0.0)

    bflux = bpsi = bwork = 0.0
    for a in range(dim):
        for side, sgn in ((0, -1.0), (1, 1.0)):
            cell = _sl(dim, a, 0 if side == 0 else cells[a] - 1)
            face = _sl(dim, a, 0 if side == 0 else cells[a])
            vb = vn[cell]
            if bc == IMPEDANCE and eps > 0:
                gb = np.reshape(g[a][side], np.shape(vb)) if g is not None else 0.0
                sn = gb - vb / lam
                bflux += np.sum(vb * vb) / lam
                bwork += np.sum(gb * vb)
            elif bc == IMPEDANCE:
                sn = -np.clip(vb / lam, -1.0, 1.0)
                bflux += 0.5 * lam * np.sum(sn * sn)
                av = np.abs(vb)
                bpsi += np.sum(np.where(av <= lam, vb * vb / (2.0 * lam), av - 0.5 * lam))
            elif bc == DIRICHLET:
                sn = -react[cell]
                bpsi += np.sum(np.abs(vb))
            else:
                sn = np.zeros_like(vb)
            sigma[a][face] = sgn * sn
    out[2] = bflux * area
    out[3] = bpsi * area
    work = bwork * area
    if f is not None:
        work += np.sum(f * 0.5 * (v + vn)) * vol
    out[4] = work
    out[11] = np.sum((vn - v) ** 2) * vol
    v[...] = vn

    out[8] = 0.5 * np.sum(v * v) * vol
    out[9] = 0.5 * sum(np.sum(sigma[a][_sl(dim, a, slice(1, -1))] ** 2) for a in range(dim)) * vol
