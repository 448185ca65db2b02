# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Compiled time-step kernels; semantics identical to ``_pykernels.step``."""

import numpy as np

from libc.math cimport fabs, nextafter, sqrt

cdef enum:
    IMPEDANCE = 0
    DIRICHLET = 1


cdef inline double _sign(double x) nogil:
    return (x > 0) - (x < 0)


cdef inline double _clip1(double x) nogil:
    if x > 1.0:
        return 1.0
    if x < -1.0:
        return -1.0
    return x


cdef inline double _psi(double z, double lam) nogil:
    cdef double a = fabs(z)
    if a <= lam:
        return z * z / (2.0 * lam)
    return a - 0.5 * lam


cdef inline double _solve_boundary(double w, double cm, double gs, double c,
                                   double lam, double eps, int bc) nogil:
    if bc == IMPEDANCE:
        if eps > 0:
            return (w + c * gs) * lam / (lam + cm)
        if fabs(w) <= lam + cm:
            return w * lam / (lam + cm)
        return w - cm * _sign(w)
    if bc == DIRICHLET:
        if fabs(w) > cm:
            return w - cm * _sign(w)
        return 0.0
    return w


cdef inline double _face_flux(double vb, double w, double cm, double gb, double lam,
                              double eps, int bc, double* acc) nogil:
    """Outward normal flux at one boundary face; ``acc`` gets flux/psi/work."""
    cdef double sn
    if bc == IMPEDANCE:
        if eps > 0:
            sn = gb - vb / lam
            acc[0] += vb * vb / lam
            acc[2] += gb * vb
        else:
            sn = -_clip1(vb / lam)
            acc[0] += 0.5 * lam * sn * sn
            acc[1] += _psi(vb, lam)
        return sn
    if bc == DIRICHLET:
        acc[1] += fabs(vb)
        return -(w - vb) / cm
    return 0.0


def step1d(double[::1] u, double[::1] v, double[::1] s, double[::1] p,
           double[::1] f, bint has_f, double[::1] g,
           double dt, double h, double eps, double lam, int bc, double[::1] out):
    cdef Py_ssize_t n = v.shape[0], i, it
    cdef double c = dt / h, k, r, sc, new, pd, gr, fl
    cdef double[::1] grads = np.zeros(n + 1)
    cdef double[::1] w = np.empty(n)
    cdef double[::1] vold = np.empty(n)
    cdef double acc[3]
    cdef double plast = 0, visc = 0, pdsq = 0, resid = 0, smax = 0, nact = 0
    cdef double work = 0, kin = 0, ela = 0, dv = 0, v0, v1
    acc[0] = acc[1] = acc[2] = 0

    with nogil:
        for i in range(1, n):
            gr = (v[i] - v[i - 1]) / h
            grads[i] = gr
            s[i] += dt * gr
        for i in range(n):
            vold[i] = v[i]
            u[i] += dt * v[i]

        k = dt / eps if eps > 0 else 0.0
        for i in range(1, n):
            r = fabs(s[i])
            if r > 1.0:
                if eps > 0:
                    sc = (r + k) / ((1.0 + k) * r)
                else:
                    sc = 1.0 / r
                    for it in range(8):
                        if fabs(s[i] * sc) <= 1.0:
                            break
                        sc = nextafter(sc, 0.0)
                new = s[i] * sc
                pd = (s[i] - new) / dt
                s[i] = new
                p[i] += dt * pd
                plast += fabs(pd)
                pdsq += pd * pd
                resid += fabs(new * pd - fabs(pd) - eps * pd * pd)
                nact += 1
                r = fabs(new)
            if r > smax:
                smax = r

        for i in range(n):
            w[i] = v[i]
        for i in range(1, n):
            fl = s[i] + eps * grads[i]
            visc += grads[i] * grads[i]
            w[i - 1] += c * fl
            w[i] -= c * fl
        if has_f:
            for i in range(n):
                w[i] += dt * f[i]

        v0 = _solve_boundary(w[0], c, g[0], c, lam, eps, bc)
        v1 = _solve_boundary(w[n - 1], c, g[1], c, lam, eps, bc)
        s[0] = -_face_flux(v0, w[0], c, g[0], lam, eps, bc, acc)
        s[n] = _face_flux(v1, w[n - 1], c, g[1], lam, eps, bc, acc)
        w[0] = v0
        w[n - 1] = v1
        for i in range(n):
            v[i] = w[i]
            kin += v[i] * v[i]
            dv += (v[i] - vold[i]) * (v[i] - vold[i])
            if has_f:
                work += f[i] * 0.5 * (vold[i] + v[i])
        for i in range(1, n):
            ela += s[i] * s[i]

    out[0] = plast * h
    out[1] = eps * visc * h
    out[2] = acc[0]
    out[3] = acc[1]
    out[4] = work * h + acc[2]
    out[5] = resid
    out[6] = smax
    out[7] = nact
    out[8] = 0.5 * kin * h
    out[9] = 0.5 * ela * h
    out[10] = eps * pdsq * h
    out[11] = dv * h


def step2d(double[:, ::1] u, double[:, ::1] v, double[:, ::1] sx, double[:, ::1] sy,
           double[:, ::1] px, double[:, ::1] py, double[:, ::1] f, bint has_f,
           double[::1] gxl, double[::1] gxh, double[::1] gyl, double[::1] gyh,
           double dt, double h, double eps, double lam, int bc, double[::1] out):
    cdef Py_ssize_t nx = v.shape[0], ny = v.shape[1], i, j, it
    cdef double c = dt / h, k, r, sc, a, b, na, nb, pa, pb, pn, fl, cm, gs, vb, wv
    cdef double[:, ::1] gx = np.zeros((nx + 1, ny))
    cdef double[:, ::1] gy = np.zeros((nx, ny + 1))
    cdef double[:, ::1] w = np.empty((nx, ny))
    cdef double[:, ::1] vold = np.empty((nx, ny))
    cdef double acc[3]
    cdef double plast = 0, visc = 0, pdsq = 0, resid = 0, smax = 0, nact = 0
    cdef double work = 0, kin = 0, ela = 0, dv = 0
    acc[0] = acc[1] = acc[2] = 0

    with nogil:
        for i in range(1, nx):
            for j in range(ny):
                gx[i, j] = (v[i, j] - v[i - 1, j]) / h
                sx[i, j] += dt * gx[i, j]
        for i in range(nx):
            for j in range(1, ny):
                gy[i, j] = (v[i, j] - v[i, j - 1]) / h
                sy[i, j] += dt * gy[i, j]
        for i in range(nx):
            for j in range(ny):
                vold[i, j] = v[i, j]
                u[i, j] += dt * v[i, j]

        k = dt / eps if eps > 0 else 0.0
        for i in range(nx):
            for j in range(ny):
                a = sx[i, j] if i > 0 else 0.0
                b = sy[i, j] if j > 0 else 0.0
                r = sqrt(a * a + b * b)
                if r > 1.0:
                    if eps > 0:
                        sc = (r + k) / ((1.0 + k) * r)
                    else:
                        sc = 1.0 / r
                        for it in range(8):
                            if sqrt((a * sc) * (a * sc) + (b * sc) * (b * sc)) <= 1.0:
                                break
                            sc = nextafter(sc, 0.0)
                    na = a * sc
                    nb = b * sc
                    pa = (a - na) / dt
                    pb = (b - nb) / dt
                    if i > 0:
                        sx[i, j] = na
                        px[i, j] += dt * pa
                    if j > 0:
                        sy[i, j] = nb
                        py[i, j] += dt * pb
                    pn = sqrt(pa * pa + pb * pb)
                    plast += pn
                    pdsq += pn * pn
                    resid += fabs(na * pa + nb * pb - pn - eps * pn * pn)
                    nact += 1
                    r = sqrt(na * na + nb * nb)
                if r > smax:
                    smax = r

        for i in range(nx):
            for j in range(ny):
                w[i, j] = v[i, j]
        for i in range(1, nx):
            for j in range(ny):
                fl = sx[i, j] + eps * gx[i, j]
                visc += gx[i, j] * gx[i, j]
                w[i - 1, j] += c * fl
                w[i, j] -= c * fl
        for i in range(nx):
            for j in range(1, ny):
                fl = sy[i, j] + eps * gy[i, j]
                visc += gy[i, j] * gy[i, j]
                w[i, j - 1] += c * fl
                w[i, j] -= c * fl
        if has_f:
            for i in range(nx):
                for j in range(ny):
                    w[i, j] += dt * f[i, j]

        # boundary cells: count faces and gather g per cell
        for i in range(nx):
            for j in range(ny):
                if i > 0 and i < nx - 1 and j > 0 and j < ny - 1:
                    continue
                cm = 0.0
                gs = 0.0
                if i == 0:
                    cm += c
                    gs += gxl[j]
                if i == nx - 1:
                    cm += c
                    gs += gxh[j]
                if j == 0:
                    cm += c
                    gs += gyl[i]
                if j == ny - 1:
                    cm += c
                    gs += gyh[i]
                wv = w[i, j]
                vb = _solve_boundary(wv, cm, gs, c, lam, eps, bc)
                if i == 0:
                    sx[0, j] = -_face_flux(vb, wv, cm, gxl[j], lam, eps, bc, acc)
                if i == nx - 1:
                    sx[nx, j] = _face_flux(vb, wv, cm, gxh[j], lam, eps, bc, acc)
                if j == 0:
                    sy[i, 0] = -_face_flux(vb, wv, cm, gyl[i], lam, eps, bc, acc)
                if j == ny - 1:
                    sy[i, ny] = _face_flux(vb, wv, cm, gyh[i], lam, eps, bc, acc)
                w[i, j] = vb

        for i in range(nx):
            for j in range(ny):
                v[i, j] = w[i, j]
                kin += v[i, j] * v[i, j]
                dv += (v[i, j] - vold[i, j]) * (v[i, j] - vold[i, j])
                if has_f:
                    work += f[i, j] * 0.5 * (vold[i, j] + v[i, j])
        for i in range(1, nx):
            for j in range(ny):
                ela += sx[i, j] * sx[i, j]
        for i in range(nx):
            for j in range(1, ny):
                ela += sy[i, j] * sy[i, j]

    out[0] = plast * h * h
    out[1] = eps * visc * h * h
    out[2] = acc[0] * h
    out[3] = acc[1] * h
    out[4] = work * h * h + acc[2] * h
    out[5] = resid
    out[6] = smax
    out[7] = nact
    out[8] = 0.5 * kin * h * h
    out[9] = 0.5 * ela * h * h
    out[10] = eps * pdsq * h * h
    out[11] = dv * h * h
