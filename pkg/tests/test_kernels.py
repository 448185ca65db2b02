import os
import subprocess
import sys

import numpy as np
import pytest

from plastodyn import kernels
from plastodyn.driver import boundary_source, stable_dt
from plastodyn.grid import Grid, State, bump, pulse_scenario
from plastodyn.plastic import step_plastic
from plastodyn.viscoplastic import StepParams, step_viscoplastic

BACKENDS = kernels.available_backends()


@pytest.mark.parametrize("backend", BACKENDS)
def test_golden_viscoelastic_step(backend):
    # predictor: sigma = (0, .5, -.5, 0); viscous faces carry +-0.75, so
    # w = (0.375, 0.25, 0.375); implicit impedance at the end cells gives
    # v_b = w lam / (lam + dt/h) = 0.25 and sigma.nu = -v_b/lam
    g = Grid((3,), 1.0)
    st = State.zeros(g)
    st.v[:] = [0.0, 1.0, 0.0]
    out = np.zeros(kernels.N_OUT)
    new = step_viscoplastic(g, st, StepParams(0.5, 0.25, 1.0), backend=backend, out=out)
    np.testing.assert_allclose(new.u, [0.0, 0.5, 0.0], atol=1e-15)
    np.testing.assert_allclose(new.v, [0.25, 0.25, 0.25], atol=1e-15)
    np.testing.assert_allclose(new.sigma[0], [0.25, 0.5, -0.5, -0.25], atol=1e-15)
    np.testing.assert_array_equal(new.p[0], 0.0)
    assert new.t == 0.5
    assert out[0] == 0.0 and out[7] == 0
    assert out[1] == pytest.approx(0.5)      # eps |grad v|^2
    assert out[2] == pytest.approx(0.125)    # v_b^2 / lam on both ends
    assert out[8] == pytest.approx(0.09375)
    assert out[9] == pytest.approx(0.25)
    # the input state is untouched
    np.testing.assert_array_equal(st.v, [0.0, 1.0, 0.0])


@pytest.mark.parametrize("backend", BACKENDS)
def test_radial_return_1d(backend):
    g = Grid((3,), 1.0)
    st = State.zeros(g)
    st.sigma[0][1] = 1.5
    st.u[:] = [0.0, 1.5, 1.5]
    new = step_plastic(g, st, 0.5, 1.0, backend=backend)
    assert new.sigma[0][1] == 1.0
    assert new.p[0][1] == pytest.approx(0.5)
    # additive decomposition survives the step
    gu = np.diff(new.u) / g.h
    np.testing.assert_allclose(gu, new.sigma[0][1:-1] + new.p[0][1:-1], atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("cells", [(5,), (4, 6)])
def test_zero_state_is_fixed_point(backend, cells):
    g = Grid.uniform(cells)
    st = State.zeros(g)
    for bc in ("impedance", "dirichlet", "neumann"):
        new = step_plastic(g, st, 0.5 * g.h, 1.0, bc, backend=backend)
        assert not new.v.any() and not any(s.any() for s in new.sigma)
    new = step_viscoplastic(g, st, StepParams(0.1 * g.h**2, 0.1, 1.0), backend=backend)
    assert not new.v.any() and not new.u.any()


def _random_case(rng, cells, eps, bc):
    sc = pulse_scenario(cells, amplitude=2.5, width=0.3, stress_amplitude=0.4,
                        eps=eps, lam=0.7, bc_mode=bc)
    st = sc.initial_state()
    st.v += 0.3 * rng.normal(size=st.v.shape)
    g = sc.grid
    f = rng.normal(size=g.cells)
    gb = boundary_source(g, st.v, eps)
    return g, st, f, gb


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernels not built")
@pytest.mark.parametrize("cells", [(17,), (9, 11)])
@pytest.mark.parametrize("eps, bc", [(0.0, "impedance"), (0.0, "dirichlet"),
                                     (0.0, "neumann"), (0.02, "impedance")])
@pytest.mark.parametrize("with_f", [False, True])
def test_backends_agree(cells, eps, bc, with_f):
    rng = np.random.default_rng(len(cells) + int(100 * eps) + with_f)
    g, st, f, gb = _random_case(rng, cells, eps, bc)
    dt = stable_dt(g, eps, 0.9)
    a, b = st.copy(), st.copy()
    oa, ob = np.zeros(kernels.N_OUT), np.zeros(kernels.N_OUT)
    code = kernels.BC_CODES[bc]
    active = 0
    for _ in range(25):
        ff = f if with_f else None
        kernels.step(a.u, a.v, a.sigma, a.p, ff, gb, dt, g.h, eps, 0.7, code, oa,
                     backend="python")
        kernels.step(b.u, b.v, b.sigma, b.p, ff, gb, dt, g.h, eps, 0.7, code, ob,
                     backend="cython")
        np.testing.assert_allclose(oa, ob, rtol=1e-11, atol=1e-12)
        active += oa[7]
    np.testing.assert_allclose(a.v, b.v, rtol=1e-12, atol=1e-13)
    np.testing.assert_allclose(a.u, b.u, rtol=1e-12, atol=1e-13)
    for x, y in zip(a.sigma + a.p, b.sigma + b.p):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-13)
    assert active > 0  # the return map was exercised


def test_unknown_backend():
    g = Grid((3,), 1.0)
    st = State.zeros(g)
    with pytest.raises(ValueError):
        kernels.step(st.u, st.v, st.sigma, st.p, None, None, 0.1, 1.0, 0.0, 1.0, 0,
                     np.zeros(kernels.N_OUT), backend="fortran")


def test_pure_python_fallback_selected_by_environment():
    code = ("from plastodyn import kernels, run_plastic, pulse_scenario;"
            "t = run_plastic(pulse_scenario(40, amplitude=2.0, width=0.2, T=0.2));"
            "print(kernels.BACKEND, t.meta['backend'], repr(float(t.final.v.sum())))")
    env = dict(os.environ, PLASTODYN_PURE_PYTHON="1")
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True)
    backend, used, total = res.stdout.split()
    assert backend == used == "python"
    from plastodyn import pulse_scenario, run_plastic
    ref = run_plastic(pulse_scenario(40, amplitude=2.0, width=0.2, T=0.2))
    assert float(total) == pytest.approx(float(ref.final.v.sum()), rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("backend", BACKENDS)
def test_source_enters_velocity(backend):
    g = Grid((5,), 0.2)
    st = State.zeros(g)
    f = bump(g, 0.5, 0.3)
    new = step_plastic(g, st, 0.1, 1.0, "neumann", f, backend=backend)
    np.testing.assert_allclose(new.v, 0.1 * f, atol=1e-15)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("cells", [(200,), (30, 30)])
def test_return_map_lands_inside_the_ball(backend, cells):
    # with v = 0 the step is the bare return map; rounding of c * (1/r)
    # must never leave a pair above the yield surface
    from plastodyn.grid import pair_norm
    rng = np.random.default_rng(sum(cells))
    g = Grid.uniform(cells)
    st = State.zeros(g)
    for s in st.sigma:
        s[...] = rng.uniform(-3.0, 3.0, size=s.shape)
    new = step_plastic(g, st, 0.5 * g.h, 1.0, "neumann", backend=backend)
    norms = pair_norm(g, new.sigma)
    assert norms.max() <= 1.0
    assert np.count_nonzero(norms == 1.0) > 0.5 * norms.size
