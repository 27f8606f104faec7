import math

import numpy as np
import pytest

from annulus_sle import coulomb_gas as cg
from annulus_sle import loewner as lw
from annulus_sle import special_fn as sf
from annulus_sle.errors import ForcePointSwallowed, Swallowed, ValidationError

PTS = {"a": 1.5 + 0.4j, "b": -2.0 + 0.7j}


def flow(dt, T=0.2, r0=1.0, xi=0.3, points=PTS):
    cfg = lw.DriverConfig(kappa=0.0, dt=dt)
    st = lw.initial_state(r0, xi, points, (), cfg)
    return lw.advance(st, cfg, int(round(T / dt)))


def test_short_time_expansion():
    dt = 1e-5
    st = flow(dt, T=dt)
    for k, z in PTS.items():
        expected = z + dt * sf.loewner_kernel_H(1.0, z - 0.3)
        assert abs(st.tracked[k] - expected) < 10 * dt ** 2


def test_step_halving_ratio():
    ref = flow(1e-2 / 64)
    errs = []
    for dt in (2e-2, 1e-2, 5e-3):
        st = flow(dt)
        errs.append(max(abs(st.tracked[k] - ref.tracked[k]) for k in PTS))
    for e0, e1 in zip(errs, errs[1:]):
        assert e0 / e1 == pytest.approx(16.0, rel=0.1)


def test_inner_boundary_preserved():
    cfg = lw.DriverConfig(kappa=4.0, dt=1e-4, rng_seed=3)
    pts = {i: complex(x, 1.0) for i, x in enumerate(np.linspace(-3, 3, 7))}
    st = lw.advance(lw.initial_state(1.0, 0.0, pts, (), cfg), cfg, 1000)
    for z in st.tracked.values():
        assert abs(z.imag - (1.0 - st.t)) < 1e-6


def test_real_line_preserved():
    cfg = lw.DriverConfig(kappa=2.0, dt=1e-4, rng_seed=5)
    st = lw.advance(lw.initial_state(1.0, 0.0, {0: 2.0 + 0j, 1: -1.5 + 0j}, (), cfg), cfg, 500)
    for z in st.tracked.values():
        assert abs(z.imag) < 1e-10


def test_periodicity():
    cfg = lw.DriverConfig(kappa=4.0, dt=1e-4, rng_seed=9)
    z = 1.1 + 0.5j
    pts = {0: z, 1: z + 2 * math.pi, 2: z - 4 * math.pi}
    st = lw.advance(lw.initial_state(1.0, 0.0, pts, (), cfg), cfg, 300)
    assert abs(st.tracked[1] - st.tracked[0] - 2 * math.pi) < 1e-9
    assert abs(st.tracked[2] - st.tracked[0] + 4 * math.pi) < 1e-9


def test_identical_seeds_identical_paths():
    def run():
        cfg = lw.DriverConfig(kappa=6.0, dt=1e-4, rng_seed=42, path_index=7)
        return lw.advance(lw.initial_state(1.0, 0.0, PTS, (), cfg), cfg, 200)
    a, b = run(), run()
    assert a.history == b.history
    assert a.tracked == b.tracked
    cfg = lw.DriverConfig(kappa=6.0, dt=1e-4, rng_seed=42, path_index=8)
    c = lw.advance(lw.initial_state(1.0, 0.0, PTS, (), cfg), cfg, 200)
    assert c.history != a.history


def test_advance_does_not_mutate():
    cfg = lw.DriverConfig(kappa=0.0, dt=1e-3)
    st = lw.initial_state(1.0, 0.0, PTS, (), cfg)
    lw.advance(st, cfg, 5)
    assert st.t == 0.0 and st.tracked == {k: complex(v) for k, v in PTS.items()}


def test_ensemble_step_matches_single_path():
    xi = np.array([0.1, -0.4])
    pts = np.array([[1.5 + 0.4j, 0.2 + 0.9j], [2.0 + 0.3j, -1.0 + 0.5j]])
    out = lw.ensemble_step(pts, xi, 1.0, 1e-3)
    for i in range(2):
        cfg = lw.DriverConfig(kappa=0.0, dt=1e-3)
        st = lw.advance(lw.initial_state(1.0, xi[i], list(pts[i]), (), cfg), cfg, 1)
        assert np.allclose(out[i], [st.tracked[0], st.tracked[1]], rtol=0, atol=1e-14)


def test_trace_at_time_zero_is_seed():
    cfg = lw.DriverConfig(kappa=0.0, dt=1e-3)
    st = lw.initial_state(1.0, 0.4, {}, (), cfg)
    assert abs(lw.trace_point(st, cfg, eps=1e-9) - 0.4) < 1e-8


def test_kappa0_trace_vertical():
    # zero driver: the trace is the vertical segment above the seed, by symmetry
    cfg = lw.DriverConfig(kappa=0.0, dt=1e-3)
    st = lw.advance(lw.initial_state(1.5, 0.0, {}, (), cfg), cfg, 300)
    g = lw.trace_point(st, cfg)
    assert abs(g.real) < 1e-9
    assert 0.0 < g.imag < 1.5


def test_noiseless_opposite_force_point_constant_driver():
    # force point diametrically opposite the seed: the drift vanishes by symmetry
    params = cg.SleParams(6.0)
    fd = cg.ForceDivisor.single(math.pi, params)
    cfg = lw.DriverConfig(kappa=0.0, dt=1e-3, drift=lw.sle_drift("er", 6.0, fd))
    st = lw.advance(lw.initial_state(1.0, 0.0, {}, fd.points, cfg), cfg, 200)
    assert max(abs(x) for x in st.history) < 1e-12
    assert abs(st.force_images[0] - math.pi) < 1e-12


def test_run_sle_trace_in_strip():
    params = cg.SleParams(4.0)
    fd = cg.ForceDivisor.single(math.pi, params)
    cfg = lw.DriverConfig(dt=1e-3, rng_seed=1)
    sample, snaps = lw.run_sle("dirichlet", 2.0, 4.0, 0.0, fd, 0.1, cfg, trace_stride=25, snapshot_stride=50)
    assert len(sample.times) == len(sample.gamma) == 5
    assert all(-1e-9 <= g.imag <= 2.0 for g in sample.gamma)
    assert len(snaps) == 3


def test_swallowed_reports_prestep_state():
    cfg = lw.DriverConfig(kappa=0.0, dt=1e-3, swallow_guard=0.05, drift=lambda r, xi, q: 20.0)
    st = lw.initial_state(1.0, 0.0, {"near": 0.5 + 0.01j}, (), cfg)
    with pytest.raises(Swallowed) as info:
        lw.advance(st, cfg, 150)
    assert info.value.label == "near"
    pre = info.value.state
    assert abs(np.sin(0.5 * (pre.tracked["near"] - pre.xi))) >= 0.05


def test_force_point_swallowed():
    cfg = lw.DriverConfig(kappa=0.0, dt=1e-3, swallow_guard=0.05, drift=lambda r, xi, q: 20.0)
    st = lw.initial_state(1.0, 0.0, {}, (0.5,), cfg)
    with pytest.raises(ForcePointSwallowed):
        lw.advance(st, cfg, 200)


def test_validation():
    cfg = lw.DriverConfig(dt=0.1)
    st = lw.initial_state(1.0, 0.0, {}, (), cfg)
    with pytest.raises(ValidationError):
        lw.advance(st, cfg, 10)
    with pytest.raises(ValidationError):
        lw.initial_state(1.0, 0.0, {0: 2j}, (), cfg)
    with pytest.raises(ValidationError):
        lw.initial_state(1.0, 0.0, {}, (0.5j,), cfg)
    for kw in ({"dt": 0.0}, {"kappa": -1.0}, {"swallow_guard": 0.0}):
        with pytest.raises(ValidationError):
            lw.DriverConfig(**kw)


def test_derivative_tracking_matches_finite_difference():
    h = 1e-6
    z = 1.2 + 0.5j
    cfg = lw.DriverConfig(kappa=0.0, dt=1e-3, track_derivatives=True)
    st = lw.advance(lw.initial_state(1.0, 0.2, {0: z, 1: z + h, 2: z - h}, (), cfg), cfg, 100)
    fd = (st.tracked[1] - st.tracked[2]) / (2 * h)
    assert abs(st.derivatives[0] - fd) < 1e-6
