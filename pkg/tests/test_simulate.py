import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ckls.errors import InvalidConfig, NonUniformGrid, StepTooLarge, TargetEqualsStart
from ckls.model import PolyDynamics, ckls_as_poly, make_ckls
from ckls.simulate import (
    SamplePath,
    Scheme,
    SimConfig,
    first_passage_time,
    read_path_csv,
    rng_for,
    simulate_ckls,
    simulate_generalized,
    write_path_csv,
)


def test_cir_long_path_positive(cir):
    path = simulate_ckls(cir, SimConfig(T=100, dt=1e-4, seed=7))
    assert path.values.size == 10 ** 6 + 1
    assert path.values[0] == 1.0
    assert np.all(path.values > 0)


def test_noiseless_matches_ode():
    p = make_ckls(0.5, 1.0, 0.3, 0.5, 2.0)
    path = simulate_ckls(p, SimConfig(T=1, dt=1e-4, noiseless=True))
    assert abs(path.values[-1] - (0.5 + 1.5 * math.exp(-1))) < 1e-3


def test_same_seed_same_path(cir):
    cfg = SimConfig(T=5, dt=1e-3, seed=42)
    assert simulate_ckls(cir, cfg) == simulate_ckls(cir, cfg)
    assert simulate_ckls(cir, cfg) != simulate_ckls(cir, SimConfig(T=5, dt=1e-3, seed=43))


def test_generalized_route_is_bit_identical(cir):
    cfg = SimConfig(T=10, dt=1e-3, seed=3)
    a = simulate_ckls(cir, cfg)
    b = simulate_generalized(ckls_as_poly(cir), cir.r0, cfg)
    assert np.array_equal(a.values, b.values)


@pytest.mark.parametrize("alpha", [0.5, 0.7, 1.0])
def test_generalized_route_identical_all_alpha(alpha):
    p = make_ckls(0.2, 0.6, 0.1, alpha, 0.8)
    cfg = SimConfig(T=2, dt=1e-3, seed=11)
    assert np.array_equal(simulate_ckls(p, cfg).values,
                          simulate_generalized(ckls_as_poly(p), p.r0, cfg).values)


def test_generalized_finite():
    dyn = PolyDynamics((1.0, -1.0, 0.0), (0.0, 1.0), 0.5)
    path = simulate_generalized(dyn, 1.0, SimConfig(T=5, dt=1e-3, seed=1))
    assert np.all(np.isfinite(path.values))


def test_quadratic_drift_bounded():
    dyn = PolyDynamics((0.1, 0.2, -0.3), (0.0, 1.0), 0.5)
    path = simulate_generalized(dyn, 1.0, SimConfig(T=50, dt=1e-3, seed=2))
    assert np.max(path.values) < 1e3


def test_increments_follow_rng_contract(cir):
    # path equals a hand-rolled Euler loop on the documented stream
    cfg = SimConfig(T=0.01, dt=1e-3, seed=5)
    z = rng_for(5, 0).standard_normal(cfg.n_steps) * math.sqrt(cfg.dt)
    x = [cir.r0]
    for dw in z:
        r = max(x[-1], 0.0)
        x.append(x[-1] + (cir.beta1 - cir.beta2 * r) * cfg.dt + (cir.sigma ** 2 * r) ** 0.5 * dw)
    np.testing.assert_allclose(simulate_ckls(cir, cfg).values, x, rtol=1e-15)


def test_streams_are_independent(cir):
    cfg = SimConfig(T=1, dt=1e-3, seed=9)
    assert not np.array_equal(simulate_ckls(cir, cfg, stream=0).values,
                              simulate_ckls(cir, cfg, stream=1).values)


def test_reflection_keeps_states_nonnegative():
    # Feller-violating CIR visits zero often
    p = make_ckls(0.001, 0.5, 0.5, 0.5, 0.01)
    trunc = simulate_ckls(p, SimConfig(T=20, dt=1e-3, seed=1))
    refl = simulate_ckls(p, SimConfig(T=20, dt=1e-3, seed=1, scheme="reflect"))
    assert np.all(refl.values >= 0)
    assert np.any(trunc.values < 0)


def test_scheme_aliases():
    assert Scheme.parse("truncate") is Scheme.FULL_TRUNCATION
    assert Scheme.parse("Reflection") is Scheme.REFLECTION
    with pytest.raises(InvalidConfig):
        Scheme.parse("milstein")


def test_step_too_large(cir):
    with pytest.raises(StepTooLarge):
        simulate_ckls(cir, SimConfig(T=10, dt=0.5))
    path = simulate_ckls(cir, SimConfig(T=10, dt=0.5, allow_large_step=True))
    assert path.values.size == 21


@pytest.mark.parametrize("kw", [dict(T=1, dt=2), dict(T=1, dt=0.6), dict(T=-1, dt=0.1),
                                dict(T=1, dt=0.0), dict(T=1, dt=0.1, seed=-1)])
def test_bad_config(kw):
    with pytest.raises(InvalidConfig):
        SimConfig(**kw)


def test_step_count_floor_guard():
    # 0.3 / 0.1 evaluates to 2.9999999999999996
    assert SimConfig(T=0.3, dt=0.1).n_steps == 3
    assert SimConfig(T=1.05, dt=0.1).n_steps == 10


def test_last_time_is_exact():
    path = SamplePath(0.5, 0.25, [1.0, 2.0, 3.0, 4.0])
    assert path.t_end == 0.5 + 3 * 0.25
    assert path.times[-1] == path.t_end
    assert path.T == 0.75


def test_prefix_equals_shorter_simulation(cir):
    long = simulate_ckls(cir, SimConfig(T=20, dt=1e-3, seed=4))
    short = simulate_ckls(cir, SimConfig(T=10, dt=1e-3, seed=4))
    assert long.prefix(10) == short


def test_noiseless_first_passage():
    p = make_ckls(0.5, 0.5, 0.2, 0.5, 4.0)
    cfg = SimConfig(T=1, dt=1e-3, noiseless=True)
    tau = first_passage_time(p, 2.5, cfg, t_max=10)
    assert abs(tau - math.log(2) / 0.5) <= 2 * cfg.dt


def test_noiseless_first_passage_from_below():
    p = make_ckls(0.5, 0.5, 0.2, 0.5, 0.2)
    cfg = SimConfig(T=1, dt=1e-3, noiseless=True)
    tau = first_passage_time(p, 0.6, cfg, t_max=10)
    assert abs(tau - math.log(2) / 0.5) <= 2 * cfg.dt


def test_target_equals_start():
    p = make_ckls(0.5, 0.5, 0.2, 0.5, 4.0)
    with pytest.raises(TargetEqualsStart):
        first_passage_time(p, 4.0 - 1e-15, SimConfig(T=1, dt=1e-3), t_max=10)


def test_censored_returns_none():
    p = make_ckls(0.5, 0.5, 0.01, 0.5, 4.0)
    assert first_passage_time(p, 1.0, SimConfig(T=1, dt=1e-3), t_max=0.5) is None


def test_first_passage_crosses_simulated_path(cir):
    # the passage time lies inside the step where the simulated path crosses
    cfg = SimConfig(T=20, dt=1e-3, seed=8)
    target = 0.6
    tau = first_passage_time(cir, target, cfg, t_max=20)
    path = simulate_ckls(cir, cfg)
    i = int(np.argmax(path.values <= target))
    assert (i - 1) * cfg.dt <= tau <= i * cfg.dt


def test_cir_first_passage_rarely_censored():
    p = make_ckls(0.1, 0.5, 0.03, 0.5, 2.0)  # r0 = 10 mu
    cfg = SimConfig(T=1, dt=1e-3, seed=0)
    target = 0.5 * (p.r0 + p.mu)
    taus = [first_passage_time(p, target, cfg, 50 / p.beta2, stream=i) for i in range(200)]
    assert sum(t is None for t in taus) < 2


def test_weak_first_moment():
    # E[r_T] = mu + (r0 - mu) exp(-beta2 T), 10^4 paths
    p = make_ckls(0.1, 0.5, 0.1, 0.5, 1.0)
    cfg = SimConfig(T=2, dt=1e-3, seed=21)
    finals = np.array([simulate_ckls(p, cfg, stream=i).values[-1] for i in range(10_000)])
    exact = p.mu + (p.r0 - p.mu) * math.exp(-p.beta2 * 2)
    assert abs(finals.mean() - exact) < 3 * finals.std(ddof=1) / math.sqrt(finals.size)


def test_csv_round_trip(tmp_path, cir):
    path = simulate_ckls(cir, SimConfig(T=1, dt=1e-3, seed=1))
    f = tmp_path / "p.csv"
    write_path_csv(path, f)
    assert f.read_text().startswith("t,r\n")
    back = read_path_csv(f)
    assert back == path


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([1e-4, 1e-3, 0.01, 0.02, 0.05, 0.1, 1 / 3]),
       st.floats(min_value=0.0, max_value=100.0), st.integers(min_value=2, max_value=300))
def test_csv_recovers_dt(tmp_path_factory, dt, t0, n):
    path = SamplePath(t0, dt, np.linspace(1.0, 2.0, n))
    f = tmp_path_factory.mktemp("csv") / "p.csv"
    write_path_csv(path, f)
    back = read_path_csv(f)
    np.testing.assert_array_equal(back.times, path.times)
    assert np.array_equal(back.values, path.values)


def test_csv_shuffled_times(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("t,r\n0,1\n0.2,1\n0.1,1\n0.3,1\n")
    with pytest.raises(NonUniformGrid):
        read_path_csv(f)


def test_csv_uneven_times(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("t,r\n0,1\n0.1,1\n0.25,1\n0.3,1\n")
    with pytest.raises(NonUniformGrid):
        read_path_csv(f)


def test_csv_bad_header(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("time,rate\n0,1\n0.1,1\n")
    with pytest.raises(InvalidConfig):
        read_path_csv(f)


def test_csv_non_numeric(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("t,r\n0,1\n0.1,abc\n")
    with pytest.raises(InvalidConfig):
        read_path_csv(f)
