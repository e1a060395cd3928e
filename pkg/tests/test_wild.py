import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wildgevrey import (ConfigError, DatumSpec, KernelSpec, Mode, NormalizationError, ResolutionError,
                        SpectralState, TruncationError, build_cutoff, make_grid, realize)
from wildgevrey.wild import (_stage_plan, assemble, consecutive_differences, cutoff_sweep, gain_term,
                             ode_trajectory, required_order, solve_ode, solve_wild, tail_bound,
                             wild_extend, wild_init, wild_trajectory)

KAC = KernelSpec.kac_power(2.0)


def small(mode=Mode.KAC, M=65, r_max=8.0, datum="gaussian"):
    g = make_grid(mode, r_max, M)
    spec = {"gaussian": DatumSpec.gaussian(mode), "mixture": DatumSpec.mixture(mode=mode),
            "bump": DatumSpec.bump()}[datum]
    return realize(spec, g)


def kernel(mode=Mode.KAC, level=5.0, n=64):
    return build_cutoff(KAC if mode is Mode.KAC else KernelSpec.maxwell(), level, n)


def test_init_stores_datum_verbatim():
    f0 = small(datum="bump")
    s = wild_init(f0, kernel())
    assert s.order == 0 and np.array_equal(s.coefficients[0], f0.values) and s.coefficients[0][0] == 1.0


def test_init_rejects_unnormalised():
    g = make_grid(Mode.KAC, 8.0, 65)
    bad = SpectralState(g, 0.5 * np.exp(-g.nodes ** 2), validate=False)
    with pytest.raises(NormalizationError):
        wild_init(bad, kernel())


def test_init_rejects_mode_mismatch():
    with pytest.raises(ConfigError):
        wild_init(small(Mode.BOLTZMANN), kernel(Mode.KAC))


@pytest.mark.parametrize("mode", [Mode.KAC, Mode.BOLTZMANN])
def test_gaussian_is_fixed_by_recursion(mode):
    s = wild_init(small(mode), kernel(mode))
    for _ in range(3):
        s = wild_extend(s)
    for c in s.coefficients[1:]:
        assert np.max(np.abs(c - s.coefficients[0])) <= 1e-13


def test_dirac_datum_stays_one():
    g = make_grid(Mode.KAC, 8.0, 33)
    s = wild_extend(wild_init(SpectralState(g, np.ones(33)), kernel()))
    assert np.max(np.abs(s.coefficients[1] - 1.0)) <= 1e-14


@pytest.mark.parametrize("mode", [Mode.KAC, Mode.BOLTZMANN])
def test_first_coefficient_against_fine_direct_quadrature(mode):
    f0 = small(mode, M=257, r_max=16.0, datum="mixture")
    k = kernel(mode)
    phi1 = wild_extend(wild_init(f0, k)).coefficients[1]
    # oracle: closed-form mixture evaluated exactly, 8x angular nodes, 4x radial grid
    spec = DatumSpec.mixture(mode=mode)
    w, var = np.asarray(spec.weights), spec.normalized_variances
    fhat = lambda r: np.exp(-0.5 * np.multiply.outer(r * r, var)) @ w
    fine = kernel(mode, n=512)
    c, s = fine.split_factors()
    r = make_grid(mode, 16.0, 1025).nodes
    ref = (fhat(np.outer(r, c)) * fhat(np.outer(r, s))) @ fine.beta_weights
    # residual is the cubic interpolation error at h = 1/16, about 2e-9
    assert np.max(np.abs(phi1 - ref[::4])) <= 1e-8


def test_assemble_tau_zero_is_datum():
    f0 = small(datum="mixture")
    s = wild_extend(wild_extend(wild_init(f0, kernel())))
    out, tail = assemble(s, 0.0)
    assert np.array_equal(out.values, f0.values) and tail == 0.0


def test_assemble_gaussian_any_tau():
    f0 = small()
    s = wild_init(f0, kernel())
    for _ in range(5):
        s = wild_extend(s)
    for tau in (0.1, 1.0, 3.0):
        out, _ = assemble(s, tau)
        assert np.max(np.abs(out.values - f0.values)) <= 1e-13


def test_assemble_tail_bound_example():
    s = wild_init(small(datum="mixture"), kernel())
    for _ in range(20):
        s = wild_extend(s)
    a, ta = assemble(s, 1.0, order=10)
    b, _ = assemble(s, 1.0, order=20)
    assert ta == pytest.approx((1 - math.exp(-1)) ** 11)
    assert np.max(np.abs(a.values - b.values)) <= ta
    assert a.values[0] == 1.0


def test_assemble_reports_truncation():
    s = wild_extend(wild_init(small(), kernel()))
    with pytest.raises(TruncationError):
        assemble(s, 2.0, accuracy=1e-8)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 5.0), st.floats(1e-14, 0.5))
def test_required_order_is_minimal(tau, acc):
    n = required_order(tau, acc)
    assert tail_bound(tau, n) <= acc
    if n > 0:
        assert tail_bound(tau, n - 1) > acc


def test_stage_plan_hits_snapshots():
    ends, marks = _stage_plan([0.0, 0.3, 1.7, 1.7, 4.0], 0.5)
    assert [ends[m - 1] if m else 0.0 for m in marks] == [0.0, 0.3, 1.7, 1.7, 4.0]
    assert max(b - a for a, b in zip([0.0] + ends, ends)) <= 0.5 + 1e-12


def test_solve_wild_time_zero():
    f0 = small(datum="mixture")
    out = solve_wild(f0, kernel(), 0.0)
    assert np.array_equal(out.values, f0.values)


def test_gaussian_long_time():
    f0 = small()
    out = solve_wild(f0, kernel(), 5.0)
    assert np.max(np.abs(out.values - f0.values)) <= 1e-10


def test_order_cap():
    with pytest.raises(TruncationError):
        solve_wild(small(), kernel(), 1.0, max_order=2)


def test_ode_origin_unchanged_after_one_step():
    f0 = small(datum="mixture")
    k = kernel()
    out = solve_ode(f0, k, 0.01, dt=0.01)
    assert abs(out.values[0] - 1.0) <= 1e-14


def test_ode_gaussian_fixed():
    f0 = small()
    out = solve_ode(f0, kernel(), 1.0)
    assert np.max(np.abs(out.values - f0.values)) <= 1e-12


def test_ode_instability_detected():
    f0 = small(datum="mixture")
    k = kernel(level=50.0)
    with pytest.raises(ResolutionError):
        solve_ode(f0, k, 5.0, dt=1.0)


def test_wild_and_ode_agree_small_grid():
    f0 = small(datum="mixture")
    k = kernel()
    a = solve_wild(f0, k, 0.5)
    b = solve_ode(f0, k, 0.5)
    assert np.max(np.abs(a.values - b.values)) <= 1e-6


def test_gain_term_at_origin_is_one():
    assert gain_term(small(datum="mixture"), kernel())[0] == pytest.approx(1.0, abs=1e-15)


def test_sweep_with_inactive_cutoff():
    f0 = small(datum="mixture")
    spec = KernelSpec.constant(0.5, Mode.KAC)
    states = cutoff_sweep(f0, spec, [1.0, 2.0, 4.0], 0.5, n_nodes=32)
    assert consecutive_differences(states) == [0.0, 0.0]


def test_sweep_single_level():
    assert len(cutoff_sweep(small(), KAC, [5.0], 0.1)) == 1


def test_sweep_rejects_decreasing_levels():
    with pytest.raises(ConfigError):
        cutoff_sweep(small(), KAC, [5.0, 2.0], 0.1)


def test_trajectory_diagnostics():
    run = wild_trajectory(small(datum="mixture"), kernel(), [0.0, 0.2, 0.4])
    d = run.diagnostics
    assert [s["t"] for s in d["snapshots"]] == [0.0, 0.2, 0.4]
    assert d["snapshots"][-1]["tail_bound"] <= 1e-8
    assert d["coefficients"]["max_origin_deviation"] == 0.0
    assert all(s.values[0] == 1.0 for s in run.states)
    with pytest.raises(ConfigError):
        wild_trajectory(small(), kernel(), [1.0, 0.5])
