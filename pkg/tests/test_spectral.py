import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from wildgevrey import (ConfigError, DomainError, GevreyEnvelope, Mode, NormalizationError,
                        PsiFunction, SpectralState, interpolate, make_grid, weighted_sup)
from wildgevrey.spectral import MonotoneCubic, SpectralGrid, read_states_csv, write_states_csv


def test_uniform_grid_example():
    g = make_grid(Mode.KAC, 1.0, 8)
    assert np.allclose(g.nodes, np.arange(8) / 7)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 1.0


def test_default_sized_grid():
    g = make_grid(Mode.BOLTZMANN, 16.0, 257)
    assert g.size == 257 and g.r_max == 16.0


def test_geometric_ratio_constant():
    g = make_grid(Mode.KAC, 10.0, 40, spacing="geometric", r_first=0.01)
    ratio = g.nodes[2:] / g.nodes[1:-1]
    assert np.allclose(ratio, ratio[0], rtol=1e-12)


@pytest.mark.parametrize("kw", [dict(M=7), dict(r_max=0.0), dict(spacing="chebyshev")])
def test_bad_grid(kw):
    with pytest.raises(ConfigError):
        make_grid(Mode.KAC, **{"r_max": 1.0, "M": 9, **kw})


def test_grid_invariants():
    with pytest.raises(ConfigError):
        SpectralGrid(Mode.KAC, np.array([0.1, 0.2, 0.3]))
    with pytest.raises(ConfigError):
        SpectralGrid(Mode.KAC, np.array([0.0, 0.2, 0.2]))


def gaussian_state(M=257, r_max=16.0, mode=Mode.KAC):
    g = make_grid(mode, r_max, M)
    return SpectralState(g, np.exp(-0.5 * g.nodes ** 2))


def test_state_invariants():
    g = make_grid(Mode.KAC, 4.0, 9)
    with pytest.raises(NormalizationError):
        SpectralState(g, np.full(9, 0.5))
    with pytest.raises(NormalizationError):
        SpectralState(g, np.r_[1.0, np.full(8, 1.1)])
    st_ = gaussian_state()
    with pytest.raises(ValueError):
        st_.values[3] = 0.0


def test_nodal_exactness():
    s = gaussian_state()
    for scheme in ("log", "direct"):
        assert np.array_equal(interpolate(s, s.grid.nodes, scheme), s.values) or \
            np.max(np.abs(interpolate(s, s.grid.nodes, scheme) - s.values)) <= 2e-16


def test_constant_reproduced():
    g = make_grid(Mode.KAC, 5.0, 33)
    s = SpectralState(g, np.ones(33))
    q = np.linspace(0, 5, 1001)
    assert np.allclose(interpolate(s, q), 1.0, atol=1e-15)
    assert np.allclose(interpolate(s, q, "direct"), 1.0, atol=1e-15)


def test_gaussian_off_grid():
    s = gaussian_state()
    assert abs(interpolate(s, 0.3) - math.exp(-0.045)) <= 1e-6


def test_out_of_range():
    s = gaussian_state()
    with pytest.raises(DomainError):
        interpolate(s, 16.5)
    with pytest.raises(DomainError):
        interpolate(s, -0.1)


def test_direct_scheme_convergence_order():
    errs = []
    q = np.linspace(0, 8, 20001)
    for M in (65, 129, 257, 513):
        s = gaussian_state(M, 8.0)
        errs.append(np.max(np.abs(interpolate(s, q, "direct") - np.exp(-q * q / 2))))
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(rates) > 3.5


def test_log_scheme_exact_for_gaussian():
    s = gaussian_state()
    q = np.linspace(0, 16, 5001)
    assert np.max(np.abs(interpolate(s, q) - np.exp(-q * q / 2))) <= 1e-15


@settings(max_examples=60, deadline=None)
@given(arrays(float, 12, elements=st.floats(-1, 1)), st.integers(0, 2**31 - 1))
def test_interpolant_stays_between_neighbours(vals, seed):
    vals[0] = 1.0
    g = make_grid(Mode.KAC, 3.0, 12)
    s = SpectralState(g, vals)
    q = np.random.default_rng(seed).uniform(0, 3.0, 400)
    out = interpolate(s, q)
    i = np.clip(np.searchsorted(g.nodes, q, side="right") - 1, 0, 10)
    lo = np.minimum(vals[i], vals[i + 1])
    hi = np.maximum(vals[i], vals[i + 1])
    assert np.all(out >= lo - 1e-14) and np.all(out <= hi + 1e-14)
    assert np.max(np.abs(out)) <= np.max(np.abs(vals)) + 1e-14


@settings(max_examples=30, deadline=None)
@given(arrays(float, 10, elements=st.floats(1e-6, 1)))
def test_log_scheme_bounded(vals):
    vals[0] = 1.0
    g = make_grid(Mode.KAC, 2.0, 10)
    s = SpectralState(g, vals)
    assert s.scheme == "log"
    out = interpolate(s, np.linspace(0, 2, 301))
    assert np.all(out <= 1 + 1e-14) and np.all(out > 0)


def test_monotone_cubic_monotone_data():
    x = np.linspace(0, 1, 9)
    y = np.r_[0, 0, 0, 0.1, 0.9, 1, 1, 1, 1]
    f = MonotoneCubic(x, y)
    v = f(np.linspace(0, 1, 1001))
    assert np.all(np.diff(v) >= -1e-15)


def test_weighted_sup_examples():
    g = make_grid(Mode.KAC, 1.0, 65)
    s = SpectralState(g, np.exp(-0.5 * g.nodes ** 2))
    env = GevreyEnvelope(0.25, 2.0, PsiFunction.power(2.0))
    assert weighted_sup(s, env) == 1.0
    spike = SpectralState(g, np.r_[1.0, np.zeros(64)])
    assert weighted_sup(spike, env) == 1.0


@settings(max_examples=20, deadline=None)
@given(arrays(float, 17, elements=st.floats(-1, 1, allow_subnormal=True)), st.floats(0, 100))
def test_csv_roundtrip_bit_exact(tmp_path_factory, vals, t):
    vals[0] = 1.0
    g = make_grid(Mode.BOLTZMANN, 7.3, 17)
    states = [SpectralState(g, vals, t), SpectralState(g, np.r_[1.0, -vals[1:]], t + 1)]
    path = tmp_path_factory.mktemp("csv") / "s.csv"
    write_states_csv(path, states, {"note": "x"})
    back = read_states_csv(path)
    assert len(back) == 2
    for a, b in zip(states, back):
        assert np.array_equal(a.values, b.values) and np.array_equal(a.grid.nodes, b.grid.nodes)
        assert a.time_label == b.time_label and b.mode is Mode.BOLTZMANN


def test_csv_format(tmp_path):
    s = gaussian_state(9, 1.0)
    path = write_states_csv(tmp_path / "g.csv", [s], {"config": {"a": 1}})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# {") and '"config"' in lines[0]
    assert lines[1] == "r,value,time_label"
    assert lines[3].split(",")[0] == f"{0.125:.17g}"
