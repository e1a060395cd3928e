"""Wild expansion of the cut-off equation in Fourier variables, plus an RK4 oracle.

For a normalised cut-off kernel ``beta_l`` the time-rescaled solution is

    phi(tau) = exp(-tau) * sum_k phi_k * (1 - exp(-tau))**k,
    phi_{k+1}(r) = 1/(k+1) sum_j  int phi_j(r c) phi_{k-j}(r s) beta_l,

with ``tau = b*_l t`` and ``(c, s)`` the radial splitting factors of the
kernel.  Because ``1 - exp(-tau)`` approaches 1 for large ``tau``, a single
series would need ``O(exp(tau))`` terms; :func:`wild_trajectory` therefore
advances in stages of length at most ``max_stage_tau``, restarting the series
from the assembled state at the end of every stage (the flow is a semigroup,
so this is exact up to truncation).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NormalizationError, ResolutionError, TruncationError
from .kernels import CutoffKernel, KernelSpec, build_cutoff
from .spectral import SpectralGrid, SpectralState, interpolate

COEFF_TOL = 1e-10
DEFAULT_ACCURACY = 1e-8
DEFAULT_MAX_ORDER = 200
MAX_STAGE_TAU = 0.5
# RK4 step in the rescaled time tau; far inside the stability region (|z| < 2.78)
ODE_DTAU = 0.05


def _split_tables(values: np.ndarray, grid: SpectralGrid, kernel: CutoffKernel):
    """Values of one coefficient at ``r_i c_q`` and ``r_i s_q`` (shape ``M x Q``)."""
    c, s = kernel.split_factors()
    r = grid.nodes[:, None]
    rc, rs = r * c[None, :], r * s[None, :]
    # collision geometry never leaves the grid: c, s <= 1
    assert rc.max() <= grid.r_max and rs.max() <= grid.r_max
    st = SpectralState(grid, values, validate=False)
    return interpolate(st, rc), interpolate(st, rs)


@dataclass(frozen=True)
class WildSeries:
    """Coefficients ``phi_0 .. phi_N`` of the Wild expansion on a fixed grid."""

    grid: SpectralGrid
    coefficients: tuple
    kernel: CutoffKernel
    _tables: tuple = field(default=(), repr=False, compare=False)

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def coefficient_stats(self) -> dict:
        """Worst-case deviations from ``phi_k(0) = 1`` and ``|phi_k| <= 1``."""
        origin = max(abs(c[0] - 1.0) for c in self.coefficients)
        sup = max(float(np.max(np.abs(c))) for c in self.coefficients)
        return {"n_coefficients": len(self.coefficients), "max_origin_deviation": origin,
                "max_sup": sup}


def _check_coefficient(values: np.ndarray, k: int):
    if values[0] != 1.0:
        raise NormalizationError(f"coefficient {k} has value {values[0]!r} at the origin")
    peak = float(np.max(np.abs(values)))
    if peak > 1.0 + COEFF_TOL:
        raise ResolutionError(
            f"coefficient {k} reaches |phi| = {peak:.12g} > 1; refine the grid or quadrature")


def wild_init(f0hat: SpectralState, kernel: CutoffKernel) -> WildSeries:
    """Series holding only ``phi_0 = f0hat``."""
    if f0hat.mode is not kernel.mode:
        raise ConfigError(f"datum mode {f0hat.mode.value} does not match kernel mode {kernel.mode.value}")
    if f0hat.values[0] != 1.0:
        raise NormalizationError(f"datum has f(0) = {f0hat.values[0]!r}, expected 1")
    v = f0hat.values
    _check_coefficient(v, 0)
    return WildSeries(f0hat.grid, (v,), kernel, (_split_tables(v, f0hat.grid, kernel),))


def wild_extend(series: WildSeries) -> WildSeries:
    """Append ``phi_{k+1}`` computed from the collision-weighted convolution."""
    k = series.order
    wb = series.kernel.beta_weights
    tabs = series._tables
    acc = np.zeros_like(tabs[0][0])
    for j in range(k + 1):
        acc += tabs[j][0] * tabs[k - j][1]
    new = (acc @ wb) / (k + 1)
    # r = 0 integrates 1 * 1 against a unit-mass rule
    new[0] = 1.0
    _check_coefficient(new, k + 1)
    new.setflags(write=False)
    return WildSeries(series.grid, series.coefficients + (new,), series.kernel,
                      tabs + (_split_tables(new, series.grid, series.kernel),))


def tail_bound(tau: float, order: int) -> float:
    """``(1 - exp(-tau))**(order + 1)``: sup bound on the dropped terms."""
    return (-math.expm1(-tau)) ** (order + 1)


def required_order(tau: float, accuracy: float) -> int:
    """Smallest ``N`` with ``(1 - exp(-tau))**(N+1) <= accuracy``."""
    if not 0 < accuracy < 1:
        raise ConfigError("accuracy must lie in (0, 1)")
    q = -math.expm1(-tau)
    if q <= 0.0:
        return 0
    n = max(0, math.ceil(math.log(accuracy) / math.log(q)) - 1)
    while tail_bound(tau, n) > accuracy:
        n += 1
    return n


def assemble(series: WildSeries, tau: float, order: int | None = None,
             accuracy: float | None = None, time_label: float | None = None):
    """Sum the series at rescaled time ``tau``.

    Returns ``(state, tail)`` where ``tail = (1 - exp(-tau))**(N+1)`` bounds
    the dropped terms.  The truncated sum is divided by its total weight
    ``1 - tail`` (the dropped mass is redistributed proportionally), which
    makes the value at ``r = 0`` exactly 1.
    """
    if tau < 0:
        raise ConfigError("tau must be nonnegative")
    n = series.order if order is None else int(order)
    if not 0 <= n <= series.order:
        raise ConfigError(f"order {n} not available (series has {series.order})")
    tail = tail_bound(tau, n)
    if accuracy is not None and tail > accuracy:
        need = required_order(tau, accuracy)
        raise TruncationError(f"tail bound {tail:.3e} exceeds {accuracy:.1e}; need order {need}")
    q = -math.expm1(-tau)
    w = math.exp(-tau) * q ** np.arange(n + 1)
    out = np.tensordot(w, np.asarray(series.coefficients[: n + 1]), axes=1) / w.sum()
    out[0] = 1.0
    np.clip(out, -1.0, 1.0, out=out)
    return SpectralState(series.grid, out, tau if time_label is None else time_label), tail


def _stage_plan(taus, max_stage_tau: float):
    """Stage end points covering every snapshot ``tau`` exactly."""
    ends, marks, prev = [], [], 0.0
    for tau in taus:
        span = tau - prev
        n = max(1, math.ceil(span / max_stage_tau - 1e-12)) if span > 0 else 0
        ends.extend(prev + span * (i + 1) / n for i in range(n))
        if n:
            ends[-1] = tau
        marks.append(len(ends))
        prev = tau
    return ends, marks


@dataclass
class WildRun:
    """Snapshots of a staged Wild solve and its diagnostics."""

    states: list
    diagnostics: dict


def wild_trajectory(f0hat: SpectralState, kernel: CutoffKernel, times,
                    accuracy: float = DEFAULT_ACCURACY, max_order: int = DEFAULT_MAX_ORDER,
                    max_stage_tau: float = MAX_STAGE_TAU) -> WildRun:
    """Wild solutions at each physical time in ``times`` (nondecreasing)."""
    times = [float(t) for t in times]
    if any(t < 0 for t in times) or any(b < a for a, b in zip(times, times[1:])):
        raise ConfigError("snapshot times must be nonnegative and nondecreasing")
    if not max_stage_tau > 0:
        raise ConfigError("max_stage_tau must be positive")
    taus = [kernel.bstar * t for t in times]
    ends, marks = _stage_plan(taus, max_stage_tau)
    n_stages = max(1, len(ends))
    stage_acc = accuracy / n_stages

    state = SpectralState(f0hat.grid, f0hat.values, 0.0)
    wild_init(state, kernel)  # validates datum and mode
    stage_states = [state]
    total_tail, tails, orders = 0.0, [], []
    stats = {"n_coefficients": 0, "max_origin_deviation": 0.0, "max_sup": 0.0}
    prev = 0.0
    for end in ends:
        dtau = end - prev
        n = required_order(dtau, stage_acc)
        if n > max_order:
            raise TruncationError(
                f"stage needs order {n} > cap {max_order}; lower max_stage_tau or raise the cap")
        series = wild_init(state, kernel)
        for _ in range(n):
            series = wild_extend(series)
        state, tail = assemble(series, dtau, accuracy=stage_acc)
        s = series.coefficient_stats()
        stats["n_coefficients"] += s["n_coefficients"]
        stats["max_origin_deviation"] = max(stats["max_origin_deviation"], s["max_origin_deviation"])
        stats["max_sup"] = max(stats["max_sup"], s["max_sup"])
        total_tail += tail
        tails.append(total_tail)
        orders.append(n)
        stage_states.append(state)
        prev = end

    out, snap = [], []
    for t, tau, m in zip(times, taus, marks):
        st = stage_states[m]
        out.append(SpectralState(st.grid, st.values, t))
        snap.append({"t": t, "tau": tau, "stages": m,
                     "tail_bound": tails[m - 1] if m else 0.0})
    diagnostics = {
        "bstar": kernel.bstar,
        "accuracy": accuracy,
        "max_stage_tau": max_stage_tau,
        "n_stages": len(ends),
        "max_order": max(orders, default=0),
        "snapshots": snap,
        "coefficients": stats,
    }
    return WildRun(out, diagnostics)


def solve_wild(f0hat: SpectralState, kernel: CutoffKernel, t: float,
               accuracy: float = DEFAULT_ACCURACY, max_order: int = DEFAULT_MAX_ORDER,
               max_stage_tau: float = MAX_STAGE_TAU) -> SpectralState:
    """Wild solution at physical time ``t`` (``tau = b*_l t``)."""
    return wild_trajectory(f0hat, kernel, [t], accuracy, max_order, max_stage_tau).states[0]


def gain_term(state: SpectralState, kernel: CutoffKernel) -> np.ndarray:
    """``int f(r c) f(r s) beta_l`` at every node."""
    a, b = _split_tables(state.values, state.grid, kernel)
    return (a * b) @ kernel.beta_weights


def stable_dt(kernel: CutoffKernel, dtau: float = ODE_DTAU) -> float:
    """Physical RK4 step with ``b*_l dt = dtau``."""
    return dtau / kernel.bstar


def ode_trajectory(f0hat: SpectralState, kernel: CutoffKernel, times, dt: float | None = None,
                   tol: float = COEFF_TOL) -> list[SpectralState]:
    """Classical RK4 for ``d/dt f = b*_l (Q+(f, f) - f f(0))`` on the grid.

    Each interval between snapshot times is split into equal steps no longer
    than ``dt`` (default :func:`stable_dt`).  The origin is not pinned: it
    stays at 1 because the right-hand side vanishes there.
    """
    if f0hat.mode is not kernel.mode:
        raise ConfigError("datum and kernel modes differ")
    dt = stable_dt(kernel) if dt is None else float(dt)
    if not dt > 0:
        raise ConfigError("dt must be positive")
    grid, b = f0hat.grid, kernel.bstar

    def rhs(v):
        st = SpectralState(grid, v, validate=False)
        return b * (gain_term(st, kernel) - v * v[0])

    v = np.array(f0hat.values)
    out, now = [], 0.0
    for t in times:
        t = float(t)
        if t < now:
            raise ConfigError("snapshot times must be nondecreasing")
        n = math.ceil((t - now) / dt - 1e-12) if t > now else 0
        h = (t - now) / n if n else 0.0
        for _ in range(n):
            k1 = rhs(v)
            k2 = rhs(v + 0.5 * h * k1)
            k3 = rhs(v + 0.5 * h * k2)
            k4 = rhs(v + h * k3)
            v = v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > 1.0 + tol:
                raise ResolutionError(f"RK4 step {h:.3e} unstable (sup {np.max(np.abs(v)):.6g}); "
                                      "use a smaller dt")
        now = t
        out.append(SpectralState(grid, v, t, validate=False))
    return out


def solve_ode(f0hat: SpectralState, kernel: CutoffKernel, t: float,
              dt: float | None = None) -> SpectralState:
    return ode_trajectory(f0hat, kernel, [t], dt)[0]


def sup_difference(a: SpectralState, b: SpectralState, r_window: float | None = None) -> float:
    if a.grid != b.grid:
        raise ConfigError("states live on different grids")
    mask = slice(None) if r_window is None else a.grid.nodes <= r_window
    return float(np.max(np.abs(a.values[mask] - b.values[mask])))


def cutoff_sweep(f0hat: SpectralState, spec: KernelSpec, levels, t: float,
                 n_nodes: int = 64, accuracy: float = DEFAULT_ACCURACY,
                 **kwargs) -> list[SpectralState]:
    """Wild solutions at time ``t`` for each cut-off level in ``levels``."""
    levels = [float(l) for l in levels]
    if any(b < a for a, b in zip(levels, levels[1:])):
        raise ConfigError("cut-off levels must be nondecreasing")
    return [solve_wild(f0hat, build_cutoff(spec, l, n_nodes), t, accuracy, **kwargs) for l in levels]


def consecutive_differences(states, r_window: float = 8.0) -> list[float]:
    """Sup differences between neighbouring states on ``[0, r_window]``."""
    return [sup_difference(a, b, r_window) for a, b in zip(states, states[1:])]
