"""Initial data in Fourier form and fitting of their decay rate.

All data are normalised to unit mass and canonical second moment
(1 for the Kac model, 3 for radial 3D data).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .errors import ConfigError, ResolutionError
from .modes import Mode
from .spectral import SpectralGrid, SpectralState

BUMP_ORDER = 16
TRANSFORM_TOL = 1e-14
MAX_PANELS = 1 << 14
DEFAULT_S_GRID = tuple(np.round(np.arange(0.05, 2.0001, 0.01), 10))
FIT_FLOOR = 1e-13
TAIL_FRACTION = 0.5
_KINDS = ("gaussian", "mixture", "bump")


@dataclass(frozen=True)
class DatumSpec:
    """Description of an initial datum.

    ``mixture`` components are centred Gaussians with per-direction variances
    ``variances`` and weights ``weights``; the velocity is rescaled so that the
    weighted mean variance is 1.  ``bump`` is the compactly supported density
    ``exp(-(radius + v)**d - (radius - v)**d)`` on ``|v| < radius`` with
    ``d = 1/(1 - nu)`` (Kac mode only).
    """

    kind: str
    mode: Mode = Mode.KAC
    weights: tuple = ()
    variances: tuple = ()
    radius: float = 1.0
    nu: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown datum kind {self.kind!r}")
        if self.kind == "mixture":
            w = np.asarray(self.weights, dtype=float)
            v = np.asarray(self.variances, dtype=float)
            if w.size == 0 or w.shape != v.shape:
                raise ConfigError("mixture needs matching weights and variances")
            if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ConfigError("mixture weights must be positive and sum to 1")
            if np.any(v <= 0):
                raise ConfigError("mixture variances must be positive")
            object.__setattr__(self, "weights", tuple(map(float, w)))
            object.__setattr__(self, "variances", tuple(map(float, v)))
        if self.kind == "bump":
            if not self.nu > 1:
                raise ConfigError("bump needs nu > 1")
            if not self.radius > 0:
                raise ConfigError("bump radius must be positive")
            if self.mode is not Mode.KAC:
                raise ConfigError("the bump datum is available in Kac mode only")

    @classmethod
    def gaussian(cls, mode=Mode.KAC) -> "DatumSpec":
        return cls("gaussian", mode)

    @classmethod
    def mixture(cls, weights=(0.5, 0.5), variances=(0.5, 1.5), mode=Mode.KAC) -> "DatumSpec":
        return cls("mixture", mode, tuple(weights), tuple(variances))

    @classmethod
    def bump(cls, radius: float = 1.0, nu: float = 2.0) -> "DatumSpec":
        return cls("bump", Mode.KAC, radius=float(radius), nu=float(nu))

    @property
    def normalized_variances(self) -> np.ndarray:
        w, v = np.asarray(self.weights), np.asarray(self.variances)
        return v / np.dot(w, v)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "mode": self.mode.value}
        if self.kind == "mixture":
            out.update(weights=list(self.weights), variances=list(self.variances))
        if self.kind == "bump":
            out.update(radius=self.radius, nu=self.nu)
        return out


def bump_profile(x, radius: float, nu: float):
    """Unnormalised bump ``exp(-(radius + x)^d - (radius - x)^d)``, zero outside."""
    x = np.asarray(x, dtype=float)
    d = 1.0 / (1.0 - nu)
    out = np.zeros_like(x)
    inside = np.abs(x) < radius
    with np.errstate(over="ignore", divide="ignore"):
        out[inside] = np.exp(-(radius + x[inside]) ** d - (radius - x[inside]) ** d)
    return out


def _composite_rule(radius: float, panels: int):
    g, w = leggauss(BUMP_ORDER)
    edges = np.linspace(0.0, radius, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * g).ravel(), (half[:, None] * w).ravel()


def _bump_scale(radius: float, nu: float, panels: int = 2048):
    x, w = _composite_rule(radius, panels)
    f = bump_profile(x, radius, nu)
    m0 = 2.0 * np.dot(w, f)
    m2 = 2.0 * np.dot(w, f * x * x)
    return m0, math.sqrt(m2 / m0)


def _bump_transform(r: np.ndarray, radius: float, nu: float, panels: int, m0: float, sigma: float):
    x, w = _composite_rule(radius, panels)
    wf = 2.0 * w * bump_profile(x, radius, nu) / m0
    keep = wf > 0
    x, wf = x[keep] / sigma, wf[keep]
    out = np.empty_like(r)
    step = max(1, 4_000_000 // max(x.size, 1))
    for i in range(0, r.size, step):
        out[i:i + step] = np.cos(np.outer(r[i:i + step], x)) @ wf
    return out


def bump_transform(r, radius: float = 1.0, nu: float = 2.0, tol: float = TRANSFORM_TOL):
    """Cosine transform of the unit-variance, unit-mass bump at radii ``r``.

    The composite Gauss-Legendre rule starts with at least 8 points per
    oscillation at the largest radius and is doubled until two successive
    results agree to ``tol``; otherwise :class:`ResolutionError`.
    """
    r = np.asarray(r, dtype=float)
    m0, sigma = _bump_scale(radius, nu)
    periods = float(np.max(r, initial=0.0)) * radius / (2 * math.pi * sigma)
    panels = max(64, math.ceil(8 * periods / BUMP_ORDER))
    prev = _bump_transform(r, radius, nu, panels, m0, sigma)
    while panels < MAX_PANELS:
        panels *= 2
        cur = _bump_transform(r, radius, nu, panels, m0, sigma)
        if np.max(np.abs(cur - prev)) <= tol:
            return cur
        prev = cur
    raise ResolutionError(f"bump transform not resolved with {panels} panels")


def realize(spec: DatumSpec, grid: SpectralGrid) -> SpectralState:
    """Sample the Fourier transform of ``spec`` on ``grid``."""
    if spec.mode is not grid.mode:
        raise ConfigError(f"datum mode {spec.mode.value} does not match grid mode {grid.mode.value}")
    r = grid.nodes
    if spec.kind == "gaussian":
        values = np.exp(-0.5 * r * r)
    elif spec.kind == "mixture":
        w, v = np.asarray(spec.weights), spec.normalized_variances
        values = np.exp(-0.5 * np.outer(r * r, v)) @ w
    else:
        values = bump_transform(r, spec.radius, spec.nu)
    values[0] = 1.0
    np.clip(values, -1.0, 1.0, out=values)
    return SpectralState(grid, values, 0.0)


def velocity_density(spec: DatumSpec, v):
    """Normalised velocity density (radial profile in 3D) of ``spec``."""
    v = np.asarray(v, dtype=float)
    dim = 1 if spec.mode is Mode.KAC else 3
    if spec.kind == "gaussian":
        return np.exp(-0.5 * v * v) / (2 * math.pi) ** (dim / 2)
    if spec.kind == "mixture":
        out = np.zeros_like(v)
        for w, s2 in zip(spec.weights, spec.normalized_variances):
            out += w * np.exp(-0.5 * v * v / s2) / (2 * math.pi * s2) ** (dim / 2)
        return out
    m0, sigma = _bump_scale(spec.radius, spec.nu)
    return sigma * bump_profile(sigma * v, spec.radius, spec.nu) / m0


def velocity_moments(spec: DatumSpec) -> tuple[float, float]:
    """``(mass, second moment)`` by adaptive quadrature in velocity space."""
    if spec.mode is Mode.KAC:
        shell = lambda v: 2.0
    else:
        shell = lambda v: 4 * math.pi * v * v
    if spec.kind == "bump":
        _, sigma = _bump_scale(spec.radius, spec.nu)
        hi = spec.radius / sigma
    else:
        hi = 40.0 * math.sqrt(max(spec.normalized_variances, default=1.0)) if spec.kind == "mixture" else 40.0
    f = lambda v: shell(v) * float(velocity_density(spec, v))
    kw = dict(epsabs=0.0, epsrel=1e-13, limit=400)
    mass = integrate.quad(f, 0.0, hi, **kw)[0]
    m2 = integrate.quad(lambda v: v * v * f(v), 0.0, hi, **kw)[0]
    return mass, m2


@dataclass(frozen=True)
class DecayFit:
    """Majorant ``|f(r)| <= K1 exp(-K2 r^s)``, valid at every node it was lifted on."""

    K1: float
    K2: float
    s: float
    residual: float
    window: tuple = (0.0, 0.0)

    def bound(self, r):
        return self.K1 * np.exp(-self.K2 * np.asarray(r, dtype=float) ** self.s)

    def lifted(self, state: SpectralState) -> "DecayFit":
        """Same ``(K2, s)`` with ``K1`` raised so the bound also holds on ``state``."""
        K1 = max(self.K1, _lift(state, self.K2, self.s))
        return DecayFit(K1, self.K2, self.s, self.residual, self.window)

    def to_dict(self) -> dict:
        return {"K1": self.K1, "K2": self.K2, "s": self.s, "residual": self.residual,
                "window": list(self.window)}


def _log_abs(values):
    a = np.abs(values)
    out = np.full(a.shape, -np.inf)
    out[a > 0] = np.log(a[a > 0])
    return out


def _lift(state: SpectralState, K2: float, s: float) -> float:
    return float(np.exp(np.max(_log_abs(state.values) + K2 * state.grid.nodes ** s)))


def fit_window(state: SpectralState, floor: float = FIT_FLOOR,
               tail_fraction: float = TAIL_FRACTION) -> np.ndarray:
    """Boolean mask of tail nodes used to fit the decay rate.

    Nodes are resolvable when ``|f| > floor * max|f|``; the window starts past
    the first node with ``|f| <= 1/e`` and at ``r >= tail_fraction * r_last``,
    where ``r_last`` is the last resolvable node.
    """
    r, a = state.grid.nodes, np.abs(state.values)
    resolvable = a > floor * a.max()
    core = np.nonzero(a <= math.exp(-1.0))[0]
    if core.size == 0 or not np.any(resolvable[core[0]:]):
        raise ResolutionError("no resolvable tail: extend r_max")
    last = np.nonzero(resolvable)[0][-1]
    r_lo = max(r[core[0]], tail_fraction * r[last])
    idx = np.arange(r.size)
    win = resolvable & (r >= r_lo) & (idx <= last)
    if np.count_nonzero(win) < 2:
        raise ResolutionError("fewer than two resolvable tail nodes for the decay fit")
    return win


def fit_decay(state: SpectralState, s_grid=DEFAULT_S_GRID, floor: float = FIT_FLOOR,
              tail_fraction: float = TAIL_FRACTION) -> DecayFit:
    """Fit ``|f(r)| <= K1 exp(-K2 r^s)``.

    On the tail window the upper envelope of ``log|f|`` (local maxima of
    ``|f|``, or every window node for non-oscillating data) is regressed on
    ``r^s`` to give ``K2``; ``K1`` is then raised until the bound holds at
    every node, so the result is a certified majorant.  The residual is the
    mean gap between the lifted bound and the envelope samples, and the ``s``
    with the smallest residual wins.
    """
    win = fit_window(state, floor, tail_fraction)
    r, a = state.grid.nodes, np.abs(state.values)
    peak = np.zeros(a.size, bool)
    peak[1:-1] = (a[1:-1] >= a[:-2]) & (a[1:-1] >= a[2:])
    E = win & peak
    if np.count_nonzero(E) < 3:
        E = win
    la = _log_abs(state.values)
    best = None
    for s in s_grid:
        s = float(s)
        x = r[E] ** s
        slope = np.polyfit(x, la[E], 1)[0]
        K2 = -slope
        if not K2 > 0:
            continue
        g = la[E] + K2 * x
        residual = float(np.mean(g.max() - g))
        if best is None or residual < best[0]:
            best = (residual, s, K2)
    if best is None:
        raise ResolutionError("data do not decay on the fit window")
    residual, s, K2 = best
    K1 = max(1.0, _lift(state, K2, s))
    K2 = float(K2)
    rw = r[win]
    return DecayFit(K1, K2, s, residual, (float(rw[0]), float(rw[-1])))
