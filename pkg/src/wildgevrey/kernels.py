"""Angular collision kernels, their cut-offs and the matching quadrature.

Two non-cut-off families are provided,

* ``kac_power``: ``b(theta) = A |cos theta| / |sin theta|**gamma`` on
  ``[-pi/2, pi/2]`` with ``1 < gamma < 3``,
* ``maxwell``: ``b(cos theta) = (1 - cos theta)**(-5/4)`` on the sphere,

plus a ``constant`` kernel (the original Kac model) that is useful for
checks where the cut-off must be inactive.

The cut-off kernel ``min(b, l)`` is integrated with composite Gauss-Legendre
panels: uniform panels on the flat part ``[0, theta_c]`` and geometrically
graded panels from the cut angle ``theta_c`` outward, where the kernel is
steep.  Quadrature weights already contain the angular measure, so every
collision integral is ``sum(weights * beta_values * integrand(nodes))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, optimize

from .errors import ConfigError, DomainError, ResolutionError
from .modes import Mode

PANEL_ORDER = 8
NORMALIZATION_TOL = 1e-10

_FAMILIES = ("kac_power", "maxwell", "constant")


@dataclass(frozen=True)
class KernelSpec:
    """Family and parameters of a non-cut-off angular kernel."""

    family: str
    gamma: float | None = None
    scale: float = 1.0
    constant_mode: Mode | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}")
        if self.family == "kac_power":
            if self.gamma is None or not 1.0 < self.gamma < 3.0:
                raise ConfigError(f"Kac exponent gamma must lie in (1, 3), got {self.gamma}")
        if not self.scale > 0:
            raise ConfigError("kernel scale must be positive")
        if self.family == "constant" and self.constant_mode is None:
            raise ConfigError("constant kernel needs a mode")

    @classmethod
    def kac_power(cls, gamma: float, scale: float = 1.0) -> "KernelSpec":
        return cls("kac_power", gamma=float(gamma), scale=float(scale))

    @classmethod
    def maxwell(cls) -> "KernelSpec":
        return cls("maxwell")

    @classmethod
    def constant(cls, value: float, mode) -> "KernelSpec":
        return cls("constant", scale=float(value), constant_mode=Mode.parse(mode))

    @property
    def mode(self) -> Mode:
        if self.family == "kac_power":
            return Mode.KAC
        if self.family == "maxwell":
            return Mode.BOLTZMANN
        return self.constant_mode

    @property
    def angle_range(self) -> tuple[float, float]:
        """Folded angular domain (the singular end is always 0)."""
        return (0.0, math.pi / 2) if self.mode is Mode.KAC else (0.0, math.pi)

    def measure(self, theta):
        """Density of the angular measure on the folded domain.

        Kac: the even integrand on [-pi/2, pi/2] is folded onto [0, pi/2],
        doubling the weight.  Boltzmann: ``dn = 2 pi sin(theta) dtheta``.
        """
        theta = np.asarray(theta, dtype=float)
        if self.mode is Mode.KAC:
            return np.full_like(theta, 2.0)
        return 2.0 * math.pi * np.sin(theta)

    def to_dict(self) -> dict:
        out = {"family": self.family, "scale": self.scale}
        if self.gamma is not None:
            out["gamma"] = self.gamma
        if self.constant_mode is not None:
            out["mode"] = self.constant_mode.value
        return out


def eval_kernel(spec: KernelSpec, angle):
    """Evaluate the non-cut-off kernel at deviation angle(s) ``angle``.

    Kac kernels accept ``angle`` in ``[-pi/2, pi/2]`` minus the origin, the
    Maxwell kernel accepts ``angle`` in ``(0, pi]``.  Hitting the singular
    point raises :class:`DomainError`.
    """
    theta = np.asarray(angle, dtype=float)
    scalar = theta.ndim == 0
    theta = np.atleast_1d(theta)
    if spec.mode is Mode.KAC:
        bad = (np.abs(theta) > math.pi / 2 + 1e-15) | ~np.isfinite(theta)
    else:
        bad = (theta < 0) | (theta > math.pi + 1e-15) | ~np.isfinite(theta)
    if spec.family != "constant":
        bad |= theta == 0.0
    if np.any(bad):
        raise DomainError(f"angle outside kernel domain: {theta[bad][:3]}")

    if spec.family == "kac_power":
        # |cos| clipped: cos(pi/2) rounds to 6e-17, not 0
        c = np.abs(np.cos(theta))
        c[np.abs(np.abs(theta) - math.pi / 2) < 1e-15] = 0.0
        out = spec.scale * c / np.abs(np.sin(theta)) ** spec.gamma
    elif spec.family == "maxwell":
        out = spec.scale * (1.0 - np.cos(theta)) ** (-1.25)
    else:
        out = np.full_like(theta, spec.scale)
    return float(out[0]) if scalar else out


def cut_angle(spec: KernelSpec, level: float) -> float:
    """Angle ``theta_c`` with ``b(theta) >= level`` exactly on ``(0, theta_c]``."""
    lo, hi = spec.angle_range
    if spec.family == "constant":
        return lo if level >= spec.scale else hi
    if spec.family == "maxwell":
        u = (level / spec.scale) ** (-0.8)
        return hi if u >= 2.0 else math.acos(1.0 - u)
    # cos/sin^gamma decreases from +inf to 0 on (0, pi/2]
    f = lambda t: eval_kernel(spec, t) - level
    a = 1e-300 ** (1.0 / spec.gamma)
    a = max(a, 1e-150)
    if f(a) <= 0:
        return a
    return optimize.brentq(f, a, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def _panel_edges(theta_c: float, lo: float, hi: float, n_panels: int) -> np.ndarray:
    if n_panels == 1 or theta_c <= lo or theta_c >= hi:
        return np.linspace(lo, hi, n_panels + 1)
    n_flat = max(1, n_panels // 4)
    n_graded = n_panels - n_flat
    flat = np.linspace(lo, theta_c, n_flat + 1)
    graded = theta_c * (hi / theta_c) ** (np.arange(n_graded + 1) / n_graded)
    graded[-1] = hi
    return np.concatenate([flat, graded[1:]])


def graded_rule(spec: KernelSpec, theta_c: float, n_nodes: int):
    """Composite Gauss-Legendre nodes and raw weights on the folded domain."""
    if n_nodes < 2:
        raise ConfigError("n_nodes must be at least 2")
    order = min(PANEL_ORDER, n_nodes)
    n_panels = max(1, n_nodes // order)
    lo, hi = spec.angle_range
    edges = _panel_edges(theta_c, lo, hi, n_panels)
    x, w = leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _cut_values(spec: KernelSpec, level: float, theta: np.ndarray, theta_c: float) -> np.ndarray:
    out = np.full_like(theta, float(level))
    outer = theta > theta_c
    if np.any(outer):
        out[outer] = np.minimum(eval_kernel(spec, theta[outer]), level)
    return out


def reference_bstar(spec: KernelSpec, level: float) -> float:
    """Total mass of ``min(b, level)`` by adaptive quadrature (independent of the rule)."""
    lo, hi = spec.angle_range
    theta_c = cut_angle(spec, level)
    inner = min(theta_c, hi) - lo
    total = level * (integrate.quad(lambda t: float(spec.measure(t)), lo, lo + inner,
                                    epsabs=0.0, epsrel=1e-13, limit=200)[0] if inner > 0 else 0.0)
    if theta_c < hi:
        g = lambda t: float(spec.measure(t)) * min(eval_kernel(spec, t), level)
        total += integrate.quad(g, theta_c, hi, epsabs=0.0, epsrel=1e-13, limit=400)[0]
    return total


@dataclass(frozen=True)
class CutoffKernel:
    """Normalised cut-off kernel ``beta_l = min(b, l) / b*_l`` with its quadrature."""

    spec: KernelSpec
    level: float
    bstar: float
    nodes: np.ndarray
    weights: np.ndarray
    beta_values: np.ndarray
    cut_angle: float
    reference_bstar: float
    normalization_residual: float
    _factors: tuple = field(default=None, repr=False, compare=False)

    @property
    def mode(self) -> Mode:
        return self.spec.mode

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def beta_weights(self) -> np.ndarray:
        """``weights * beta_values``; sums to one."""
        return self.weights * self.beta_values

    def mass(self) -> float:
        return float(np.sum(self.beta_weights))

    def split_factors(self) -> tuple[np.ndarray, np.ndarray]:
        """Radial scalings ``(c, s)`` of the two post-collisional frequencies.

        Boltzmann: ``|xi+| = |xi| cos(theta/2)``, ``|xi-| = |xi| sin(theta/2)``.
        Kac: ``xi cos(theta)`` and ``xi sin(theta)``.
        """
        return self._factors

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "level": self.level,
            "bstar": self.bstar,
            "reference_bstar": self.reference_bstar,
            "normalization_residual": self.normalization_residual,
            "cut_angle": self.cut_angle,
            "n_nodes": self.n_nodes,
        }


def build_cutoff(spec: KernelSpec, level: float, n_nodes: int = 64,
                 tol: float = NORMALIZATION_TOL) -> CutoffKernel:
    """Cut the kernel at ``level`` and normalise it to a probability measure.

    ``n_nodes`` is rounded down to a multiple of the panel order (8).  The
    quadrature value of ``b*_l`` is checked against adaptive quadrature;
    a relative mismatch above ``tol`` raises :class:`ResolutionError`.
    """
    level = float(level)
    if not level > 0 or not math.isfinite(level):
        raise ConfigError(f"cut-off level must be positive, got {level}")
    theta_c = cut_angle(spec, level)
    nodes, raw = graded_rule(spec, theta_c, int(n_nodes))
    weights = raw * spec.measure(nodes)
    bbar = _cut_values(spec, level, nodes, theta_c)
    bstar = float(np.sum(weights * bbar))
    ref = reference_bstar(spec, level)
    residual = abs(bstar / ref - 1.0)
    if residual > tol:
        raise ResolutionError(
            f"cut-off normalisation residual {residual:.2e} exceeds {tol:.0e}; "
            f"increase n_nodes (now {nodes.size})")
    beta = bbar / bstar
    if spec.mode is Mode.KAC:
        factors = (np.abs(np.cos(nodes)), np.abs(np.sin(nodes)))
    else:
        factors = (np.cos(0.5 * nodes), np.sin(0.5 * nodes))
    for arr in (nodes, weights, beta, *factors):
        arr.setflags(write=False)
    return CutoffKernel(spec, level, bstar, nodes, weights, beta, theta_c, ref, residual, factors)


def kernel_table(spec: KernelSpec, levels, n_nodes: int = 64) -> list[dict]:
    """Rows of ``(level, b*, reference, residual, cut angle)`` for a list of levels."""
    rows = []
    for level in levels:
        k = build_cutoff(spec, level, n_nodes)
        rows.append({
            "level": k.level,
            "bstar": k.bstar,
            "reference_bstar": k.reference_bstar,
            "residual": k.normalization_residual,
            "cut_angle": k.cut_angle,
            "n_nodes": k.n_nodes,
        })
    return rows
