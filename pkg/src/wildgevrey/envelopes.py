"""Gevrey envelopes ``H(r)`` for Fourier data and their certification.

An envelope is ``H(r) = K r**2`` for ``r < R0`` and ``H(r) = K psi(r**2)``
beyond, where ``psi`` is a slowly growing profile.  The data-dependent
constants are obtained by direct scans of the sampled transform:

* ``rho, K_tilde`` -- radius up to which ``|f| <= exp(-K_tilde r^2)``,
* ``K4`` -- Gaussian-type bound on the band ``[rho, R0]``,
* ``eta, K3`` -- radius beyond which a decay hypothesis
  ``|f| <= K1 exp(-K2 psi(r^2))`` dominates ``exp(K3 psi(r^2))``,

and ``K = min(K_tilde, K3, K4)``.  The inequality
``H(r) <= H(r cos a) + H(r sin a)`` is what makes such an envelope survive
collisions; :func:`check_subadditivity` samples it directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EnvelopeError
from .spectral import SpectralState, weighted_sup

K_TILDE = 0.25
K3_RATIO = 0.5
CERT_SLACK = 1e-8
SUBADDITIVITY_TOL = 1e-12
# sample range used when scanning psi numerically (in the radius r = sqrt(t))
_SCAN_R = (1e-3, 1e4)
_SCAN_N = 200_001


@dataclass(frozen=True)
class PsiFunction:
    """Growth profile ``psi(t)`` used beyond ``R0`` (``t = r**2``).

    kind ``"power"``: ``psi(t) = t**(s/2)``, so ``psi(r^2) = r^s``;
    kind ``"sqrtlog"``: ``psi(t) = sqrt(t) |log t| / 2``;
    kind ``"custom"``: piecewise-linear through ``table = (t_i, psi_i)``.
    """

    kind: str
    s: float | None = None
    table: tuple | None = field(default=None, repr=False)
    concavity_checked: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.kind == "power":
            if self.s is None or not 0.0 < self.s <= 2.0:
                raise ConfigError(f"power psi needs s in (0, 2], got {self.s}")
        elif self.kind == "custom":
            t, p = (np.asarray(a, dtype=float) for a in self.table)
            if t.size < 3 or t[0] != 0.0 or p[0] != 0.0 or np.any(np.diff(t) <= 0):
                raise ConfigError("custom psi table must start at (0, 0) with increasing t")
        elif self.kind != "sqrtlog":
            raise ConfigError(f"unknown psi kind {self.kind!r}")
        object.__setattr__(self, "concavity_checked", self._check_shape())

    @classmethod
    def power(cls, s: float) -> "PsiFunction":
        return cls("power", s=float(s))

    @classmethod
    def sqrtlog(cls) -> "PsiFunction":
        return cls("sqrtlog")

    @classmethod
    def custom(cls, t, values) -> "PsiFunction":
        return cls("custom", table=(tuple(map(float, t)), tuple(map(float, values))))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "power":
            return t ** (0.5 * self.s)
        if self.kind == "sqrtlog":
            with np.errstate(divide="ignore", invalid="ignore"):
                out = 0.5 * np.sqrt(t) * np.abs(np.log(t))
            return np.where(t > 0, out, 0.0)
        tt, pp = (np.asarray(a) for a in self.table)
        slope = (pp[-1] - pp[-2]) / (tt[-1] - tt[-2])
        return np.where(t <= tt[-1], np.interp(t, tt, pp), pp[-1] + slope * (t - tt[-1]))

    def of_radius(self, r):
        """``psi(r**2)``, computed without squaring for the power kind."""
        r = np.asarray(r, dtype=float)
        if self.kind == "power":
            return r ** self.s
        if self.kind == "sqrtlog":
            with np.errstate(divide="ignore", invalid="ignore"):
                out = r * np.abs(np.log(r))
            return np.where(r > 0, out, 0.0)
        return self(r * r)

    @property
    def threshold_radius(self) -> float:
        """Smallest radius ``R`` with ``psi(t) <= t`` and ``psi(t)/t`` nonincreasing for ``t >= R^2``."""
        if self.kind == "power":
            return 1.0
        if self.kind == "sqrtlog":
            # psi(t)/t = log(t)/(2 sqrt t) decreases once log t >= 2
            return math.e
        return _detect_threshold(self)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "threshold_radius": self.threshold_radius,
               "concavity_checked": self.concavity_checked}
        if self.s is not None:
            out["s"] = self.s
        return out

    def _check_shape(self) -> bool:
        """Sampled checks of the structural properties the envelope relies on."""
        r0 = self.threshold_radius
        r = np.geomspace(r0, 1e3 * max(r0, 1.0), 4001)
        t = r * r
        p = self(t)
        if np.any(np.diff(p) < -1e-12 * p[1:]):
            raise ConfigError("psi must be nondecreasing beyond its threshold")
        if np.any(p > t * (1 + 1e-12)):
            raise ConfigError("psi(t) <= t fails beyond the threshold")
        if self.kind != "power" and not p[-1] > 10 * max(p[0], 1e-300):
            raise ConfigError("psi does not grow on the sampled range")
        if self.kind == "sqrtlog":
            # scaling property psi(lam^2 t) >= lam^2 psi(t) whenever lam^2 t >= R0^2
            lam2 = np.linspace(0.0, 1.0, 201)[1:, None]
            lt = lam2 * t[None, :]
            ok = lt >= r0 * r0
            lhs, rhs = self(lt), lam2 * p[None, :]
            return bool(np.all(lhs[ok] >= rhs[ok] * (1 - 1e-12)))
        tt = np.concatenate([[0.0], t])
        pp = self(tt)
        if pp[0] != 0.0:
            raise ConfigError("psi(0) must vanish")
        mid = self(0.5 * (tt[1:] + tt[:-1]))
        return bool(np.all(mid >= 0.5 * (pp[1:] + pp[:-1]) * (1 - 1e-12)))


def _detect_threshold(psi: PsiFunction) -> float:
    r = np.geomspace(*_SCAN_R, 20001)
    t = r * r
    p = psi(t)
    ratio = p / t
    good = (p <= t) & np.concatenate([np.diff(ratio) <= 1e-15 * ratio[1:], [True]])
    bad = np.nonzero(~good)[0]
    if bad.size == 0:
        return max(float(r[0]), 1.0)
    if bad[-1] == r.size - 1:
        raise EnvelopeError("psi(t) <= t never holds on the scanned range")
    return max(float(r[bad[-1] + 1]), 1.0)


@dataclass(frozen=True)
class EnvelopeDerivation:
    """Constants behind an envelope.  ``C_rho`` is ``(1 - m)/2`` for the band maximum ``m``."""

    rho: float
    K_tilde: float
    C_rho: float
    C_tilde_rho: float
    eta: float
    K3: float
    K4: float
    K1: float
    K2: float
    band_max: float
    initial_sup: float = float("nan")

    def to_dict(self) -> dict:
        return {k: _json_float(v) for k, v in self.__dict__.items()}


def _json_float(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass(frozen=True)
class GevreyEnvelope:
    K: float
    R0: float
    psi: PsiFunction
    derivation: EnvelopeDerivation | None = None

    def __post_init__(self):
        if not (self.K > 0 and math.isfinite(self.K)):
            raise EnvelopeError(f"envelope constant K must be positive and finite, got {self.K}")
        if not self.R0 > 0:
            raise EnvelopeError("R0 must be positive")

    def H(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.R0, self.K * r * r, self.K * self.psi.of_radius(r))

    def to_dict(self) -> dict:
        return {"K": self.K, "R0": self.R0, "psi": self.psi.to_dict(),
                "derivation": None if self.derivation is None else self.derivation.to_dict()}


def small_xi_constants(f0hat: SpectralState, K_tilde: float = K_TILDE):
    """Largest node ``rho`` with ``|f| <= exp(-K_tilde r^2)`` at every node up to it."""
    if not 0 < K_tilde < 0.5:
        raise ConfigError("K_tilde must lie in (0, 1/2)")
    r = f0hat.grid.nodes
    ok = np.abs(f0hat.values) <= np.exp(-K_tilde * r * r)
    ok[0] = True
    bad = np.nonzero(~ok)[0]
    last = r.size - 1 if bad.size == 0 else bad[0] - 1
    if last == 0:
        raise EnvelopeError(
            "no small-frequency Gaussian bound; check the second moment of the datum")
    return float(r[last]), float(K_tilde)


def mid_band_constant(f0hat: SpectralState, rho: float, R: float) -> tuple[float, float]:
    """``(K4, m)`` with ``m = max |f|`` over nodes in ``[rho, R]`` and ``K4 = -log(m)/R^2``.

    An empty band gives ``K4 = inf``.
    """
    if R > f0hat.grid.r_max * (1 + 1e-12):
        raise EnvelopeError(f"band edge R = {R} lies beyond the grid (r_max = {f0hat.grid.r_max})")
    r = f0hat.grid.nodes
    band = (r >= rho) & (r <= R)
    if rho >= R or not np.any(band):
        return math.inf, 0.0
    m = float(np.max(np.abs(f0hat.values[band])))
    if m >= 1.0:
        i = np.nonzero(band & (np.abs(f0hat.values) >= 1.0))[0][0]
        raise EnvelopeError(f"|f| reaches 1 at r = {r[i]}: the datum is not strictly decayed")
    if m == 0.0:
        return math.inf, 0.0
    return -math.log(m) / (R * R), m


def far_field_constants(K1: float, K2: float, psi: PsiFunction,
                        K3_ratio: float = K3_RATIO) -> tuple[float, float]:
    """``(eta, K3)`` with ``psi(r^2) >= log(K1)/(K2 - K3)`` for all ``r >= eta``."""
    if K1 < 1:
        raise EnvelopeError(f"K1 = {K1} < 1 is impossible for a normalised transform")
    if not K2 > 0:
        raise EnvelopeError("K2 must be positive")
    K3 = K3_ratio * K2
    level = math.log(K1) / (K2 - K3)
    if level == 0.0:
        return 0.0, K3
    if psi.kind == "power":
        return level ** (1.0 / psi.s), K3
    r = np.concatenate([[0.0], np.geomspace(*_SCAN_R, _SCAN_N)])
    p = psi.of_radius(r)
    below = np.nonzero(p < level)[0]
    if below.size and below[-1] == r.size - 1:
        raise EnvelopeError("psi never reaches the far-field level; extend the scan range")
    eta = 0.0 if below.size == 0 else float(r[below[-1] + 1])
    return eta, K3


def minimal_R0(K1: float, K2: float, psi: PsiFunction, K3_ratio: float = K3_RATIO) -> float:
    eta, _ = far_field_constants(K1, K2, psi, K3_ratio)
    return max(eta, 1.0, psi.threshold_radius)


def build_envelope(f0hat: SpectralState, K1: float, K2: float, psi: PsiFunction,
                   R0_request: float | None = None, K_tilde: float = K_TILDE,
                   K3_ratio: float = K3_RATIO, slack: float = CERT_SLACK) -> GevreyEnvelope:
    """Envelope for ``f0hat`` under the hypothesis ``|f| <= K1 exp(-K2 psi(r^2))``.

    ``R0_request`` defaults to the smallest admissible value
    ``max(eta, 1, psi threshold)``.
    """
    if K1 < 1:
        raise EnvelopeError(f"K1 = {K1} < 1 is impossible for a normalised transform")
    r = f0hat.grid.nodes
    a = np.abs(f0hat.values)
    pos = a > 0
    lhs = np.full(r.shape, -np.inf)
    lhs[pos] = np.log(a[pos]) + K2 * psi.of_radius(r[pos])
    worst = int(np.argmax(lhs))
    if lhs[worst] > math.log(K1) + 1e-12:
        raise EnvelopeError(
            f"decay hypothesis fails at r = {r[worst]}: |f| e^(K2 psi) = {math.exp(lhs[worst]):.6g} > K1 = {K1}")
    rho, K_tilde = small_xi_constants(f0hat, K_tilde)
    eta, K3 = far_field_constants(K1, K2, psi, K3_ratio)
    R0_min = max(eta, 1.0, psi.threshold_radius)
    R0 = R0_min if R0_request is None else float(R0_request)
    if R0 < R0_min * (1 - 1e-12):
        raise EnvelopeError(f"R0 = {R0} is below the admissible minimum {R0_min}")
    K4, m = mid_band_constant(f0hat, rho, R0)
    K = min(K_tilde, K3, K4)
    deriv = EnvelopeDerivation(rho, K_tilde, 0.5 * (1 - m), 0.5 * (1 - m), eta, K3, K4, K1, K2, m)
    env = GevreyEnvelope(K, R0, psi, deriv)
    sup0 = weighted_sup(f0hat, env)
    if sup0 > 1.0 + slack:
        raise EnvelopeError(f"initial certificate fails: weighted sup {sup0:.12g} > 1")
    return GevreyEnvelope(K, R0, psi, EnvelopeDerivation(**{**deriv.__dict__, "initial_sup": sup0}))


def check_subadditivity(envelope: GevreyEnvelope, n_r: int = 1000, n_theta: int = 1000,
                        mode=None, r_max: float | None = None) -> float:
    """Max of ``H(r) - H(r cos a) - H(r sin a)`` over a sample grid.

    ``a`` runs over ``[0, pi/4]`` (the expression is symmetric under
    ``a -> pi/2 - a``); this covers the Kac splitting ``(|cos|, |sin|)`` and
    the Boltzmann one ``(cos(theta/2), sin(theta/2))`` alike, so ``mode`` only
    documents the intent.  ``r`` runs over ``[0, r_max]`` with
    ``r_max = 8 max(R0, 1)`` by default.
    """
    r_hi = 8.0 * max(envelope.R0, 1.0) if r_max is None else float(r_max)
    r = np.linspace(0.0, r_hi, int(n_r))
    a = np.linspace(0.0, math.pi / 4, int(n_theta))
    c, s = np.cos(a), np.sin(a)
    Hr = envelope.H(r)
    worst = -math.inf
    for i in range(0, r.size, 256):
        rr = r[i:i + 256, None]
        v = Hr[i:i + 256, None] - envelope.H(rr * c) - envelope.H(rr * s)
        worst = max(worst, float(v.max()))
    return worst


@dataclass
class PropagationReport:
    times: list
    sups: list
    slack: float
    envelope: GevreyEnvelope

    @property
    def passed(self) -> bool:
        return all(v <= 1.0 + self.slack for v in self.sups)

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        return {"status": self.status, "slack": self.slack, "max_weighted_sup": max(self.sups),
                "snapshots": [{"t": t, "weighted_sup": v} for t, v in zip(self.times, self.sups)],
                "envelope": self.envelope.to_dict()}


def certify_propagation(snapshots, envelope: GevreyEnvelope,
                        slack: float = CERT_SLACK) -> PropagationReport:
    """Weighted sup of every snapshot; PASS iff all are ``<= 1 + slack``."""
    snapshots = list(snapshots)
    return PropagationReport([s.time_label for s in snapshots],
                             [weighted_sup(s, envelope) for s in snapshots], slack, envelope)
