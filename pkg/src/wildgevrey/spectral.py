"""Radial frequency grids, sampled Fourier states and their interpolation."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .errors import ConfigError, DomainError, NormalizationError
from .modes import Mode

DEFAULT_RMAX = 16.0
DEFAULT_POINTS = 257
STATE_TOL = 1e-8
# below this every positive sample still has a finite, accurate logarithm
_LOG_FLOOR = 1e-280


@dataclass(frozen=True)
class SpectralGrid:
    mode: Mode
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ConfigError("grid needs at least two nodes")
        if nodes[0] != 0.0:
            raise ConfigError("first grid node must be exactly 0")
        if np.any(np.diff(nodes) <= 0):
            raise ConfigError("grid nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "mode", Mode.parse(self.mode))

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def size(self) -> int:
        return self.nodes.size

    def __len__(self):
        return self.nodes.size

    def __eq__(self, other):
        if not isinstance(other, SpectralGrid):
            return NotImplemented
        return self.mode is other.mode and np.array_equal(self.nodes, other.nodes)

    def __hash__(self):
        return hash((self.mode, self.nodes.tobytes()))


def make_grid(mode, r_max: float = DEFAULT_RMAX, M: int = DEFAULT_POINTS,
              spacing: str = "uniform", r_first: float | None = None) -> SpectralGrid:
    """Grid ``0 = r_0 < r_1 < ... < r_{M-1} = r_max``.

    With ``spacing="geometric"`` the positive nodes form a geometric sequence
    from ``r_first`` (default ``r_max / 1000``) to ``r_max``.
    """
    M = int(M)
    if M < 8:
        raise ConfigError(f"grid needs M >= 8 nodes, got {M}")
    if not r_max > 0:
        raise ConfigError("r_max must be positive")
    if spacing == "uniform":
        nodes = np.linspace(0.0, r_max, M)
    elif spacing == "geometric":
        r_first = r_max / 1000.0 if r_first is None else float(r_first)
        if not 0 < r_first < r_max:
            raise ConfigError("r_first must lie in (0, r_max)")
        nodes = np.concatenate([[0.0], np.geomspace(r_first, r_max, M - 1)])
        nodes[-1] = r_max
    else:
        raise ConfigError(f"unknown spacing {spacing!r}")
    return SpectralGrid(Mode.parse(mode), nodes)


def _hyman_filter(x: np.ndarray, y: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Limit Hermite slopes so each interval is monotone between its end values."""
    delta = np.diff(y) / np.diff(x)
    d = d.copy()
    left = np.concatenate([[delta[0]], delta])
    right = np.concatenate([delta, [delta[-1]]])
    bound = 3.0 * np.minimum(np.abs(left), np.abs(right))
    ok = (left * right > 0) & (np.sign(d) == np.sign(right))
    d = np.where(ok, np.sign(right) * np.minimum(np.abs(d), bound), 0.0)
    return d


class MonotoneCubic:
    """Shape-preserving cubic Hermite interpolant.

    Slopes come from a not-a-knot cubic spline (or one clamped at the left
    end) and are then limited so that ``d/delta`` stays in ``[0, 3]`` on every
    interval, with zero slope at data extrema.  The interpolant is therefore
    exact at the nodes and never leaves ``[min, max]`` of the two bracketing
    samples.
    """

    def __init__(self, x, y, left_slope: float | None = None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.size < 3:
            d = np.zeros_like(y) if x.size == 1 else np.full_like(y, (y[1] - y[0]) / (x[1] - x[0]))
        else:
            bc = "not-a-knot" if left_slope is None else ((1, left_slope), "not-a-knot")
            d = CubicSpline(x, y, bc_type=bc)(x, 1)
        d = _hyman_filter(x, y, d) if x.size >= 2 else d
        self.x = x
        self.y = y
        self.slopes = d
        self._spline = CubicHermiteSpline(x, y, d, extrapolate=True)

    def __call__(self, xq):
        return self._spline(xq)


@dataclass(frozen=True)
class SpectralState:
    """Samples of a real, even Fourier transform on a radial grid.

    ``values[0]`` is the mass (1 for a probability density) and ``|values|``
    never exceeds it.  Construct with ``validate=False`` for raw profiles that
    are not transforms of probability densities.
    """

    grid: SpectralGrid
    values: np.ndarray
    time_label: float = 0.0
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise ConfigError("values do not match the grid")
        if not np.all(np.isfinite(values)):
            raise NormalizationError("state contains non-finite values")
        if self.validate:
            if abs(values[0] - 1.0) > STATE_TOL:
                raise NormalizationError(f"f(0) = {values[0]!r}, expected 1")
            peak = np.max(np.abs(values))
            if peak > 1.0 + STATE_TOL:
                raise NormalizationError(f"sup |f| = {peak!r} exceeds 1")
        if self.time_label < 0:
            raise ConfigError("time label must be nonnegative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "time_label", float(self.time_label))

    @property
    def mode(self) -> Mode:
        return self.grid.mode

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @cached_property
    def scheme(self) -> str:
        """``"log"`` for strictly positive data, else ``"direct"``."""
        return "log" if np.min(self.values) > _LOG_FLOOR else "direct"

    @cached_property
    def _interpolants(self) -> dict:
        return {}

    def interpolant(self, scheme: str | None = None):
        scheme = scheme or self.scheme
        cache = self._interpolants
        if scheme not in cache:
            r = self.grid.nodes
            if scheme == "log":
                if np.min(self.values) <= 0:
                    raise DomainError("log scheme needs strictly positive samples")
                # log f as a function of r^2: Gaussians become straight lines
                core = MonotoneCubic(r * r, np.log(self.values))
                cache[scheme] = lambda q: np.exp(core(q * q))
            elif scheme == "direct":
                cache[scheme] = MonotoneCubic(r, self.values, left_slope=0.0)
            else:
                raise ConfigError(f"unknown interpolation scheme {scheme!r}")
        return cache[scheme]

    def with_values(self, values, time_label: float | None = None) -> "SpectralState":
        t = self.time_label if time_label is None else time_label
        return SpectralState(self.grid, values, t, validate=self.validate)


def interpolate(state: SpectralState, r, scheme: str | None = None):
    """Evaluate the monotone interpolant of ``state`` at radius/radii ``r``.

    ``scheme`` is ``"log"`` (monotone cubic in ``(r^2, log f)``, positive data
    only) or ``"direct"`` (monotone cubic in ``(r, f)`` with zero slope at the
    origin); by default ``"log"`` is used whenever every sample is positive.
    """
    q = np.asarray(r, dtype=float)
    if np.any(q < 0) or np.any(q > state.grid.r_max * (1 + 1e-12)):
        raise DomainError(f"radius outside [0, {state.grid.r_max}]")
    q = np.minimum(q, state.grid.r_max)
    out = state.interpolant(scheme)(q)
    return float(out) if np.ndim(out) == 0 else out


def weighted_sup(state: SpectralState, envelope) -> float:
    """``max_i |f(r_i)| exp(H(r_i))`` evaluated in log space."""
    a = np.abs(state.values)
    pos = a > 0
    if not np.any(pos):
        return 0.0
    r = state.grid.nodes[pos]
    return float(np.max(np.exp(np.log(a[pos]) + envelope.H(r))))


def states_to_rows(states):
    for st in states:
        for r, v in zip(st.grid.nodes, st.values):
            yield r, v, st.time_label


def write_states_csv(path, states, meta: dict | None = None) -> Path:
    """Write states as ``r,value,time_label`` rows with 17 significant digits.

    ``meta`` (for instance the resolved run configuration) is embedded as a
    JSON comment line so the file describes itself.
    """
    path = Path(path)
    states = list(states)
    header = {"mode": states[0].mode.value if states else None}
    if meta:
        header.update(meta)
    with path.open("w", newline="") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "value", "time_label"])
        for r, v, t in states_to_rows(states):
            w.writerow([f"{r:.17g}", f"{v:.17g}", f"{t:.17g}"])
    return path


def read_states_csv(path, validate: bool = True) -> list[SpectralState]:
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ConfigError("missing metadata line")
        meta = json.loads(first[1:])
        rows = list(csv.DictReader(fh))
    mode = Mode.parse(meta["mode"])
    out, cur_t, r, v = [], None, [], []

    def flush():
        if r:
            out.append(SpectralState(SpectralGrid(mode, np.array(r)), np.array(v), cur_t,
                                     validate=validate))

    for row in rows:
        t = float(row["time_label"])
        if cur_t is not None and (t != cur_t or float(row["r"]) == 0.0):
            flush()
            r, v = [], []
        cur_t = t
        r.append(float(row["r"]))
        v.append(float(row["value"]))
    flush()
    return out
