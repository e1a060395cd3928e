"""Run configuration: ``key = value`` files with command-line overrides."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError
from .modes import Mode


def _floats(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(float(x) for x in text)
    text = str(text).strip()
    if not text:
        return ()
    try:
        return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _auto_float(text):
    """A number, or one of the words ``fit``/``auto`` kept as a string."""
    if isinstance(text, (int, float)):
        return float(text)
    t = str(text).strip().lower()
    if t in ("fit", "auto"):
        return t
    try:
        return float(t)
    except ValueError:
        raise ConfigError(f"expected a number, 'fit' or 'auto', got {text!r}") from None


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


_KERNELS = {"kac": "kac_power", "kac_power": "kac_power", "kacpower": "kac_power",
            "maxwell": "maxwell", "maxwell_singular": "maxwell", "constant": "constant"}


@dataclass(frozen=True)
class RunConfig:
    mode: str = Mode.KAC.value
    kernel: str = "kac_power"
    gamma: float = 2.0
    kernel_scale: float = 1.0
    kernel_nodes: int = 64
    cutoff_levels: tuple = (5.0,)
    rmax: float = 16.0
    grid_points: int = 257
    spacing: str = "uniform"
    datum: str = "gaussian"
    mixture_weights: tuple = (0.5, 0.5)
    mixture_variances: tuple = (0.5, 1.5)
    bump_radius: float = 1.0
    bump_nu: float = 2.0
    t_final: float = 5.0
    snapshots: tuple = (0.5, 1.0, 2.0, 5.0)
    k1: object = "fit"
    k2: object = "fit"
    psi: str = "power"
    s: object = "fit"
    r0: object = "auto"
    fit_rmax: object = "auto"
    fit_points: int = 8193
    accuracy: float = 1e-8
    max_stage_tau: float = 0.5
    max_order: int = 200
    ode_dtau: float = 0.05
    cross_check: bool = False
    window: float = 8.0
    refine: bool = True
    out: str = "out"
    seed: int = 0

    def __post_init__(self):
        conv = {
            "mode": lambda v: Mode.parse(v).value,
            "kernel": self._kernel,
            "cutoff_levels": _floats,
            "mixture_weights": _floats,
            "mixture_variances": _floats,
            "snapshots": _floats,
            "k1": _auto_float, "k2": _auto_float, "s": _auto_float, "r0": _auto_float,
            "fit_rmax": _auto_float,
            "psi": lambda v: str(v).strip().lower().replace("_", ""),
            "spacing": lambda v: str(v).strip().lower(),
            "datum": lambda v: str(v).strip().lower(),
            "cross_check": _bool, "refine": _bool,
            "out": str,
        }
        for f in fields(self):
            value = getattr(self, f.name)
            try:
                if f.name in conv:
                    value = conv[f.name](value)
                elif f.type in ("float", float):
                    value = float(value)
                elif f.type in ("int", int):
                    value = int(str(value).strip())
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {f.name}: {value!r} ({exc})") from None
            object.__setattr__(self, f.name, value)
        self._validate()

    @staticmethod
    def _kernel(v):
        key = str(v).strip().lower().replace("-", "_")
        if key not in _KERNELS:
            raise ConfigError(f"unknown kernel {v!r}")
        return _KERNELS[key]

    def _validate(self):
        if not self.cutoff_levels or any(not (l > 0 and math.isfinite(l)) for l in self.cutoff_levels):
            raise ConfigError("cut-off levels must be positive")
        if self.kernel == "maxwell" and self.mode != Mode.BOLTZMANN.value:
            raise ConfigError("the Maxwell kernel lives in boltzmann3d mode")
        if self.kernel == "kac_power" and self.mode != Mode.KAC.value:
            raise ConfigError("the Kac power kernel lives in kac1d mode")
        if self.kernel == "kac_power" and not 1 < self.gamma < 3:
            raise ConfigError("gamma must lie in (1, 3)")
        if self.datum not in ("gaussian", "mixture", "bump"):
            raise ConfigError(f"unknown datum {self.datum!r}")
        if self.psi not in ("power", "sqrtlog"):
            raise ConfigError(f"unknown psi {self.psi!r}")
        if self.t_final < 0 or any(t < 0 for t in self.snapshots):
            raise ConfigError("times must be nonnegative")
        if not 0 < self.accuracy < 1:
            raise ConfigError("accuracy must lie in (0, 1)")
        if self.grid_points < 8:
            raise ConfigError("grid_points must be at least 8")
        for name in ("k1", "k2", "s"):
            v = getattr(self, name)
            if v == "auto":
                raise ConfigError(f"{name} takes a number or 'fit'")
        if self.r0 == "fit":
            raise ConfigError("r0 takes a number or 'auto'")
        if self.fit_rmax == "fit":
            raise ConfigError("fit_rmax takes a number or 'auto'")

    @property
    def times(self) -> list[float]:
        """``0`` followed by the sorted snapshot times in ``(0, t_final]``."""
        return [0.0] + sorted({t for t in self.snapshots if 0 < t <= self.t_final})

    def to_dict(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out

    def to_text(self) -> str:
        lines = []
        for k, v in self.to_dict().items():
            if isinstance(v, list):
                v = ",".join(repr(float(x)) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"

    def updated(self, **overrides) -> "RunConfig":
        return replace(self, **overrides)


def normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


_ALIASES = {"cutoff_level": "cutoff_levels", "levels": "cutoff_levels", "m": "grid_points",
            "r_max": "rmax", "t": "t_final", "r_0": "r0", "K1": "k1", "K2": "k2"}


def parse_config_text(text: str) -> dict:
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value', got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        key = _ALIASES.get(normalize_key(key), normalize_key(key))
        if key not in known:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        out[key] = value
    return out


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file at ``path``, then ``overrides`` (flags win)."""
    values = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {p} not found")
        values.update(parse_config_text(p.read_text()))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[_ALIASES.get(normalize_key(k), normalize_key(k))] = v
    if "kernel" in values and "mode" not in values:
        # the kernel family fixes the model unless the mode is given explicitly
        family = RunConfig._kernel(values["kernel"])
        if family in ("kac_power", "maxwell"):
            values["mode"] = Mode.KAC.value if family == "kac_power" else Mode.BOLTZMANN.value
    known = {f.name for f in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    return RunConfig(**values)
