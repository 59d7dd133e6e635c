"""Run configuration: defaults, validation, and the flat key=value file format.

Config files hold one ``key = value`` pair per line, ``#`` comments allowed;
command-line flags override file values. Every numeric field is range-checked
at parse time so a bad bundle fails before any computation starts.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError

DECODER_PRESET_NAMES = ("default", "attn-only", "conv-only")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    alpha: int = 2
    num_scales: int = 4
    d: int = 4
    r_bound: float = 0.125
    delta: float = 1e-6
    g_max: int = 24
    kernel: str = "bspline"
    mode: str = "exact"
    decoder: str = "default"

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.alpha < 2:
            raise ConfigError(f"alpha must be >= 2, got {self.alpha}")
        if not 1 <= self.num_scales <= 16:
            raise ConfigError(f"num_scales must be in 1..16, got {self.num_scales}")
        if not 1 <= self.d <= 64:
            raise ConfigError(f"d must be in 1..64, got {self.d}")
        if not 0 < self.r_bound <= 1e6:
            raise ConfigError(f"r_bound must be in (0, 1e6], got {self.r_bound}")
        if not 0 < self.delta <= 0.1:
            raise ConfigError(f"delta must be in (0, 0.1], got {self.delta}")
        if not 1 <= self.g_max <= 64:
            raise ConfigError(f"g_max must be in 1..64, got {self.g_max}")
        if self.kernel not in ("bspline", "catmullrom"):
            raise ConfigError(f"kernel must be 'bspline' or 'catmullrom', got {self.kernel!r}")
        if self.mode not in ("exact", "fast"):
            raise ConfigError(f"mode must be 'exact' or 'fast', got {self.mode!r}")
        if self.decoder not in DECODER_PRESET_NAMES:
            raise ConfigError(
                f"decoder must be one of {DECODER_PRESET_NAMES}, got {self.decoder!r}"
            )

    @property
    def n(self) -> int:
        return self.alpha ** (self.num_scales - 1)

    def with_overrides(self, **kwargs) -> "RunConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs)

    def as_dict(self):
        return {
            "seed": self.seed,
            "alpha": self.alpha,
            "num_scales": self.num_scales,
            "d": self.d,
            "r_bound": self.r_bound,
            "delta": self.delta,
            "g_max": self.g_max,
            "kernel": self.kernel,
            "mode": self.mode,
            "decoder": self.decoder,
        }


_INT_KEYS = {"seed", "alpha", "num_scales", "d", "g_max"}
_FLOAT_KEYS = {"r_bound", "delta"}
_STR_KEYS = {"kernel", "mode", "decoder"}


def parse_config_text(text: str) -> dict:
    """Parse the flat key=value format into a typed override dict."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _INT_KEYS:
            try:
                out[key] = int(value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: {key} needs an integer") from exc
        elif key in _FLOAT_KEYS:
            try:
                out[key] = float(value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: {key} needs a number") from exc
        elif key in _STR_KEYS:
            out[key] = value
        else:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
    return out


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Build a validated config from an optional file plus keyword overrides."""
    values = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text()))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)
