from __future__ import annotations

import os
from collections.abc import Mapping
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from hbn_spin_phonon.domain.spin import Isotope
from hbn_spin_phonon.errors import ConfigError

ENV_PREFIX = "HBN_"

AMPLITUDE_MODES = ("ratio_binomial", "free")
HOMEGA_POLICIES = ("fixed", "free")


def _read_flat_file(path: Path) -> dict[str, str]:
    """
    Flat `key = value` reader: one pair per line, `#` starts a comment line,
    blank lines ignored, no quoting or multiline values.
    """
    if not path.exists() or not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    out: dict[str, str] = {}
    for lineno, raw_line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected `key = value`, got {raw_line!r}")
        k, v = line.split("=", 1)
        k = k.strip().lower()
        if not k:
            raise ConfigError(f"{path}:{lineno}: empty key")
        out[k] = v.strip()
    return out


def _from_env(keys: set[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for k in keys:
        raw = os.getenv(ENV_PREFIX + k.upper(), "").strip()
        if raw:
            out[k] = raw
    return out


def _parse_bool(key: str, raw: Any) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip()
    if text in ("1", "true", "True", "yes", "YES", "on", "ON"):
        return True
    if text in ("0", "false", "False", "no", "NO", "off", "OFF"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _parse_float(key: str, raw: Any) -> float:
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _parse_int(key: str, raw: Any) -> int:
    try:
        return int(str(raw).strip()) if not isinstance(raw, int) else raw
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def _parse_window(raw: Any) -> tuple[float, float]:
    if isinstance(raw, (tuple, list)):
        parts = list(raw)
    else:
        parts = [x.strip() for x in str(raw).replace(";", ",").split(",") if x.strip()]
    if len(parts) != 2:
        raise ConfigError(f"susceptibility_window: expected `t_min, t_max`, got {raw!r}")
    lo, hi = (_parse_float("susceptibility_window", x) for x in parts)
    return lo, hi


@dataclass(frozen=True)
class RunConfig:
    # spin system
    isotope: Isotope = Isotope.N15
    field_gauss: float = 90.0
    zfs_mhz: float = 3480.0

    # fits
    amplitude_mode: str = "ratio_binomial"
    susceptibility_window: tuple[float, float] = (250.0, 350.0)
    homega_policy: str = "fixed"
    homega_mev: float | None = None  # fixed energy; None -> take it from the D(T) fit
    relaxation_modes: int = 1

    # sensitivity
    photon_rate_hz: float = 2.6e6

    # output
    output_dir: Path = Path("./out")
    plots: bool = True

    # reproducibility / execution
    seed: int = 0
    workers: int = 4

    def __post_init__(self) -> None:
        if self.amplitude_mode not in AMPLITUDE_MODES:
            raise ConfigError(f"amplitude_mode must be one of {AMPLITUDE_MODES}, got {self.amplitude_mode!r}")
        if self.homega_policy not in HOMEGA_POLICIES:
            raise ConfigError(f"homega_policy must be one of {HOMEGA_POLICIES}, got {self.homega_policy!r}")
        lo, hi = self.susceptibility_window
        if not lo < hi:
            raise ConfigError(f"susceptibility_window must be ordered, got {self.susceptibility_window}")
        if self.field_gauss < 0:
            raise ConfigError(f"field_gauss must be >= 0, got {self.field_gauss}")
        if self.zfs_mhz <= 0:
            raise ConfigError(f"zfs_mhz must be > 0, got {self.zfs_mhz}")
        if self.homega_mev is not None and self.homega_mev <= 0:
            raise ConfigError(f"homega_mev must be > 0, got {self.homega_mev}")
        if self.relaxation_modes < 1:
            raise ConfigError(f"relaxation_modes must be >= 1, got {self.relaxation_modes}")
        if self.photon_rate_hz <= 0:
            raise ConfigError(f"photon_rate_hz must be > 0, got {self.photon_rate_hz}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    def ensure_dirs(self) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def as_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Isotope):
                v = v.value
            elif isinstance(v, Path):
                v = str(v)
            out[f.name] = v
        return out


KNOWN_KEYS = {f.name for f in fields(RunConfig)}


def _coerce(raw: Mapping[str, Any]) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for key, v in raw.items():
        if key == "isotope":
            try:
                values[key] = Isotope(str(v).strip().upper()) if not isinstance(v, Isotope) else v
            except ValueError:
                raise ConfigError(f"isotope must be N15 or N14, got {v!r}") from None
        elif key in ("field_gauss", "zfs_mhz", "photon_rate_hz"):
            values[key] = _parse_float(key, v)
        elif key == "homega_mev":
            values[key] = None if v is None or str(v).strip().lower() in ("", "none", "auto") else _parse_float(key, v)
        elif key in ("relaxation_modes", "seed", "workers"):
            values[key] = _parse_int(key, v)
        elif key == "plots":
            values[key] = _parse_bool(key, v)
        elif key == "susceptibility_window":
            values[key] = _parse_window(v)
        elif key == "output_dir":
            values[key] = Path(v)
        else:
            values[key] = str(v).strip()
    return values


def load_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """
    Config file first, then HBN_* environment variables, then explicit overrides
    (CLI flags). Later sources win; unknown keys are rejected.
    """
    merged: dict[str, Any] = {}
    if path is not None:
        from_file = _read_flat_file(Path(path))
        unknown = sorted(set(from_file) - KNOWN_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys in {path}: {', '.join(unknown)}")
        merged.update(from_file)
    merged.update(_from_env(KNOWN_KEYS))
    if overrides:
        extra = sorted(set(overrides) - KNOWN_KEYS)
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(extra)}")
        merged.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**_coerce(merged))
