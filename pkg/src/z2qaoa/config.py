"""Experiment configuration: INI-style sections of key=value lines.

Unknown sections or keys are rejected outright (fail fast on typos), and the
canonical echo string both names the output directory (via its hash) and is
embedded in every artifact for provenance.

Value grammar: integers, floats and strings as usual; lists are
comma-separated (``h = 1,2,3``); integer ranges may use ``a..b`` inclusive
(``P = 1..6``); booleans are true/false.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .runio import config_hash, fmt


class ConfigError(ValueError):
    """Bad experiment configuration (unknown key, bad value, missing field)."""


# section -> key -> (type tag, default or None if required-when-used)
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "model": {
        "kind": ("str", "direct"),
        "l": ("int", 3),
    },
    "target": {
        "h": ("float_list", (3.0,)),
        "p": ("int_list", (4,)),
        "start": ("str", "electric"),
        "path": ("str", "exact"),
    },
    "optimizer": {
        "n_restarts": ("int", 10),
        "eps_amp": ("float", 0.025),
        "seed": ("int", 0),
        "dt_min": ("float", 0.02),
        "dt_max": ("float", 1.5),
        "dt_points": ("int", 60),
        "gtol": ("float", 1e-8),
        "fd_step": ("float", 1e-6),
        "maxiter": ("int", 500),
        "n_hops": ("int", 500),
        "temperature": ("float", 0.5),
        "step_size": ("float", 0.3),
        "n_runs": ("int", 100),
    },
    "spectrum": {
        "k": ("int", 5),
        "sector": ("str", "all"),  # all | gauge
    },
    "observables": {
        "state": ("str", "exact_gs"),  # electric | toric | qaoa | exact_gs
        "result": ("str", ""),
        "wilson": ("str", "1x1,2x2,2x1,1x2"),
        "creutz_l": ("int", 2),
        "entropy": ("bool", True),
        "sectors": ("bool", False),
        "offset": ("int", 0),
    },
    "output": {
        "dir": ("str", "out"),
        "experiment": ("str", "run"),
        "workers": ("int", 1),
    },
}


def _parse_value(tag: str, raw: str, where: str):
    raw = raw.strip()
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "bool":
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if tag == "int_list":
            return tuple(_parse_int_list(raw))
        if tag == "float_list":
            return tuple(float(t) for t in raw.split(",") if t.strip())
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {where}: {exc}") from exc


def _parse_int_list(raw: str) -> list[int]:
    out: list[int] = []
    for token in raw.split(","):
        token = token.strip()
        if not token:
            continue
        if ".." in token:
            a, b = token.split("..")
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValueError(f"empty range {token!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(token))
    return out


@dataclass
class ExperimentConfig:
    """Typed view of the validated configuration."""

    values: dict[str, dict[str, object]] = field(default_factory=dict)

    def __getitem__(self, section_key: tuple[str, str]):
        section, key = section_key
        return self.values[section][key]

    def get(self, section: str, key: str):
        return self.values[section][key]

    # execution details that do not change results: kept out of the canonical
    # echo so relocated or re-parallelized re-runs stay byte-identical
    _NON_CANONICAL = {("output", "dir"), ("output", "workers")}

    def canonical(self) -> str:
        """Stable one-line-per-key echo; hashing this names the run directory."""
        lines = []
        for section in sorted(self.values):
            for key in sorted(self.values[section]):
                if (section, key) in self._NON_CANONICAL:
                    continue
                v = self.values[section][key]
                if isinstance(v, tuple):
                    text = ",".join(fmt(x) for x in v)
                else:
                    text = fmt(v)
                lines.append(f"{section}.{key}={text}")
        return "\n".join(lines)

    def run_hash(self) -> str:
        return config_hash(self.canonical())

    def echo_lines(self) -> list[str]:
        return self.canonical().splitlines()


def default_config() -> ExperimentConfig:
    values = {
        section: {key: default for key, (_tag, default) in keys.items()}
        for section, keys in _SCHEMA.items()
    }
    return ExperimentConfig(values=values)


def load_config(path: str | None = None, overrides: list[str] | None = None) -> ExperimentConfig:
    """Read a config file (optional) and apply ``section.key=value`` overrides."""
    cfg = default_config()
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path!r}")
        for section in parser.sections():
            s = section.lower()
            if s not in _SCHEMA:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                k = key.lower()
                if k not in _SCHEMA[s]:
                    raise ConfigError(f"unknown key {key!r} in section [{section}]")
                tag = _SCHEMA[s][k][0]
                cfg.values[s][k] = _parse_value(tag, raw, f"{s}.{k}")
    for ov in overrides or []:
        if "=" not in ov or "." not in ov.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {ov!r}")
        where, raw = ov.split("=", 1)
        s, k = where.split(".", 1)
        s, k = s.strip().lower(), k.strip().lower()
        if s not in _SCHEMA or k not in _SCHEMA[s]:
            raise ConfigError(f"unknown config entry {s}.{k}")
        cfg.values[s][k] = _parse_value(_SCHEMA[s][k][0], raw, f"{s}.{k}")
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    kind = cfg.get("model", "kind")
    if kind not in ("direct", "dual"):
        raise ConfigError(f"model.kind must be direct or dual, got {kind!r}")
    if cfg.get("model", "l") < 2:
        raise ConfigError("model.l must be >= 2")
    if cfg.get("target", "start") not in ("electric", "magnetic"):
        raise ConfigError("target.start must be electric or magnetic")
    if cfg.get("target", "path") not in ("exact", "compiled"):
        raise ConfigError("target.path must be exact or compiled")
    if any(h < 0 for h in cfg.get("target", "h")):
        raise ConfigError("target.h values must be >= 0")
    if any(p < 1 for p in cfg.get("target", "p")):
        raise ConfigError("target.p values must be >= 1")
    if cfg.get("spectrum", "sector") not in ("all", "gauge"):
        raise ConfigError("spectrum.sector must be all or gauge")
    if cfg.get("observables", "state") not in ("electric", "toric", "qaoa", "exact_gs"):
        raise ConfigError("observables.state must be electric, toric, qaoa or exact_gs")
    if cfg.get("output", "workers") < 1:
        raise ConfigError("output.workers must be >= 1")


def parse_wilson_sizes(raw: str) -> list[tuple[int, int]]:
    sizes = []
    for token in raw.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            a, b = token.lower().split("x")
            sizes.append((int(a), int(b)))
        except ValueError as exc:
            raise ConfigError(f"bad wilson size {token!r} (want e.g. 2x2)") from exc
    return sizes
