"""Declarative experiment configuration.

A config is an INI-style file with sections [system] [features]
[hamiltonian] [reservoir] [pipeline] [metrics]; every key has a default.
Two presets matching the published benchmark setups ship with the
package.
"""

from __future__ import annotations

import configparser
import hashlib
from importlib import resources

import numpy as np

from .dynamics import DEFAULT_X0, SystemSpec
from .exceptions import ConfigError
from .features import FeatureConfig
from .hamiltonian import HamiltonianTemplate, active_dimension, default_total_dimension
from .pipeline import ExperimentConfig
from .reservoir import ReservoirConfig

_DEFAULTS = {
    "system": {
        "name": "lorenz63",
        "tau": "0.025",
        "x0": "",
        "substeps": "1",
    },
    "features": {
        "taps": "2",
        "stride": "1",
        "orders": "2",
        "constant": "1.0",
    },
    "hamiltonian": {
        "diagonal": "200,400,600,800,800,600,400,200",
        "diagonal_mode": "fixed",
        "diagonal_range": "100,1000",
        "fill": "",
        "n_total": "",
        "active_offset": "",
    },
    "reservoir": {
        "d_pad": "4",
        "g": "1.0",
    },
    "pipeline": {
        "washout": "600",
        "train": "4000",
        "test": "27000",
        "ridge": "1e-8",
        "seed": "42",
        "horizon_threshold": "0.4",
    },
    "metrics": {
        "ami_bins": "64",
        "ami_max_lag": "200",
        "embed_dim": "3",
    },
}


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _read_ini(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    for section in parser.sections():
        if section not in _DEFAULTS:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _DEFAULTS[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
    return parser


def _resolved(parser: configparser.ConfigParser) -> dict[str, dict[str, str]]:
    out = {}
    for section, defaults in _DEFAULTS.items():
        merged = dict(defaults)
        if parser.has_section(section):
            merged.update(parser[section])
        out[section] = merged
    return out


def config_digest(resolved: dict[str, dict[str, str]]) -> str:
    """Hex digest of the fully resolved key/value map."""
    canon = "\n".join(
        f"{s}.{k}={v}"
        for s in sorted(resolved)
        for k, v in sorted(resolved[s].items())
    )
    return hashlib.sha256(canon.encode()).hexdigest()


def load_config(path, seed_override: int | None = None) -> tuple[ExperimentConfig, str]:
    """Parse a config file into an ExperimentConfig plus its digest."""
    resolved = _resolved(_read_ini(path))
    if seed_override is not None:
        resolved["pipeline"]["seed"] = str(seed_override)
    return build_config(resolved), config_digest(resolved)


def build_config(resolved: dict[str, dict[str, str]]) -> ExperimentConfig:
    sy, fe, ha = resolved["system"], resolved["features"], resolved["hamiltonian"]
    re_, pi, me = resolved["reservoir"], resolved["pipeline"], resolved["metrics"]
    try:
        system = SystemSpec(sy["name"], float(sy["tau"]))
        x0 = tuple(_floats(sy["x0"])) or DEFAULT_X0[system.name]

        constant = fe["constant"].strip().lower()
        feature = FeatureConfig(
            dim=system.dimension,
            taps=int(fe["taps"]),
            stride=int(fe["stride"]),
            orders=tuple(_ints(fe["orders"])),
            include_constant=constant not in ("", "none"),
            constant_value=float(constant) if constant not in ("", "none") else 1.0,
        )

        seed = int(pi["seed"])
        n_active = active_dimension(feature.n_total)
        diagonal = _resolve_diagonal(ha, n_active, seed)
        d_pad = int(re_["d_pad"])
        template = HamiltonianTemplate.for_features(
            feature.n_total,
            diagonal,
            d_pad=d_pad,
            n_total=int(ha["n_total"]) if ha["n_total"].strip() else None,
            active_offset=(
                int(ha["active_offset"]) if ha["active_offset"].strip() else None
            ),
            fill_value=float(ha["fill"]) if ha["fill"].strip() else None,
        )
        reservoir = ReservoirConfig(
            n=template.n_total,
            d_in=d_pad,
            tau=system.tau,
            g=float(re_["g"]),
        )
        return ExperimentConfig(
            system=system,
            feature=feature,
            template=template,
            reservoir=reservoir,
            washout=int(pi["washout"]),
            train=int(pi["train"]),
            test=int(pi["test"]),
            ridge=float(pi["ridge"]),
            seed=seed,
            x0=x0,
            substeps=int(sy["substeps"]),
            horizon_threshold=float(pi["horizon_threshold"]),
            embed_dim=int(me["embed_dim"]),
            ami_max_lag=int(me["ami_max_lag"]),
            ami_bins=int(me["ami_bins"]),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc


def _resolve_diagonal(ha: dict[str, str], n_active: int, seed: int) -> np.ndarray:
    mode = ha["diagonal_mode"].strip().lower()
    if mode == "fixed":
        diag = np.array(_floats(ha["diagonal"]))
        if diag.size == 1:
            diag = np.full(n_active, diag[0])
        if diag.size != n_active:
            raise ConfigError(
                f"diagonal has {diag.size} entries, active block needs {n_active}"
            )
        return diag
    if mode == "random":
        lo, hi = _floats(ha["diagonal_range"])
        rng = np.random.Generator(np.random.Philox(seed))
        return rng.uniform(lo, hi, size=n_active)
    raise ConfigError(f"diagonal_mode must be 'fixed' or 'random', got '{mode}'")


def preset_path(name: str):
    """Filesystem path of a shipped preset ('lorenz63' or 'doublescroll')."""
    ref = resources.files("qrchaos") / "presets" / f"{name}.preset"
    if not ref.is_file():
        raise ConfigError(f"no preset named '{name}'")
    return ref
