"""Run configuration: a single JSON tree validated before any work.

A config names a mode, a collision kernel, usually a background model
and simulation window, and one section of mode-specific parameters.
Validation is strict: unknown keys are rejected with their path, every
numeric field is range-checked, and nothing is computed until the whole
tree is known to be well formed.  Configs are meant to be kept as the
record of an experiment, so flags can override only the seed and the
output directory.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .densities import (
    BKWModel,
    BoxMaxwellianModel,
    GaussianProductModel,
    MollifiedEmpiricalModel,
)
from .engine import SimConfig
from .kernels import KernelSpec

__all__ = [
    "ConfigError",
    "RunConfig",
    "MODES",
    "load_config",
    "validate_config",
]

MODES = (
    "Simulate",
    "Particles",
    "Picard",
    "CheckInvariants",
    "Entropy",
    "ExitProb",
    "Certify",
)

_SECTION_NAMES = {
    "Simulate": "simulate",
    "Particles": "particles",
    "Picard": "picard",
    "CheckInvariants": "check_invariants",
    "Entropy": "entropy",
    "ExitProb": "exit_prob",
    "Certify": "certify",
}

_MODEL_FAMILIES = ("box_maxwellian", "gaussian_product", "bkw", "empirical")

_MISSING = object()


class ConfigError(ValueError):
    """A config violates the schema; the message names the path."""


@dataclass
class RunConfig:
    """Validated run description ready for execution."""

    mode: str
    seed: int
    out_dir: str | None
    kernel: KernelSpec
    model: object | None
    sim: SimConfig | None
    output_times: list[float]
    params: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _reject_unknown(mapping, allowed, where):
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")


def _fetch(mapping, key, where, default=_MISSING):
    if key in mapping:
        return mapping[key]
    if default is _MISSING:
        raise ConfigError(f"{where}: missing required key '{key}'")
    return default


def _number(mapping, key, where, default=_MISSING, minimum=None, positive=False):
    value = _fetch(mapping, key, where, default)
    if value is default and default is not _MISSING:
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {value!r}")
    value = float(value)
    if positive and value <= 0.0:
        raise ConfigError(f"{where}.{key}: must be positive, got {value}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}.{key}: must be >= {minimum}, got {value}")
    return value


def _integer(mapping, key, where, default=_MISSING, minimum=None):
    value = _fetch(mapping, key, where, default)
    if value is default and default is not _MISSING:
        return value
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}.{key}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}.{key}: must be >= {minimum}, got {value}")
    return int(value)


def _boolean(mapping, key, where, default=_MISSING):
    value = _fetch(mapping, key, where, default)
    if value is default and default is not _MISSING:
        return value
    if not isinstance(value, bool):
        raise ConfigError(f"{where}.{key}: expected true or false, got {value!r}")
    return bool(value)


def _section(mapping, key, where, default=_MISSING):
    value = _fetch(mapping, key, where, default)
    if value is default and default is not _MISSING:
        return value
    if not isinstance(value, dict):
        raise ConfigError(f"{where}.{key}: expected a mapping, got {value!r}")
    return value


def _build_kernel(section):
    try:
        return KernelSpec.from_config(section)
    except ValueError as exc:
        raise ConfigError(f"kernel: {exc}") from exc


def _build_model(section, base_dir):
    family = _fetch(section, "family", "model")
    if family not in _MODEL_FAMILIES:
        raise ConfigError(
            f"model.family: expected one of {list(_MODEL_FAMILIES)}, "
            f"got {family!r}"
        )
    try:
        if family == "box_maxwellian":
            _reject_unknown(section, {"family", "side", "vel_var"}, "model")
            return BoxMaxwellianModel(
                side=_number(section, "side", "model", default=1.0, positive=True),
                vel_var=_number(
                    section, "vel_var", "model", default=1.0, positive=True
                ),
            )
        if family == "gaussian_product":
            _reject_unknown(
                section, {"family", "vel_var", "pos_var", "drift"}, "model"
            )
            return GaussianProductModel(
                vel_var=_number(
                    section, "vel_var", "model", default=1.0, positive=True
                ),
                pos_var=_number(
                    section, "pos_var", "model", default=1.0, positive=True
                ),
                drift=_fetch(section, "drift", "model", default="static"),
            )
        if family == "bkw":
            _reject_unknown(
                section, {"family", "side", "vel_var", "c0", "rate"}, "model"
            )
            return BKWModel(
                side=_number(section, "side", "model", default=1.0, positive=True),
                vel_var=_number(
                    section, "vel_var", "model", default=1.0, positive=True
                ),
                c0=_number(section, "c0", "model", default=0.4, positive=True),
                rate=_number(section, "rate", "model", default=1.0, positive=True),
            )
        _reject_unknown(
            section, {"family", "snapshot", "h_x", "h_v", "side"}, "model"
        )
        snapshot = _fetch(section, "snapshot", "model")
        if not isinstance(snapshot, str):
            raise ConfigError("model.snapshot: expected a file path string")
        path = snapshot
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        side = _number(section, "side", "model", default=None)
        return MollifiedEmpiricalModel.from_csv(
            path,
            h_x=_number(section, "h_x", "model", positive=True),
            h_v=_number(section, "h_v", "model", positive=True),
            side=side,
        )
    except ConfigError:
        raise
    except (ValueError, OSError) as exc:
        raise ConfigError(f"model: {exc}") from exc


def _build_sim(section):
    allowed = {
        "horizon",
        "level",
        "level_step",
        "escalate",
        "collisions",
        "max_events",
    }
    _reject_unknown(section, allowed, "sim")
    try:
        return SimConfig(
            horizon=_number(section, "horizon", "sim", positive=True),
            level=_number(section, "level", "sim", default=4.0),
            level_step=_number(section, "level_step", "sim", default=4.0),
            escalate=_boolean(section, "escalate", "sim", default=True),
            collisions=_boolean(section, "collisions", "sim", default=True),
            max_events=_integer(
                section, "max_events", "sim", default=1_000_000, minimum=1
            ),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"sim: {exc}") from exc


def _output_times(mapping):
    value = _fetch(mapping, "output_times", "config", default=[])
    if not isinstance(value, list):
        raise ConfigError("config.output_times: expected a list of times")
    times = []
    for k, entry in enumerate(value):
        if isinstance(entry, bool) or not isinstance(entry, (int, float)):
            raise ConfigError(
                f"config.output_times[{k}]: expected a number, got {entry!r}"
            )
        if entry < 0.0:
            raise ConfigError(
                f"config.output_times[{k}]: must be nonnegative, got {entry}"
            )
        times.append(float(entry))
    if times != sorted(times):
        raise ConfigError("config.output_times: must be nondecreasing")
    return times


def _mode_params(mode, section, where):
    if mode == "Simulate":
        _reject_unknown(section, {"n_paths", "log_events"}, where)
        return {
            "n_paths": _integer(section, "n_paths", where, default=1, minimum=1),
            "log_events": _boolean(section, "log_events", where, default=True),
        }
    if mode == "Particles":
        allowed = {"n", "h_x", "h_v", "dt", "mode", "box_side", "vel_var"}
        _reject_unknown(section, allowed, where)
        scheme = _fetch(section, "mode", where, default="one_sided")
        if scheme not in ("one_sided", "symmetric_pair"):
            raise ConfigError(
                f"{where}.mode: expected 'one_sided' or 'symmetric_pair', "
                f"got {scheme!r}"
            )
        return {
            "n": _integer(section, "n", where, minimum=2),
            "h_x": _number(section, "h_x", where, default=None, positive=True),
            "h_v": _number(section, "h_v", where, default=None, positive=True),
            "dt": _number(section, "dt", where, positive=True),
            "mode": scheme,
            "box_side": _number(
                section, "box_side", where, default=1.0, positive=True
            ),
            "vel_var": _number(
                section, "vel_var", where, default=1.0, positive=True
            ),
        }
    if mode == "Picard":
        _reject_unknown(section, {"n_iterates", "n_realizations"}, where)
        return {
            "n_iterates": _integer(
                section, "n_iterates", where, default=6, minimum=2
            ),
            "n_realizations": _integer(
                section, "n_realizations", where, default=100, minimum=2
            ),
        }
    if mode == "CheckInvariants":
        _reject_unknown(section, {"t", "tolerance"}, where)
        return {
            "t": _number(section, "t", where, default=0.0, minimum=0.0),
            "tolerance": _number(
                section, "tolerance", where, default=1e-6, positive=True
            ),
        }
    if mode == "Entropy":
        _reject_unknown(section, {"n_paths", "reference_variance"}, where)
        return {
            "n_paths": _integer(section, "n_paths", where, minimum=10),
            "reference_variance": _number(
                section, "reference_variance", where, default=None, positive=True
            ),
        }
    if mode == "ExitProb":
        _reject_unknown(section, {"n_paths", "thresholds"}, where)
        raw = _fetch(section, "thresholds", where, default=[2.0, 4.0, 8.0, 16.0])
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"{where}.thresholds: expected a nonempty list")
        thresholds = []
        for k, entry in enumerate(raw):
            if isinstance(entry, bool) or not isinstance(entry, (int, float)):
                raise ConfigError(
                    f"{where}.thresholds[{k}]: expected a number, got {entry!r}"
                )
            if entry <= 0.0:
                raise ConfigError(
                    f"{where}.thresholds[{k}]: must be positive, got {entry}"
                )
            thresholds.append(float(entry))
        return {
            "n_paths": _integer(section, "n_paths", where, minimum=2),
            "thresholds": thresholds,
        }
    _reject_unknown(section, {"n_time", "n_side"}, where)
    return {
        "n_time": _integer(section, "n_time", where, default=5, minimum=2),
        "n_side": _integer(section, "n_side", where, default=4, minimum=1),
    }


# Modes that do not run the jump engine still need a horizon when they
# certify over a window; CheckInvariants alone is a fixed-time quadrature.
_SIM_REQUIRED = {
    "Simulate",
    "Particles",
    "Picard",
    "Entropy",
    "ExitProb",
    "Certify",
}
_MODEL_REQUIRED = {
    "Simulate",
    "Picard",
    "CheckInvariants",
    "Entropy",
    "ExitProb",
    "Certify",
}


def validate_config(mapping, base_dir="."):
    """Validate a parsed config tree and build the runtime objects.

    Raises :class:`ConfigError` naming the offending path on the first
    violation; on success returns a :class:`RunConfig`.
    """
    if not isinstance(mapping, dict):
        raise ConfigError("config: top level must be a mapping")
    mode = _fetch(mapping, "mode", "config")
    if mode not in MODES:
        raise ConfigError(
            f"config.mode: expected one of {list(MODES)}, got {mode!r}"
        )
    section_name = _SECTION_NAMES[mode]
    allowed = {
        "mode",
        "seed",
        "out_dir",
        "kernel",
        "model",
        "sim",
        "output_times",
        section_name,
    }
    _reject_unknown(mapping, allowed, "config")

    seed = _integer(mapping, "seed", "config", default=0, minimum=0)
    out_dir = _fetch(mapping, "out_dir", "config", default=None)
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("config.out_dir: expected a directory path string")

    kernel = _build_kernel(_section(mapping, "kernel", "config"))

    model = None
    if "model" in mapping:
        model = _build_model(_section(mapping, "model", "config"), base_dir)
    elif mode in _MODEL_REQUIRED:
        raise ConfigError(f"config: mode {mode} requires a model section")

    sim = None
    if "sim" in mapping:
        sim = _build_sim(_section(mapping, "sim", "config"))
    elif mode in _SIM_REQUIRED:
        raise ConfigError(f"config: mode {mode} requires a sim section")

    params = _mode_params(
        mode,
        _section(mapping, section_name, "config", default={}),
        section_name,
    )
    return RunConfig(
        mode=mode,
        seed=seed,
        out_dir=out_dir,
        kernel=kernel,
        model=model,
        sim=sim,
        output_times=_output_times(mapping),
        params=params,
        raw=mapping,
    )


def load_config(path):
    """Parse and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            mapping = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON: {exc}") from exc
    return validate_config(mapping, base_dir=os.path.dirname(os.path.abspath(path)))
