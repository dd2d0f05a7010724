"""Experiment configuration: JSON schema, environment overrides, validation.

A configuration names a kernel (family plus parameters), an experiment
kind, the kind's numeric parameters, and the run plumbing (seed, workers,
output directory).  Validation collects every field-level problem before
raising, so a bad file surfaces all its mistakes at once.  Override
precedence is command line over environment (``SCUMLAB_*``) over file.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

from .errors import ConfigError
from .families import (
    BinaryAR,
    FrozenTailKernel,
    MarkovChain,
    MarkovMixture,
    PoissonRegression,
    RenewalKernel,
    WindowVoteKernel,
)
from .kernels import Kernel, PastSpec
from .series import GeometricTail, LagSeries, PowerTail

KINDS = (
    "regularity",
    "couple",
    "gcb-mgf",
    "gcb-deviation",
    "birkhoff",
    "dkw",
    "dbar",
    "renewal",
)

ENV_PREFIX = "SCUMLAB_"


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    kernel: dict
    params: dict = field(default_factory=dict)
    seed: int = 0
    workers: int = 1
    out: str = "out"

    def echo(self) -> str:
        body = {
            "kind": self.kind,
            "kernel": self.kernel,
            "params": self.params,
            "seed": self.seed,
            "workers": self.workers,
            "out": self.out,
        }
        return json.dumps(body, sort_keys=True)


def parse_tail(spec, errors, where: str):
    if spec is None:
        return None
    if not isinstance(spec, dict):
        errors.append(f"{where}: tail must be an object or null")
        return None
    kind = spec.get("kind")
    try:
        if kind == "power":
            return PowerTail(float(spec["coeff"]), float(spec["exponent"]))
        if kind == "geometric":
            return GeometricTail(float(spec["coeff"]), float(spec["ratio"]))
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"{where}: bad tail parameters ({exc})")
        return None
    errors.append(f"{where}: tail kind must be 'power' or 'geometric'")
    return None


def parse_series(spec, errors, where: str):
    if not isinstance(spec, dict):
        errors.append(f"{where}: series must be an object")
        return None
    tail = parse_tail(spec.get("tail"), errors, where)
    try:
        return LagSeries(
            tuple(float(v) for v in spec.get("prefix", ())),
            tail,
            int(spec.get("start", 1)),
        )
    except (TypeError, ValueError) as exc:
        errors.append(f"{where}: {exc}")
        return None


def parse_past(spec, errors, where: str) -> "PastSpec | None":
    if spec is None:
        return None
    if isinstance(spec, int):
        return PastSpec.constant(spec)
    if not isinstance(spec, dict):
        errors.append(f"{where}: past must be an integer or an object")
        return None
    try:
        explicit = tuple(int(v) for v in spec.get("explicit", ()))
        fill = tuple(int(v) for v in spec.get("fill", ()))
        if not fill:
            errors.append(f"{where}: past needs a nonempty fill")
            return None
        return PastSpec(explicit=explicit, fill=fill)
    except (TypeError, ValueError) as exc:
        errors.append(f"{where}: {exc}")
        return None


def build_kernel(spec, errors=None) -> "Kernel | None":
    """Construct a kernel from its JSON description.

    With ``errors`` given, problems are appended there and None comes back;
    without it a ConfigError carries them.
    """
    own = errors if errors is not None else []
    kernel = _build_kernel(spec, own)
    if errors is None and own:
        raise ConfigError(own)
    return kernel


def _build_kernel(spec, errors) -> "Kernel | None":
    if not isinstance(spec, dict):
        errors.append("kernel: must be an object with a 'family' field")
        return None
    family = spec.get("family")
    try:
        if family == "markov":
            return MarkovChain(spec["matrix"])
        if family == "binary-ar":
            series = parse_series(spec.get("xi"), errors, "kernel.xi")
            if series is None:
                return None
            return BinaryAR(float(spec.get("xi0", 0.0)), series)
        if family == "poisson":
            series = parse_series(spec.get("xi"), errors, "kernel.xi")
            if series is None:
                return None
            return PoissonRegression(
                series,
                int(spec["cap"]),
                float(spec.get("truncation", 1e-12)),
            )
        if family == "mixture":
            components = [
                (int(c["order"]), c["table"]) for c in spec.get("components", ())
            ]
            return MarkovMixture(components, spec.get("weights", ()))
        if family == "renewal":
            tail = parse_tail(spec.get("tail"), errors, "kernel.tail")
            return RenewalKernel(
                tuple(float(q) for q in spec.get("prefix", ())),
                float(spec.get("limit", 0.0)),
                tail,
            )
        if family == "window-vote":
            return WindowVoteKernel(
                float(spec["eps"]),
                spec.get("weights", ()),
                spec.get("windows", ()),
                phi=spec.get("phi", "linear"),
                tail_weight=float(spec.get("tail_weight", 0.0)),
            )
        if family == "frozen":
            base = _build_kernel(spec.get("base"), errors)
            beyond = parse_past(spec.get("beyond"), errors, "kernel.beyond")
            if base is None or beyond is None:
                return None
            return FrozenTailKernel(base, int(spec.get("window", 1)), beyond)
    except ConfigError:
        raise
    except Exception as exc:  # constructor-level validation failures
        errors.append(f"kernel ({family}): {exc}")
        return None
    errors.append(f"kernel: unknown family {family!r}")
    return None


def parse_config(raw) -> ExperimentConfig:
    """Validate the raw JSON object and freeze it into an ExperimentConfig."""
    errors: "list[str]" = []
    if not isinstance(raw, dict):
        raise ConfigError(["configuration must be a JSON object"])
    kind = raw.get("kind")
    if kind not in KINDS:
        errors.append(f"kind: must be one of {', '.join(KINDS)} (got {kind!r})")
    kernel = raw.get("kernel")
    if not isinstance(kernel, dict):
        errors.append("kernel: required object")
        kernel = {}
    else:
        _build_kernel(kernel, errors)
    params = raw.get("params", {})
    if not isinstance(params, dict):
        errors.append("params: must be an object")
        params = {}
    else:
        _check_params(kind, params, errors)
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0 or seed > 2**64 - 1:
        errors.append("seed: must be an unsigned 64-bit integer")
        seed = 0
    workers = raw.get("workers", 1)
    if not isinstance(workers, int) or not 1 <= workers <= 64:
        errors.append("workers: must be an integer in 1..64")
        workers = 1
    out = raw.get("out", "out")
    if not isinstance(out, str) or not out:
        errors.append("out: must be a nonempty path")
        out = "out"
    unknown = set(raw) - {"kind", "kernel", "params", "seed", "workers", "out"}
    for key in sorted(unknown):
        errors.append(f"{key}: unknown top-level field")
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(
        kind=kind, kernel=kernel, params=params, seed=seed, workers=workers, out=out
    )


_PARAM_RANGES = {
    "n_steps": (1, 10**7, int),
    "n_runs": (1, 10**8, int),
    "n_paths": (1, 10**8, int),
    "burn_in": (0, 10**6, int),
    "depth": (0, 24, int),
    "max_lag": (1, 10**5, int),
    "n_max": (1, 10**6, int),
    "n": (2, 10**7, int),
    "n_terms": (1, 10**6, int),
    "confidence_z": (0.5, 16.0, float),
    "reference_budget": (0.0, 1.0, float),
    "symbol": (-(10**6), 10**6, int),
}

_PARAM_LISTS = ("thetas", "us", "ks", "lower_bounds")
_PARAM_STRUCTURED = ("past", "past_right", "reference", "observable")


def _check_params(kind, params, errors) -> None:
    for name, value in sorted(params.items()):
        if name in _PARAM_LISTS:
            if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and math.isfinite(v) for v in value
            ):
                errors.append(f"params.{name}: must be a list of finite numbers")
            continue
        if name in _PARAM_STRUCTURED:
            continue  # structured fields checked by the experiment builder
        if name in _PARAM_RANGES:
            lo, hi, typ = _PARAM_RANGES[name]
            if typ is int and not isinstance(value, int):
                errors.append(f"params.{name}: must be an integer")
            elif not isinstance(value, (int, float)) or not lo <= value <= hi:
                errors.append(f"params.{name}: must lie in [{lo}, {hi}]")
            continue
        errors.append(f"params.{name}: unknown parameter for kind {kind!r}")


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"config file: {exc}"])
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config file: invalid JSON ({exc})"])
    return parse_config(raw)


def apply_overrides(
    cfg: ExperimentConfig,
    *,
    seed: "int | None" = None,
    workers: "int | None" = None,
    out: "str | None" = None,
    env: "dict | None" = None,
) -> ExperimentConfig:
    """Layer environment and command-line values over the file values."""
    env = os.environ if env is None else env
    errors = []

    def env_int(name):
        text = env.get(ENV_PREFIX + name)
        if text is None:
            return None
        try:
            return int(text)
        except ValueError:
            errors.append(f"{ENV_PREFIX}{name}: not an integer ({text!r})")
            return None

    new_seed = env_int("SEED")
    new_workers = env_int("WORKERS")
    new_out = env.get(ENV_PREFIX + "OUT")
    if seed is not None:
        new_seed = seed
    if workers is not None:
        new_workers = workers
    if out is not None:
        new_out = out
    if errors:
        raise ConfigError(errors)
    updated = cfg
    if new_seed is not None:
        updated = replace(updated, seed=new_seed)
    if new_workers is not None:
        updated = replace(updated, workers=new_workers)
    if new_out is not None:
        updated = replace(updated, out=new_out)
    return updated
