"""Run configuration: YAML loading, defaults, validation, and wiring.

Validation reports every violation with the file path and the offending key
path (e.g. ``jump.epsilon``) instead of stopping at the first problem.
"""

import copy
from pathlib import Path

import numpy as np
import yaml

from . import targets as targets_mod
from .core import ConfigError, make_stream
from .interaction import JumpConfig, PotentialPair
from .ips import IpsConfig, KernelConfig, uniform_box_init, gaussian_init
from .samplers import SAMPLER_NAMES, LangevinConfig, step_decay

EXPERIMENTS = ("run2d", "oracle-suite", "poc", "mmd-selftest", "compare-dm")

DEFAULTS = {
    "label": "",
    "target": {"name": "grid_mog", "params": {}},
    "aux_target": {"name": "gaussian", "params": {"sigma": 20.0, "d": 2}},
    "primary_kernel": {"sampler": "mala", "step_size": 0.001},
    "auxiliary_kernel": {"sampler": "mala", "step_size": 0.001},
    "jump": {"interaction": "bg", "epsilon": 0.1},
    "particles": 2000,
    "n_sim": 10000,
    "record_every": 100,
    "seeds": [0, 1, 2, 3, 4],
    "init": {
        "primary": {"kind": "uniform_box", "low": [-7.5, -7.5], "high": [7.5, 7.5]},
        "auxiliary": {"kind": "uniform_box", "low": [-7.5, -7.5], "high": [7.5, 7.5]},
    },
    "metrics": {
        "mmd": {"ground_truth_samples": 10000, "subsample": 2000, "kernel_scales": [1.0, 2.0]}
    },
    "divergence_policy": "abort",
    "output": "runs/out",
}

ORACLE_DEFAULTS = {
    "label": "oracle",
    "instance": "bundled",
    "n_max": 200,
    "seeds": [0],
    "output": "runs/oracle",
}

POC_DEFAULTS = {
    "label": "poc",
    "instance": "bundled_poc",
    "n_list": [8, 16, 32, 64, 128],
    "n_steps": 10,
    "reps": 100_000,
    "seeds": [0],
    "output": "runs/poc",
}

SELFTEST_DEFAULTS = {
    "label": "mmd_selftest",
    "repetitions": 200,
    "samples": 500,
    "seeds": [0],
    "output": "runs/mmd_selftest",
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path) -> dict:
    path = Path(path)
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError(str(path), "config root must be a mapping")
    return resolve_config(raw)


def resolve_config(raw: dict) -> dict:
    experiment = raw.get("experiment", "run2d")
    if experiment in ("run2d", "compare-dm"):
        cfg = _deep_merge(DEFAULTS, raw)
    elif experiment == "oracle-suite":
        cfg = _deep_merge(ORACLE_DEFAULTS, raw)
    elif experiment == "poc":
        cfg = _deep_merge(POC_DEFAULTS, raw)
    elif experiment == "mmd-selftest":
        cfg = _deep_merge(SELFTEST_DEFAULTS, raw)
    else:
        cfg = copy.deepcopy(raw)
    cfg["experiment"] = experiment
    return cfg


def validate_config(cfg: dict) -> list:
    """Return a list of (key path, message) diagnostics; empty means valid."""
    problems = []

    def bad(key, msg):
        problems.append((key, msg))

    experiment = cfg.get("experiment")
    if experiment not in EXPERIMENTS:
        bad("experiment", f"must be one of {EXPERIMENTS}, got {experiment!r}")
        return problems

    seeds = cfg.get("seeds")
    if not isinstance(seeds, (list, tuple)) or len(seeds) == 0:
        bad("seeds", "must be a nonempty list of integers")
    elif not all(isinstance(s, int) for s in seeds):
        bad("seeds", "all seeds must be integers")

    if experiment in ("run2d", "compare-dm"):
        name = cfg["target"].get("name")
        if name not in targets_mod.REGISTRY:
            bad("target.name", f"unknown target {name!r}; registered: {sorted(targets_mod.REGISTRY)}")
        aux_name = cfg["aux_target"].get("name")
        if aux_name not in targets_mod.REGISTRY:
            bad("aux_target.name", f"unknown target {aux_name!r}; registered: {sorted(targets_mod.REGISTRY)}")

        interaction = cfg["jump"].get("interaction")
        if interaction not in ("bg", "ar", "none"):
            bad("jump.interaction", f"must be 'bg', 'ar' or 'none', got {interaction!r}")
        elif interaction != "none":
            eps = cfg["jump"].get("epsilon")
            if not isinstance(eps, (int, float)) or not 0.0 < float(eps) < 1.0:
                bad("jump.epsilon", f"must lie strictly in (0, 1), got {eps!r}")
        if experiment == "compare-dm" and interaction == "none":
            bad("jump.interaction", "compare-dm requires a jump interaction")

        for side in ("primary_kernel", "auxiliary_kernel"):
            sampler = cfg[side].get("sampler")
            if sampler not in SAMPLER_NAMES:
                bad(f"{side}.sampler", f"must be one of {SAMPLER_NAMES}, got {sampler!r}")
            step = cfg[side].get("step_size")
            if isinstance(step, dict):
                if step.get("kind") != "step_decay":
                    bad(f"{side}.step_size.kind", "schedules must use kind 'step_decay'")
            elif not isinstance(step, (int, float)) or float(step) <= 0:
                bad(f"{side}.step_size", f"must be positive, got {step!r}")
            tau = cfg[side].get("temper_tau", 1.0)
            if not isinstance(tau, (int, float)) or float(tau) <= 0:
                bad(f"{side}.temper_tau", f"must be positive, got {tau!r}")

        if not isinstance(cfg.get("particles"), int) or cfg["particles"] < 1:
            bad("particles", "must be a positive integer")
        if not isinstance(cfg.get("n_sim"), int) or cfg["n_sim"] < 0:
            bad("n_sim", "must be a nonnegative integer")
        if not isinstance(cfg.get("record_every"), int) or cfg["record_every"] < 1:
            bad("record_every", "must be a positive integer")
        if cfg.get("divergence_policy") not in ("abort", "reinit"):
            bad("divergence_policy", "must be 'abort' or 'reinit'")
        for side in ("primary", "auxiliary"):
            kind = cfg["init"].get(side, {}).get("kind")
            if kind not in ("uniform_box", "gaussian", "target"):
                bad(f"init.{side}.kind", f"must be 'uniform_box', 'gaussian' or 'target', got {kind!r}")

    if experiment == "poc":
        if not cfg.get("n_list"):
            bad("n_list", "must be a nonempty list of particle counts")
        if not isinstance(cfg.get("reps"), int) or cfg["reps"] < 1:
            bad("reps", "must be a positive integer")
        if not isinstance(cfg.get("n_steps"), int) or cfg["n_steps"] < 0:
            bad("n_steps", "must be a nonnegative integer")

    if experiment == "oracle-suite":
        inst = cfg.get("instance")
        if not (inst in ("bundled", "bundled_poc") or isinstance(inst, dict)):
            bad("instance", "must be 'bundled', 'bundled_poc' or an explicit mapping")

    return problems


def require_valid(cfg: dict, source: str = "<config>") -> None:
    problems = validate_config(cfg)
    if problems:
        lines = "\n".join(f"  {source}: {key}: {msg}" for key, msg in problems)
        raise ConfigError(source, f"invalid configuration:\n{lines}")


def _build_step_size(spec):
    if isinstance(spec, dict):
        return step_decay(
            float(spec["base"]), float(spec.get("factor", 0.1)), int(spec.get("every", 2000))
        )
    return float(spec)


def build_kernel_config(section: dict) -> KernelConfig:
    langevin = LangevinConfig(
        step_size=_build_step_size(section["step_size"]),
        temper_tau=float(section.get("temper_tau", 1.0)),
        rms_beta=float(section.get("rms_beta", 0.9)),
        rms_eps=float(section.get("rms_eps", 1e-9)),
    )
    return KernelConfig(sampler=section["sampler"], langevin=langevin)


def build_init(section: dict, target):
    kind = section["kind"]
    if kind == "uniform_box":
        return uniform_box_init(section["low"], section["high"])
    if kind == "gaussian":
        return gaussian_init(section["mean"], float(section["sigma"]))
    if kind == "target":
        return lambda rng: targets_mod.exact_sample(target, 1, rng)[0]
    raise ConfigError("init.kind", f"unknown init kind {kind!r}")


def build_particle_run(cfg: dict, seed: int):
    """Construct (IpsConfig, PotentialPair, target, aux_target) for one seed."""
    target = targets_mod.build_target(cfg["target"]["name"], cfg["target"].get("params"))
    aux = targets_mod.build_target(cfg["aux_target"]["name"], cfg["aux_target"].get("params"))
    pair = PotentialPair(pi=target, eta_star=aux)

    interaction = cfg["jump"]["interaction"]
    jump = None
    if interaction != "none":
        jump = JumpConfig(epsilon=float(cfg["jump"]["epsilon"]), kind=interaction)

    ips_cfg = IpsConfig(
        n_particles=cfg["particles"],
        n_sim=cfg["n_sim"],
        primary_kernel=build_kernel_config(cfg["primary_kernel"]),
        init_primary=build_init(cfg["init"]["primary"], target),
        jump=jump,
        auxiliary_kernel=build_kernel_config(cfg["auxiliary_kernel"]) if jump else None,
        init_auxiliary=build_init(cfg["init"]["auxiliary"], aux) if jump else None,
        seed=seed,
        record_every=cfg["record_every"],
        divergence_policy=cfg["divergence_policy"],
    )
    return ips_cfg, pair, target, aux
