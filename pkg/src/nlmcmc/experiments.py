"""Experiment implementations and on-disk artifact contract.

Every run directory receives manifest.json (fully resolved config, seeds,
git revision, status) plus the experiment's delimited outputs:

* trace.csv      -- columns step,seed,mmd2,tv_beta,jump_rate,mean_log_G,diverged_count
* final_samples.csv / final_aux_samples.csv -- seed,particle,x0,...,x{d-1}
* summary.json   -- per-seed and aggregated metric values

Identical config and seeds produce byte-identical CSVs: nothing here depends
on wall time or iteration order of unordered containers.
"""

import csv
import json
import math
import subprocess
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .core import NS_METRIC, make_stream
from .config import build_particle_run
from .interaction import PotentialPair
from .ips import RunTrace, mean_log_potential_hook, simulate_growing_history, simulate_ips
from .metrics import KernelSpec, mmd2_unbiased
from .oracle import (
    bundled_four_state,
    bundled_poc_instance,
    longtime_report,
    mc_convergence_experiment,
    poc_experiment,
)
from .oracle.instances import FiniteInstance
from .targets import exact_sample

TRACE_COLUMNS = ("step", "seed", "mmd2", "tv_beta", "jump_rate", "mean_log_G", "diverged_count")


def git_revision() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=10
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and math.isnan(value):
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def write_manifest(out_dir: Path, cfg: dict, status: str = "ok", extra: dict | None = None):
    payload = {
        "config": cfg,
        "seeds": cfg.get("seeds", []),
        "label": cfg.get("label", ""),
        "git_revision": git_revision(),
        "package_version": __version__,
        "status": status,
    }
    if extra:
        payload.update(extra)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_trace_csv(out_dir: Path, per_seed_traces: dict):
    with open(out_dir / "trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for seed in sorted(per_seed_traces):
            for row in per_seed_traces[seed].rows:
                writer.writerow(
                    [
                        row["step"],
                        seed,
                        _fmt(row.get("mmd2")),
                        _fmt(row.get("tv_beta")),
                        _fmt(row.get("jump_rate")),
                        _fmt(row.get("mean_log_G")),
                        row.get("diverged_count", 0),
                    ]
                )


def write_samples_csv(out_dir: Path, name: str, per_seed_states: dict):
    dims = {states.shape[1] for states in per_seed_states.values() if states is not None}
    if not dims:
        return
    d = dims.pop()
    with open(out_dir / name, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seed", "particle"] + [f"x{i}" for i in range(d)])
        for seed in sorted(per_seed_states):
            states = per_seed_states[seed]
            if states is None:
                continue
            for i, row in enumerate(states):
                writer.writerow([seed, i] + [_fmt(float(v)) for v in row])


def write_json(out_dir: Path, name: str, payload: dict):
    with open(out_dir / name, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def make_mmd_hook(cfg: dict, pair: PotentialPair, target, seed: int):
    """MMD^2 against a fixed exact ground-truth draw, on the recording cadence."""
    spec = cfg.get("metrics", {}).get("mmd")
    if not spec or getattr(target, "sample", None) is None:
        return None
    rng = make_stream(seed, NS_METRIC, 0)
    ground_truth = exact_sample(target, int(spec["ground_truth_samples"]), rng)
    sub = int(spec.get("subsample", len(ground_truth)))
    ground_truth = ground_truth[: min(sub, len(ground_truth))]
    kernel = KernelSpec(tuple(spec.get("kernel_scales", (1.0, 2.0))))

    def hook(step, xs, ys, _pair):
        return {"mmd2": mmd2_unbiased(xs, ground_truth, kernel)}

    return hook


def _one_seed(cfg: dict, seed: int, growing: bool = False) -> RunTrace:
    ips_cfg, pair, target, _aux = build_particle_run(cfg, seed)
    hooks = []
    mmd_hook = make_mmd_hook(cfg, pair, target, seed)
    if mmd_hook:
        hooks.append(mmd_hook)
    if ips_cfg.jump is not None:
        hooks.append(mean_log_potential_hook(pair))
    if growing:
        return simulate_growing_history(ips_cfg, pair, hooks)
    return simulate_ips(ips_cfg, pair, hooks)


def _run_seeds(cfg: dict, threads: int, growing: bool = False) -> dict:
    seeds = cfg["seeds"]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            traces = list(pool.map(lambda s: _one_seed(cfg, s, growing), seeds))
    else:
        traces = [_one_seed(cfg, s, growing) for s in seeds]
    return dict(zip(seeds, traces))


def _mmd_summary(per_seed: dict) -> dict:
    finals = {}
    for seed, trace in per_seed.items():
        vals = [row["mmd2"] for row in trace.rows if "mmd2" in row]
        finals[str(seed)] = vals[-1] if vals else None
    present = sorted(v for v in finals.values() if v is not None)
    agg = {}
    if present:
        agg = {
            "median_final_mmd2": float(np.median(present)),
            "iqr_final_mmd2": [
                float(np.percentile(present, 25)),
                float(np.percentile(present, 75)),
            ],
        }
    return {"per_seed_final_mmd2": finals, **agg}


def run_particles(cfg: dict, out_dir: Path, threads: int = 1, growing: bool = False) -> str:
    out_dir = Path(out_dir)
    per_seed = _run_seeds(cfg, threads, growing)
    status = "ok" if all(t.status == "ok" for t in per_seed.values()) else "diverged"
    write_manifest(out_dir, cfg, status=status, extra={"variant": "growing" if growing else "fixed"})
    write_trace_csv(out_dir, per_seed)
    write_samples_csv(out_dir, "final_samples.csv", {s: t.final_states for s, t in per_seed.items()})
    write_samples_csv(
        out_dir, "final_aux_samples.csv", {s: t.final_aux_states for s, t in per_seed.items()}
    )
    write_json(out_dir, "summary.json", {"status": status, **_mmd_summary(per_seed)})
    return status


def run_compare_dm(cfg: dict, out_dir: Path, threads: int = 1) -> str:
    """Paired fixed-N versus growing-history runs with a shared config."""
    out_dir = Path(out_dir)
    status_fixed = run_particles(cfg, out_dir / "fixed", threads, growing=False)
    status_growing = run_particles(cfg, out_dir / "growing", threads, growing=True)
    status = "ok" if (status_fixed, status_growing) == ("ok", "ok") else "diverged"

    summary = {}
    for variant in ("fixed", "growing"):
        with open(out_dir / variant / "summary.json") as fh:
            summary[variant] = json.load(fh)
    write_manifest(out_dir, cfg, status=status, extra={"variant": "compare-dm"})
    write_json(out_dir, "summary.json", {"status": status, **summary})
    return status


def _load_instance(spec) -> FiniteInstance:
    if spec == "bundled":
        return bundled_four_state()
    if spec == "bundled_poc":
        return bundled_poc_instance()
    return FiniteInstance(
        label=spec.get("label", "custom"),
        K=np.asarray(spec["K"], dtype=float),
        Q=np.asarray(spec["Q"], dtype=float),
        epsilon=float(spec["epsilon"]),
        kind=spec.get("kind", "bg"),
        mu0=np.asarray(spec["mu0"], dtype=float),
        eta0=np.asarray(spec["eta0"], dtype=float),
        V=np.asarray(spec.get("V", np.zeros(len(spec["mu0"]))), dtype=float),
        U=np.asarray(spec.get("U", np.ones(len(spec["mu0"]))), dtype=float),
    )


def run_oracle_suite(cfg: dict, out_dir: Path) -> str:
    out_dir = Path(out_dir)
    inst = _load_instance(cfg.get("instance", "bundled"))
    report = longtime_report(
        inst.K, inst.Q, inst.epsilon, inst.mu0, inst.eta0,
        n_max=int(cfg.get("n_max", 200)), kind=inst.kind,
    )
    # tightest Lyapunov constants at the conventional 0.9 drift factor
    from .oracle import DriftSpec, check_drift

    a, xi = 0.9, 0.9
    b = max(check_drift(inst.K, inst.V, a).b_min, 1e-12)
    c = max(check_drift(inst.Q, inst.U, xi).b_min, 1e-12)
    drift = DriftSpec(V=inst.V, U=inst.U, a=a, b=b, xi=xi, c=c)
    payload = report.to_dict()
    payload["drift"] = {
        "V": drift.V.tolist(), "U": drift.U.tolist(),
        "a": drift.a, "b": drift.b, "xi": drift.xi, "c": drift.c,
    }
    write_manifest(out_dir, cfg, extra={"instance_label": inst.label})
    write_json(out_dir, "theory_report.json", payload)
    with open(out_dir / "tv_sequences.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "tv_mu", "tv_eta", "eps_J"])
        for n in range(len(report.tv_mu)):
            writer.writerow(
                [n, _fmt(float(report.tv_mu[n])), _fmt(float(report.tv_eta[n])), _fmt(float(report.eps_J_per_step[n]))]
            )
    return "ok"


def run_poc(cfg: dict, out_dir: Path) -> str:
    out_dir = Path(out_dir)
    inst = _load_instance(cfg.get("instance", "bundled_poc"))
    seed = cfg["seeds"][0]
    result = poc_experiment(
        inst.K, inst.Q, inst.G, inst.epsilon,
        N_list=cfg["n_list"], n_steps=cfg["n_steps"], reps=cfg["reps"],
        seed=seed, mu0=inst.mu0, eta0=inst.eta0, kind=inst.kind,
    )
    mc = None
    if cfg.get("mc_check"):
        mc = mc_convergence_experiment(
            inst.K, inst.Q, inst.G, inst.epsilon,
            f=np.asarray(cfg["mc_check"].get("f", [1.0] + [0.0] * (inst.n_states - 1))),
            N_list=cfg["mc_check"].get("n_list", [100, 1000, 10000]),
            n_steps=cfg["n_steps"], n_seeds=int(cfg["mc_check"].get("n_seeds", 64)),
            seed=seed, mu0=inst.mu0, eta0=inst.eta0, kind=inst.kind,
        )
    write_manifest(out_dir, cfg, extra={"instance_label": inst.label})
    payload = result.to_dict()
    if mc is not None:
        payload["mc_check"] = mc
    write_json(out_dir, "summary.json", payload)
    with open(out_dir / "poc_points.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["N", "bias_tv", "std_err", "reps", "error_target_met"])
        for p in result.points:
            writer.writerow([p.N, _fmt(p.bias_tv), _fmt(p.std_err), p.reps, p.error_target_met])
    return "ok"


def run_mmd_selftest(cfg: dict, out_dir: Path) -> bool:
    """Unbiasedness and closed-form checks for the MMD estimator; prints a table."""
    from scipy.integrate import quad

    out_dir = Path(out_dir)
    reps = int(cfg.get("repetitions", 200))
    n = int(cfg.get("samples", 500))
    kernel = KernelSpec()
    rng = make_stream(cfg["seeds"][0], NS_METRIC, 1)

    checks = []

    # k at squared distance 1 has a closed form.
    value = float(kernel(np.array([1.0]))[0])
    expected = float(np.exp(-1.0) + np.exp(-2.0))
    checks.append(("kernel value at ||x-y||^2 = 1", value, expected, abs(value - expected) < 1e-12))

    # Identical two-point samples give exactly zero.
    zero = mmd2_unbiased(np.zeros((2, 1)), np.zeros((2, 1)), kernel)
    checks.append(("equal point masses", zero, 0.0, abs(zero) < 1e-12))

    # Mean over repetitions with mu = nu is 0 within 3 standard errors.
    draws = np.array(
        [mmd2_unbiased(rng.standard_normal((n, 2)), rng.standard_normal((n, 2)), kernel) for _ in range(reps)]
    )
    se = float(draws.std(ddof=1) / np.sqrt(reps))
    checks.append(
        ("null mean (3 SE)", float(draws.mean()), 0.0, bool(abs(draws.mean()) <= 3 * se))
    )

    # 1-d N(0,1) vs N(1,1) against quadrature of the population value.
    def population_mmd2():
        total = 0.0
        for s in kernel.scales:
            def within(z):
                return np.exp(-s * z**2) * np.exp(-(z**2) / 4.0) / np.sqrt(4.0 * np.pi)

            def between(z):
                return np.exp(-s * z**2) * np.exp(-((z + 1.0) ** 2) / 4.0) / np.sqrt(4.0 * np.pi)

            ww = quad(within, -np.inf, np.inf)[0]
            bb = quad(between, -np.inf, np.inf)[0]
            total += 2.0 * (ww - bb)
        return total

    target = population_mmd2()
    draws_shift = np.array(
        [
            mmd2_unbiased(rng.standard_normal((n, 1)), rng.standard_normal((n, 1)) + 1.0, kernel)
            for _ in range(reps)
        ]
    )
    se_shift = float(draws_shift.std(ddof=1) / np.sqrt(reps))
    checks.append(
        (
            "N(0,1) vs N(1,1) vs quadrature (3 SE)",
            float(draws_shift.mean()),
            float(target),
            bool(abs(draws_shift.mean() - target) <= 3 * se_shift),
        )
    )

    all_ok = all(ok for _, _, _, ok in checks)
    write_manifest(out_dir, cfg, status="ok" if all_ok else "failed")
    write_json(
        out_dir,
        "selftest.json",
        {
            "checks": [
                {"name": name, "value": val, "expected": exp, "ok": ok}
                for name, val, exp, ok in checks
            ],
            "all_ok": all_ok,
        },
    )
    width = max(len(c[0]) for c in checks)
    for name, val, exp, ok in checks:
        print(f"{name:<{width}}  value={val:+.6f}  expected={exp:+.6f}  {'PASS' if ok else 'FAIL'}")
    return all_ok
