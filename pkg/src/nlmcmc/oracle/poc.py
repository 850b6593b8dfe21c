"""Finite-chain particle experiments: propagation-of-chaos bias versus N.

Repetitions are simulated in vectorized chunks, each chunk on its own
independent stream; chunk histograms merge associatively, so results are
deterministic for a fixed (seed, chunk size) layout. Because primary
particles are conditionally independent given the auxiliary block, the
single-particle marginal only needs one primary particle per repetition.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..core import make_stream
from .finite import mean_field_flow, validate_kernel, validate_measure

_NS_POC = 17


def _draw_categorical(cum_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw per row; cum_rows is (..., S) gathered cumulative rows."""
    idx = np.sum(cum_rows <= u[..., None], axis=-1)
    return np.minimum(idx, cum_rows.shape[-1] - 1)


def _row_categorical(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws from per-row distributions without a 3-d intermediate.

    cum is (m, N) of cumulative weights ending at 1; u is (m, P) of uniforms.
    Rows are offset by their index so one flat searchsorted serves all rows.
    """
    m, N = cum.shape
    offsets = np.arange(m, dtype=float)[:, None]
    flat = (cum + offsets).ravel()
    idx = np.searchsorted(flat, (u + offsets).ravel(), side="right")
    idx = idx.reshape(u.shape) - np.arange(m)[:, None] * N
    return np.minimum(idx, N - 1)


def simulate_finite_ips(
    K,
    Q,
    G,
    epsilon: float,
    N: int,
    n_steps: int,
    reps: int,
    seed: int,
    mu0,
    eta0,
    kind: str = "bg",
    n_primary: int = 1,
    chunk: int = 16384,
    stream_tag: int = 0,
) -> np.ndarray:
    """Final primary states of `reps` independent N-particle runs, shape (reps, n_primary)."""
    K = validate_kernel(K)
    Q = validate_kernel(Q)
    G = np.asarray(G, dtype=float)
    mu0 = validate_measure(mu0)
    eta0 = validate_measure(eta0)
    kind = getattr(kind, "value", kind)
    if kind not in ("bg", "ar"):
        raise ValueError(f"unknown jump kind {kind!r}")

    Kcum = np.cumsum(K, axis=1)
    Qcum = np.cumsum(Q, axis=1)
    mu0cum = np.cumsum(mu0)
    eta0cum = np.cumsum(eta0)

    out = np.empty((reps, n_primary), dtype=np.int64)
    start = 0
    for chunk_idx in range(int(np.ceil(reps / chunk))):
        m = min(chunk, reps - start)
        rng = make_stream(seed, _NS_POC, stream_tag, chunk_idx)
        y = _draw_categorical(eta0cum[None, None, :], rng.random((m, N)))
        x = _draw_categorical(mu0cum[None, None, :], rng.random((m, n_primary)))
        for _ in range(n_steps):
            y = _draw_categorical(Qcum[y], rng.random((m, N)))
            coins = rng.random((m, n_primary)) < epsilon
            x_lin = _draw_categorical(Kcum[x], rng.random((m, n_primary)))
            if kind == "bg":
                wcum = np.cumsum(G[y], axis=1)
                wcum /= wcum[:, -1:]
                j = _row_categorical(wcum, rng.random((m, n_primary)))
                x_jump = np.take_along_axis(y, j, axis=1)
            else:
                j = rng.integers(N, size=(m, n_primary))
                prop = np.take_along_axis(y, j, axis=1)
                alpha = np.minimum(1.0, G[prop] / G[x])
                acc = rng.random((m, n_primary)) < alpha
                x_jump = np.where(acc, prop, x)
            x = np.where(coins, x_jump, x_lin)
        out[start : start + m] = x
        start += m
    return out


@dataclass
class PocPoint:
    N: int
    bias_tv: float
    std_err: float
    reps: int
    error_target_met: bool
    marginal: np.ndarray = field(repr=False, default=None)


@dataclass
class PocResult:
    points: list
    slope: Optional[float]
    exact_marginal: np.ndarray
    n_steps: int
    epsilon: float
    kind: str

    def to_dict(self) -> dict:
        return {
            "n_steps": self.n_steps,
            "epsilon": self.epsilon,
            "kind": self.kind,
            "slope": self.slope,
            "exact_marginal": self.exact_marginal.tolist(),
            "points": [
                {
                    "N": p.N,
                    "bias_tv": p.bias_tv,
                    "std_err": p.std_err,
                    "reps": p.reps,
                    "error_target_met": p.error_target_met,
                    "marginal": p.marginal.tolist(),
                }
                for p in self.points
            ],
        }


def _marginal_tv(counts: np.ndarray, exact: np.ndarray):
    total = counts.sum()
    p_hat = counts / total
    bias = float(np.abs(p_hat - exact).sum())
    # Delta-method error of sum_s sign_s p_hat_s with the signs frozen.
    signs = np.sign(p_hat - exact)
    var = max((1.0 - float(signs @ p_hat) ** 2) / total, 1e-300)
    return p_hat, bias, float(np.sqrt(var))


def poc_experiment(
    K,
    Q,
    G,
    epsilon: float,
    N_list,
    n_steps: int,
    reps: int,
    seed: int = 0,
    mu0=None,
    eta0=None,
    kind: str = "bg",
    error_ratio: float = 5.0,
    max_rep_factor: int = 8,
) -> PocResult:
    """Single-particle marginal TV bias of the N-particle system versus N.

    For each N the empirical marginal of one primary particle after n_steps
    is counted across repetitions and compared in TV against the exact
    mean-field marginal. Repetitions double adaptively (up to max_rep_factor
    times the base count) until the Monte Carlo error is below bias /
    error_ratio; points that exhaust the budget are flagged. The returned
    slope is the log-log fit of bias against N.
    """
    S = np.asarray(K).shape[0]
    mu0 = np.full(S, 1.0 / S) if mu0 is None else np.asarray(mu0, dtype=float)
    eta0 = np.full(S, 1.0 / S) if eta0 is None else np.asarray(eta0, dtype=float)
    mus, _ = mean_field_flow(K, Q, G, epsilon, mu0, eta0, n_steps, kind)
    exact = mus[-1]

    points = []
    for tag, N in enumerate(N_list):
        counts = np.zeros(S)
        reps_used = 0
        block = 0
        while True:
            draw = simulate_finite_ips(
                K, Q, G, epsilon, N, n_steps, reps, seed, mu0, eta0,
                kind=kind, n_primary=1, stream_tag=tag * 1000 + block,
            )
            counts += np.bincount(draw[:, 0], minlength=S)
            reps_used += reps
            block += 1
            _, bias, se = _marginal_tv(counts, exact)
            if se <= bias / error_ratio or reps_used >= reps * max_rep_factor:
                break
        p_hat, bias, se = _marginal_tv(counts, exact)
        points.append(
            PocPoint(
                N=int(N),
                bias_tv=bias,
                std_err=se,
                reps=reps_used,
                error_target_met=bool(se <= bias / error_ratio),
                marginal=p_hat,
            )
        )

    slope = None
    if len(points) >= 2 and all(p.bias_tv > 0 for p in points):
        slope = float(
            np.polyfit(np.log([p.N for p in points]), np.log([p.bias_tv for p in points]), 1)[0]
        )
    return PocResult(
        points=points, slope=slope, exact_marginal=exact,
        n_steps=n_steps, epsilon=epsilon, kind=getattr(kind, "value", kind),
    )


def mc_convergence_experiment(
    K,
    Q,
    G,
    epsilon: float,
    f,
    N_list,
    n_steps: int,
    n_seeds: int,
    seed: int = 0,
    mu0=None,
    eta0=None,
    kind: str = "bg",
):
    """Seed-averaged |particle average of f - exact mean-field expectation| per N."""
    from ..ips import particle_average

    S = np.asarray(K).shape[0]
    f = np.asarray(f, dtype=float)
    mu0 = np.full(S, 1.0 / S) if mu0 is None else np.asarray(mu0, dtype=float)
    eta0 = np.full(S, 1.0 / S) if eta0 is None else np.asarray(eta0, dtype=float)
    mus, _ = mean_field_flow(K, Q, G, epsilon, mu0, eta0, n_steps, kind)
    exact = float(mus[-1] @ f)

    errors = []
    for tag, N in enumerate(N_list):
        finals = simulate_finite_ips(
            K, Q, G, epsilon, N, n_steps, n_seeds, seed, mu0, eta0,
            kind=kind, n_primary=N, stream_tag=90_000 + tag,
        )
        avgs = np.array([particle_average(row[:, None], lambda s: f[s[:, 0].astype(int)]) for row in finals])
        errors.append(float(np.mean(np.abs(avgs - exact))))
    return {"N": list(map(int, N_list)), "mean_abs_error": errors, "exact": exact}
