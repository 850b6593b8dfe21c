"""Sample-quality metrics: unbiased MMD^2, predictive entropy, calibration errors."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist


@dataclass
class KernelSpec:
    """Sum-of-Gaussians kernel k(x, y) = sum_j exp(-s_j ||x - y||^2)."""

    scales: tuple = (1.0, 2.0)

    def __post_init__(self):
        self.scales = tuple(float(s) for s in self.scales)
        if any(s <= 0 for s in self.scales):
            raise ValueError("all kernel scales must be positive")

    def __call__(self, sq_dists: np.ndarray) -> np.ndarray:
        out = np.zeros_like(sq_dists, dtype=float)
        for s in self.scales:
            out += np.exp(-s * sq_dists)
        return out


def mmd2_unbiased(X, Y, kernel: KernelSpec = KernelSpec()) -> float:
    """Unbiased three-term U-statistic estimate of the squared MMD.

    Diagonal (i = j) terms are excluded from both within-sample sums, so the
    estimate is unbiased and may be negative.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    m, n = len(X), len(Y)
    if m < 2 or n < 2:
        raise ValueError("need at least 2 samples on each side")

    k_xx = kernel(cdist(X, X, "sqeuclidean"))
    k_yy = kernel(cdist(Y, Y, "sqeuclidean"))
    k_xy = kernel(cdist(X, Y, "sqeuclidean"))

    term_x = (k_xx.sum() - np.trace(k_xx)) / (m * (m - 1))
    term_y = (k_yy.sum() - np.trace(k_yy)) / (n * (n - 1))
    cross = 2.0 * k_xy.sum() / (m * n)
    return float(term_x + term_y - cross)


def entropy(p) -> float:
    """Shannon entropy in nats with the 0 log 0 = 0 convention.

    The input must lie on the simplex to within 1e-9 and is renormalized.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("probabilities must be nonnegative")
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError("probabilities must sum to 1 within 1e-9")
    p = p / total
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))


@dataclass
class CalibrationInput:
    """Per-example top-class confidence and correctness, plus a bin count."""

    confidences: np.ndarray
    correct: np.ndarray
    n_bins: int = 10

    def __post_init__(self):
        self.confidences = np.asarray(self.confidences, dtype=float)
        self.correct = np.asarray(self.correct, dtype=bool)
        if self.confidences.shape != self.correct.shape:
            raise ValueError("confidences and correctness flags must align")
        if np.any((self.confidences < 0) | (self.confidences > 1)):
            raise ValueError("confidences must lie in [0, 1]")
        if self.n_bins < 1:
            raise ValueError("need at least one bin")


def calibration_errors(inp: CalibrationInput):
    """Expected and maximum calibration error over equal-width confidence bins.

    Bins are [(k-1)/M, k/M) with the final bin right-closed. Empty bins
    contribute nothing to the ECE and are skipped for the MCE.
    """
    m = inp.n_bins
    idx = np.minimum((inp.confidences * m).astype(int), m - 1)
    n = len(inp.confidences)
    ece = 0.0
    mce = 0.0
    for k in range(m):
        mask = idx == k
        if not np.any(mask):
            continue
        acc = float(np.mean(inp.correct[mask]))
        conf = float(np.mean(inp.confidences[mask]))
        gap = abs(acc - conf)
        ece += (mask.sum() / n) * gap
        mce = max(mce, gap)
    return float(ece), float(mce)
