"""Toy target densities with exact ground-truth samplers.

Families: mixtures of Gaussians (circular and grid arrangements), a two-rings
density, isotropic Gaussians, and finite (discrete) targets for the exact
verification oracle. Mixture parameters are artifact choices, kept as
configuration; the defaults below are stand-ins for the usual benchmark
densities of this shape.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from .core import LogTarget, UnsupportedFamilyError

LOG_2PI = np.log(2.0 * np.pi)


def _logsumexp(a, keepdims=False):
    """Last-axis log-sum-exp; tolerates -inf entries (empty rows give -inf)."""
    m = np.max(a, axis=-1, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=-1, keepdims=True)) + m
    return out if keepdims else np.squeeze(out, axis=-1)


@dataclass
class MixtureOfGaussians:
    """Equal-API Gaussian mixture with exact normalized log-density.

    ``covariances`` may be scalars (isotropic), length-d vectors (diagonal)
    or full SPD matrices, one per component.
    """

    means: np.ndarray
    covariances: list
    weights: np.ndarray
    label: str = "mog"

    def __post_init__(self):
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        k, d = self.means.shape
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1")
        if np.any(self.weights < 0):
            raise ValueError("mixture weights must be nonnegative")
        covs = []
        for c in self.covariances:
            c = np.asarray(c, dtype=float)
            if c.ndim == 0:
                c = np.eye(d) * c
            elif c.ndim == 1:
                c = np.diag(c)
            covs.append(c)
        self._covs = np.stack(covs)
        self._chols = np.stack([np.linalg.cholesky(c) for c in covs])
        self._precs = np.stack([np.linalg.inv(c) for c in covs])
        self._logdets = np.array([2.0 * np.sum(np.log(np.diag(L))) for L in self._chols])
        self._log_w = np.where(self.weights > 0, np.log(np.maximum(self.weights, 1e-300)), -np.inf)
        # Isotropic components admit a much cheaper density/gradient path.
        self._iso_var = None
        iso = [c[0, 0] for c in covs if np.allclose(c, c[0, 0] * np.eye(d), atol=0.0)]
        if len(iso) == len(covs):
            self._iso_var = np.array(iso)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def _component_logpdfs(self, x):
        # (..., k) component log densities via the cached precisions
        x = np.asarray(x, dtype=float)
        if self._iso_var is not None:
            with np.errstate(over="ignore"):
                sq = np.sum(x**2, axis=-1)[..., None] - 2.0 * x @ self.means.T + np.sum(
                    self.means**2, axis=-1
                )
                return -0.5 * (sq / self._iso_var + self._logdets + self.dim * LOG_2PI)
        diff = x[..., None, :] - self.means  # (..., k, d)
        quad = np.einsum("...ki,kij,...kj->...k", diff, self._precs, diff)
        return -0.5 * (quad + self._logdets + self.dim * LOG_2PI)

    def log_density(self, x):
        return _logsumexp(self._component_logpdfs(x) + self._log_w)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        comp = self._component_logpdfs(x) + self._log_w
        with np.errstate(invalid="ignore"):
            resp = np.exp(comp - _logsumexp(comp, keepdims=True))  # (..., k)
        if self._iso_var is not None:
            scaled = resp / self._iso_var
            return (scaled @ self.means) - x * np.sum(scaled, axis=-1)[..., None]
        diff = x[..., None, :] - self.means
        comp_grad = -np.einsum("kij,...kj->...ki", self._precs, diff)  # (..., k, d)
        return np.einsum("...k,...ki->...i", resp, comp_grad)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        assign = rng.choice(len(self.weights), size=n, p=self.weights)
        z = rng.standard_normal((n, self.dim))
        out = np.empty((n, self.dim))
        for k in range(len(self.weights)):
            mask = assign == k
            out[mask] = self.means[k] + z[mask] @ self._chols[k].T
        return out


@dataclass
class TwoRings:
    """Equal mixture of two Gaussian-profile rings centered at the origin.

    The density is defined in polar coordinates: the radius follows a 1-d
    Gaussian mixture at the configured radii (restricted to r > 0) and the
    angle is uniform, so in Cartesian coordinates the unnormalized density
    carries a 1/r Jacobian factor. This makes the exact polar sampler and
    the log-density consistent. The r > 0 restriction is enforced by
    rejection; for ring_width << min(radii) the rejected mass is ~0.
    """

    radii: tuple = (2.0, 4.0)
    ring_width: float = 0.2
    weights: tuple = (0.5, 0.5)
    label: str = "two_rings"
    dim: int = 2

    def __post_init__(self):
        self._radii = np.asarray(self.radii, dtype=float)
        self._w = np.asarray(self.weights, dtype=float)
        if abs(self._w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1")
        if np.any(self._radii <= 0) or self.ring_width <= 0:
            raise ValueError("radii and ring_width must be positive")

    def _radial_logpdf(self, r):
        r = np.asarray(r, dtype=float)
        z = (r[..., None] - self._radii) / self.ring_width
        return logsumexp(-0.5 * z**2 + np.log(self._w), axis=-1)

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        with np.errstate(divide="ignore"):
            return self._radial_logpdf(r) - np.log(r)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        z = (r[..., None] - self._radii) / self.ring_width
        comp = -0.5 * z**2 + np.log(self._w)
        resp = np.exp(comp - logsumexp(comp, axis=-1, keepdims=True))
        dlogp_dr = np.sum(resp * (-(r[..., None] - self._radii) / self.ring_width**2), axis=-1)
        dlogp_dr = dlogp_dr - 1.0 / r
        return dlogp_dr[..., None] * x / r[..., None]

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        radii = np.empty(n)
        filled = 0
        while filled < n:
            m = n - filled
            comp = rng.choice(len(self._w), size=m, p=self._w)
            cand = self._radii[comp] + self.ring_width * rng.standard_normal(m)
            keep = cand > 0
            radii[filled : filled + keep.sum()] = cand[keep]
            filled += keep.sum()
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        return np.column_stack([radii * np.cos(theta), radii * np.sin(theta)])

    def radial_bin_probs(self, edges: np.ndarray) -> np.ndarray:
        """Exact probabilities of radius bins (truncated-mixture oracle)."""
        edges = np.asarray(edges, dtype=float)
        cdf = np.sum(
            self._w * norm.cdf((edges[:, None] - self._radii) / self.ring_width), axis=-1
        )
        z0 = np.sum(self._w * norm.cdf(-self._radii / self.ring_width))
        return np.diff(cdf) / (1.0 - z0)


@dataclass
class FiniteTarget:
    """Probability vector over S discrete states; oracle substrate."""

    probs: np.ndarray
    label: str = "finite"

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be a probability vector")

    @property
    def n_states(self) -> int:
        return self.probs.size

    def log_density(self, s):
        with np.errstate(divide="ignore"):
            return np.log(self.probs)[np.asarray(s, dtype=int)]

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.n_states, size=n, p=self.probs)


def logpdf(target, x) -> np.ndarray:
    """Log density of ``target`` at ``x`` (dimension-checked)."""
    x = np.asarray(x, dtype=float)
    dim = getattr(target, "dim", None)
    if dim is not None and x.shape[-1] != dim:
        raise ValueError(f"state has dimension {x.shape[-1]}, target expects {dim}")
    return target.log_density(x)


def exact_sample(target, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. draws from the normalized density of a supported family."""
    sampler = getattr(target, "sample", None)
    if sampler is None:
        raise UnsupportedFamilyError(
            f"no exact sampler for target {getattr(target, 'label', target)!r}"
        )
    return sampler(n, rng)


def isotropic_gaussian(sigma: float, d: int, label: str = "gaussian") -> MixtureOfGaussians:
    """Centered isotropic Gaussian N(0, sigma^2 I_d) as a one-component mixture."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return MixtureOfGaussians(
        means=np.zeros((1, d)), covariances=[sigma**2], weights=[1.0], label=label
    )


def make_auxiliary_gaussian(sigma: float, d: int) -> MixtureOfGaussians:
    """Auxiliary density: a broad centered Gaussian giving coarse coverage."""
    return isotropic_gaussian(sigma, d, label=f"aux_gaussian(sigma={sigma})")


def circular_mog(
    n_components: int = 8, radius: float = 4.0, sigma: float = 0.2
) -> MixtureOfGaussians:
    """Equal-weight Gaussians with means on a circle."""
    angles = 2.0 * np.pi * np.arange(n_components) / n_components
    means = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    return MixtureOfGaussians(
        means=means,
        covariances=[sigma**2] * n_components,
        weights=np.full(n_components, 1.0 / n_components),
        label="circ_mog",
    )


def grid_mog(side: int = 5, extent: float = 16.0, sigma: float = 0.5) -> MixtureOfGaussians:
    """Equal-weight Gaussians on a side x side grid spanning [-extent, extent]^2."""
    axis = np.linspace(-extent, extent, side)
    xs, ys = np.meshgrid(axis, axis)
    means = np.column_stack([xs.ravel(), ys.ravel()])
    k = side * side
    return MixtureOfGaussians(
        means=means, covariances=[sigma**2] * k, weights=np.full(k, 1.0 / k), label="grid_mog"
    )


def two_rings(
    radii=(2.0, 4.0), ring_width: float = 0.2, weights=(0.5, 0.5)
) -> TwoRings:
    return TwoRings(radii=tuple(radii), ring_width=ring_width, weights=tuple(weights))


# Families constructible from run configs, keyed by name.
REGISTRY = {
    "circ_mog": circular_mog,
    "grid_mog": grid_mog,
    "two_rings": two_rings,
    "gaussian": isotropic_gaussian,
    "finite": lambda probs: FiniteTarget(np.asarray(probs, dtype=float)),
}


def build_target(name: str, params: dict | None = None):
    """Construct a registered target family from config keys."""
    if name not in REGISTRY:
        raise UnsupportedFamilyError(
            f"unknown target {name!r}; registered targets: {sorted(REGISTRY)}"
        )
    return REGISTRY[name](**(params or {}))


def as_log_target(target) -> LogTarget:
    """View any target family through the generic LogTarget interface."""
    return LogTarget(
        dim=target.dim,
        log_density=target.log_density,
        gradient=getattr(target, "gradient", None),
        label=getattr(target, "label", ""),
    )
