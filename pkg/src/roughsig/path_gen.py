"""Seeded Brownian and fractional Brownian drivers.

Random numbers come from numpy's PCG64 generator. Trajectory ``k`` of an
ensemble with seed ``s`` uses seed ``s + k``, so ensembles can be split or
regenerated one member at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import InputError, NumericalError
from .pvar_sewing import PathSamples

JITTER = 1e-12


@dataclass(frozen=True)
class GenSpec:
    d: int = 1
    n: int = 1000
    T: float = 1.0
    seed: int = 0
    kind: str = "bm"
    H: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in ("bm", "fbm"):
            raise InputError(f"unknown driver kind {self.kind!r}")
        if self.d < 1 or self.n < 1:
            raise InputError("need d >= 1 and n >= 1")
        if not self.T > 0:
            raise InputError("horizon T must be positive")
        if not 0 < self.H < 1:
            raise InputError(f"Hurst parameter must lie in (0, 1), got {self.H}")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n + 1)

    def member(self, k: int) -> GenSpec:
        return replace(self, seed=self.seed + k)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def sample_bm(spec: GenSpec) -> PathSamples:
    if spec.kind != "bm":
        raise InputError("sample_bm needs kind='bm'")
    rng = _rng(spec.seed)
    inc = rng.standard_normal((spec.n, spec.d)) * np.sqrt(spec.T / spec.n)
    values = np.zeros((spec.n + 1, spec.d))
    np.cumsum(inc, axis=0, out=values[1:])
    return PathSamples(spec.times, values)


def fbm_covariance(times: np.ndarray, H: float) -> np.ndarray:
    s, t = np.meshgrid(times, times, indexing="ij")
    return 0.5 * (np.abs(s) ** (2 * H) + np.abs(t) ** (2 * H) - np.abs(t - s) ** (2 * H))


@lru_cache(maxsize=16)
def _fbm_factor(n: int, T: float, H: float) -> np.ndarray:
    times = np.linspace(0.0, T, n + 1)[1:]
    cov = fbm_covariance(times, H)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(cov + JITTER * np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"fBM covariance not positive definite after jitter (n={n}, H={H})") from exc


def sample_fbm(spec: GenSpec) -> PathSamples:
    """Exact Gaussian sampling through a Cholesky factor of the grid covariance."""
    if spec.kind != "fbm":
        raise InputError("sample_fbm needs kind='fbm'")
    L = _fbm_factor(spec.n, float(spec.T), float(spec.H))
    rng = _rng(spec.seed)
    z = rng.standard_normal((spec.n, spec.d))
    values = np.zeros((spec.n + 1, spec.d))
    values[1:] = L @ z
    return PathSamples(spec.times, values)


def sample(spec: GenSpec) -> PathSamples:
    return sample_bm(spec) if spec.kind == "bm" else sample_fbm(spec)


def ensemble(spec: GenSpec, count: int) -> list[PathSamples]:
    if count < 1:
        raise InputError("ensemble size must be >= 1")
    return [sample(spec.member(k)) for k in range(count)]


def ensemble_values(spec: GenSpec, count: int) -> np.ndarray:
    """Stacked values of shape (count, n+1, d), same draws as :func:`ensemble`."""
    return np.stack([p.values for p in ensemble(spec, count)])
