"""Level-N rough paths on time grids.

A :class:`RoughPathGrid` stores the one-parameter trajectory ``g_i = X_{t_0, t_i}``
and recovers two-parameter increments as ``X_{t_i, t_j} = g_i^{-1} g_j``, so
Chen's identity holds by construction up to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np

from . import tensor_algebra as ta
from .errors import DimensionMismatch, InputError
from .pvar_sewing import PathSamples, as_path, sup_over_dissections
from .tensor_algebra import TruncatedTensor

_SLAB_ENTRIES = 1 << 21


@dataclass(frozen=True, eq=False)
class RoughPathGrid:
    """Grouplike (or at least scalar-one) trajectory on a time grid.

    ``levels[k]`` has shape ``(n+1, d**k)``; ``levels[0]`` is all ones.
    ``origin`` optionally records the starting point ``X_{t_0}`` of the
    underlying path so absolute values can be recovered.
    """

    times: np.ndarray
    d: int
    N: int
    levels: tuple[np.ndarray, ...]
    origin: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        if len(self.levels) != self.N + 1:
            raise InputError("level count does not match N")
        for k, lvl in enumerate(self.levels):
            if lvl.shape != (times.size, self.d**k):
                raise InputError(f"level {k} has shape {lvl.shape}, expected {(times.size, self.d**k)}")
            lvl.setflags(write=False)
        object.__setattr__(self, "times", times)

    # basic access ---------------------------------------------------------

    @property
    def n_points(self) -> int:
        return self.times.size

    def point(self, i: int) -> TruncatedTensor:
        return TruncatedTensor(self.d, self.N, tuple(lvl[i] for lvl in self.levels))

    @property
    def endpoint(self) -> TruncatedTensor:
        return self.point(-1)

    @cached_property
    def inverses(self) -> tuple[np.ndarray, ...]:
        return tuple(ta._inverse(self.levels, self.d, self.N))

    def increment(self, i: int, j: int) -> TruncatedTensor:
        inv = [lvl[i] for lvl in self.inverses]
        g = [lvl[j] for lvl in self.levels]
        return TruncatedTensor(self.d, self.N, tuple(ta._mul(inv, g, self.N)))

    def increments(self, rows, cols) -> list[np.ndarray]:
        """Batched ``X_{t_i, t_j}`` for broadcastable index arrays ``rows``, ``cols``."""
        rows, cols = np.asarray(rows), np.asarray(cols)
        inv = [lvl[rows] for lvl in self.inverses]
        g = [lvl[cols] for lvl in self.levels]
        return ta._mul(inv, g, self.N)

    def step_increments(self) -> list[np.ndarray]:
        idx = np.arange(self.n_points - 1)
        return self.increments(idx, idx + 1)

    def path(self) -> np.ndarray:
        """Level-1 trajectory, shifted by ``origin`` when known."""
        base = self.levels[1] if self.N >= 1 else np.zeros((self.n_points, self.d))
        return base + (0.0 if self.origin is None else self.origin)

    def truncate(self, N: int) -> RoughPathGrid:
        if N > self.N:
            raise InputError("use signature.extend to raise the level")
        return RoughPathGrid(self.times, self.d, N, self.levels[: N + 1], self.origin)

    def increment_table(self) -> IncrementTable:
        n = self.n_points
        rows, cols = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        return IncrementTable(self.times, self.d, self.N, tuple(self.increments(rows, cols)))

    def refine(self, times) -> RoughPathGrid:
        """Insert grid points by geodesic interpolation ``g_i exp(theta log X_{t_i,t_{i+1}})``.

        Exact for piecewise-linear lifts; preserves Chen's identity in general.
        """
        times = np.asarray(times, dtype=float)
        if times[0] < self.times[0] - 1e-15 or times[-1] > self.times[-1] + 1e-15:
            raise InputError("refinement grid leaves the time domain")
        seg = np.clip(np.searchsorted(self.times, times, side="right") - 1, 0, self.n_points - 2)
        theta = (times - self.times[seg]) / (self.times[seg + 1] - self.times[seg])
        step = self.increments(seg, seg + 1)
        logs = ta._log(step, self.d, self.N)
        scaled = [lvl * theta[:, None] for lvl in logs]
        scaled[0] = np.zeros_like(scaled[0])
        local = ta._exp(scaled, self.d, self.N)
        base = [lvl[seg] for lvl in self.levels]
        return RoughPathGrid(times, self.d, self.N, tuple(ta._mul(base, local, self.N)), self.origin)


@dataclass(frozen=True, eq=False)
class IncrementTable:
    """Externally supplied two-parameter increments ``levels[k][i, j]``."""

    times: np.ndarray
    d: int
    N: int
    levels: tuple[np.ndarray, ...]

    def with_level(self, k: int, values: np.ndarray) -> IncrementTable:
        levels = list(self.levels)
        levels[k] = np.asarray(values, dtype=float)
        return IncrementTable(self.times, self.d, self.N, tuple(levels))


class Level2RoughPath(RoughPathGrid):
    """A level-2 rough path (1, X, area) with the Brownian lift variant recorded."""

    variant: str = "canonical"

    @property
    def area(self) -> np.ndarray:
        """``X^2_{t_0, t_i}`` as ``(n+1, d, d)`` matrices."""
        return self.levels[2].reshape(-1, self.d, self.d)

    @property
    def levy_area(self) -> np.ndarray:
        a = self.area
        return 0.5 * (a - np.swapaxes(a, 1, 2))


# ---------------------------------------------------------------------------
# constructions


def _trajectory_from_steps(steps: list[np.ndarray], d: int, N: int) -> list[np.ndarray]:
    """Prefix products g_{i+1} = g_i * step_i, built level by level with cumsums."""
    n = steps[0].shape[0]
    g = [np.ones((n + 1, 1))]
    for m in range(1, N + 1):
        acc = np.zeros((n, d**m))
        for a in range(m):
            acc += ta._outer(g[a][:-1], steps[m - a]) if a else steps[m]
        lvl = np.zeros((n + 1, d**m))
        np.cumsum(acc, axis=0, out=lvl[1:])
        g.append(lvl)
    return g


def lift_piecewise_linear(x, N: int, *, cap: int | None = None) -> RoughPathGrid:
    """Canonical level-N lift of the piecewise-linear interpolant of ``x``."""
    x = as_path(x)
    if N < 1:
        raise InputError("lift level must be >= 1")
    d = x.values.shape[1]
    ta.check_level(d, N, cap)
    steps = ta._exp_vector(x.increments, N)
    return RoughPathGrid(x.times, d, N, tuple(_trajectory_from_steps(steps, d, N)), x.values[0].copy())


def brownian_lift(w, variant: Literal["ito", "stratonovich", "strat"] = "stratonovich") -> Level2RoughPath:
    """Level-2 lift of sampled Brownian data.

    Each step contributes area 0 (Ito, left-point rule at sample resolution) or
    ``1/2 D_i (x) D_i`` (Stratonovich, the chord), composed by Chen's identity.
    """
    w = as_path(w)
    d = w.values.shape[1]
    dx = w.increments
    if variant in ("strat", "stratonovich"):
        area = 0.5 * ta._outer(dx, dx)
        variant = "stratonovich"
    elif variant == "ito":
        area = np.zeros((dx.shape[0], d * d))
    else:
        raise InputError(f"unknown lift variant {variant!r}")
    steps = [np.ones((dx.shape[0], 1)), dx, area]
    out = Level2RoughPath(w.times, d, 2, tuple(_trajectory_from_steps(steps, d, 2)), w.values[0].copy())
    object.__setattr__(out, "variant", variant)
    return out


def from_steps(times, steps: list[np.ndarray], d: int, N: int, origin=None) -> RoughPathGrid:
    """Rough path whose consecutive increments are the given step tensors."""
    return RoughPathGrid(np.asarray(times, dtype=float), d, N, tuple(_trajectory_from_steps(steps, d, N)), origin)


# ---------------------------------------------------------------------------
# diagnostics and metrics


def _level_max_norm(levels: list[np.ndarray]) -> np.ndarray:
    return np.max(np.stack([np.linalg.norm(lvl, axis=-1) for lvl in levels], axis=0), axis=0)


def chen_defect(X: RoughPathGrid | IncrementTable, max_points: int = 40) -> float:
    """max over grid triples of ``|X_{s,t} X_{t,u} - X_{s,u}|`` (largest per-level norm).

    Grids with more than ``max_points`` points are thinned evenly first.
    """
    n = X.times.size
    sel = np.unique(np.linspace(0, n - 1, min(n, max_points)).round().astype(int))
    i, k, j = (a.ravel() for a in np.meshgrid(sel, sel, sel, indexing="ij"))
    keep = (i < k) & (k < j)
    i, k, j = i[keep], k[keep], j[keep]
    if i.size == 0:
        return 0.0
    if isinstance(X, IncrementTable):
        def inc(a, b):
            return [lvl[a, b] for lvl in X.levels]
    else:
        inc = X.increments
    lhs = ta._mul(inc(i, k), inc(k, j), X.N)
    rhs = inc(i, j)
    return float(np.max(_level_max_norm([a - b for a, b in zip(lhs, rhs)])))


def _block(n: int, width: int) -> int:
    return max(8, min(512, _SLAB_ENTRIES // max(1, n * width)))


def rough_pvar(X: RoughPathGrid, p: float) -> float:
    """p-variation of a rough path: levels 1..floor(p) weighted by exponent p/k."""
    if not p >= 1:
        raise InputError(f"p must be >= 1, got {p}")
    top = int(np.floor(p))
    if top > X.N:
        raise InputError(f"floor(p)={top} exceeds the rough path level {X.N}")
    n = X.n_points

    def costs(j0, j1):
        inc = X.increments(np.arange(j1)[:, None], np.arange(j0, j1)[None, :])
        return np.max(
            np.stack([np.linalg.norm(inc[k], axis=-1) ** (p / k) for k in range(1, top + 1)]), axis=0
        )

    res = sup_over_dissections(n, costs, block=_block(n, X.d**top))
    return res.value ** (1.0 / p)


def align(X: RoughPathGrid, Y: RoughPathGrid) -> tuple[RoughPathGrid, RoughPathGrid]:
    if X.d != Y.d or X.N != Y.N:
        raise DimensionMismatch("rough paths differ in dimension or level")
    if X.times.shape == Y.times.shape and np.array_equal(X.times, Y.times):
        return X, Y
    lo, hi = max(X.times[0], Y.times[0]), min(X.times[-1], Y.times[-1])
    grid = np.unique(np.concatenate([X.times, Y.times]))
    grid = grid[(grid >= lo) & (grid <= hi)]
    return X.refine(grid), Y.refine(grid)


def rough_distance(X: RoughPathGrid, Y: RoughPathGrid, p: float) -> float:
    """Inhomogeneous p-variation distance, levels 1..floor(p)."""
    if not p >= 1:
        raise InputError(f"p must be >= 1, got {p}")
    X, Y = align(X, Y)
    top = int(np.floor(p))
    if top > X.N:
        raise InputError(f"floor(p)={top} exceeds the rough path level {X.N}")
    n = X.n_points
    out = 0.0
    for k in range(1, top + 1):
        def costs(j0, j1, k=k):
            r, c = np.arange(j1)[:, None], np.arange(j0, j1)[None, :]
            diff = X.increments(r, c)[k] - Y.increments(r, c)[k]
            return np.linalg.norm(diff, axis=-1) ** (p / k)

        res = sup_over_dissections(n, costs, block=_block(n, X.d**top))
        out = max(out, res.value ** (k / p))
    return out


def is_geometric(X: RoughPathGrid, tol: float = ta.GROUPLIKE_TOL) -> tuple[bool, float]:
    """Shuffle identities checked on every trajectory point (hence every increment)."""
    worst = max(ta.is_grouplike(X.point(i), tol)[1] for i in range(X.n_points))
    return worst <= tol, worst


__all__ = [
    "IncrementTable",
    "Level2RoughPath",
    "PathSamples",
    "RoughPathGrid",
    "brownian_lift",
    "chen_defect",
    "from_steps",
    "is_geometric",
    "lift_piecewise_linear",
    "rough_distance",
    "rough_pvar",
]
