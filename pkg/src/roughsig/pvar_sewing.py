"""Sampled paths, p-variation by dynamic programming, grid sewing and Young integrals.

Dissections are always restricted to the sample times, so every supremum here
is an exact maximum over a finite set and is computed by the O(n^2) recursion

    best[j] = max_{i < j} best[i] + cost(i, j),

where ``cost(i, j)`` is the contribution of the interval ``[t_i, t_j]``.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InputError

#: Column-block size used when cost matrices are produced in slabs.
_BLOCK = 512
#: Rough bound on the number of cost entries materialised per slab.
_SLAB_ENTRIES = 1 << 21


@dataclass(frozen=True, eq=False)
class PathSamples:
    """Time-stamped points in R^d, read as the piecewise-linear interpolant.

    ``values`` has shape ``(n+1, d)``; matrix-valued paths (used as Young
    integrands) may carry extra trailing axes.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=float).reshape(-1)
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.size < 2:
            raise InputError("a path needs at least two samples")
        if values.shape[0] != times.size:
            raise InputError(f"{times.size} times but {values.shape[0]} sample rows")
        if not np.all(np.diff(times) > 0):
            bad = int(np.argmax(~(np.diff(times) > 0))) + 1
            raise InputError(f"times must be strictly increasing (row {bad})")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise InputError("non-finite sample")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def uniform(cls, values, T: float = 1.0) -> PathSamples:
        values = np.asarray(values, dtype=float)
        return cls(np.linspace(0.0, T, values.shape[0]), values)

    @property
    def n(self) -> int:
        """Number of segments."""
        return self.times.size - 1

    @property
    def dim(self) -> int:
        return int(np.prod(self.values.shape[1:]))

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    def restrict(self, i: int, j: int) -> PathSamples:
        return PathSamples(self.times[i : j + 1], self.values[i : j + 1])

    def concat(self, other: PathSamples) -> PathSamples:
        """Run ``other`` after ``self``, translated to start where ``self`` ends."""
        shift_t = self.times[-1] - other.times[0]
        shift_x = self.values[-1] - other.values[0]
        return PathSamples(
            np.concatenate([self.times, other.times[1:] + shift_t]),
            np.concatenate([self.values, other.values[1:] + shift_x]),
        )

    def reverse(self) -> PathSamples:
        t = self.times
        return PathSamples(t[0] + t[-1] - t[::-1], self.values[::-1])

    def reparametrize(self, phi: Callable[[np.ndarray], np.ndarray]) -> PathSamples:
        return PathSamples(phi(self.times), self.values)

    def resample(self, times: Sequence[float]) -> PathSamples:
        """Linear interpolation onto ``times`` (must lie inside the sample range)."""
        times = np.asarray(times, dtype=float)
        flat = self.values.reshape(self.values.shape[0], -1)
        cols = [np.interp(times, self.times, flat[:, c]) for c in range(flat.shape[1])]
        return PathSamples(times, np.stack(cols, axis=1).reshape((times.size,) + self.values.shape[1:]))


def union_grid(*paths: PathSamples) -> np.ndarray:
    lo = max(p.times[0] for p in paths)
    hi = min(p.times[-1] for p in paths)
    grid = np.unique(np.concatenate([p.times for p in paths]))
    return grid[(grid >= lo) & (grid <= hi)]


def as_path(x) -> PathSamples:
    return x if isinstance(x, PathSamples) else PathSamples.uniform(x)


# ---------------------------------------------------------------------------
# dissection dynamic programming


@dataclass(frozen=True)
class DissectionResult:
    value: float | np.ndarray
    points: tuple[int, ...]


def sup_over_dissections(
    n_points: int,
    column_cost: Callable[[int, int], np.ndarray],
    block: int = _BLOCK,
) -> DissectionResult:
    """Maximise ``sum cost(i, j)`` over dissections of ``0..n_points-1``.

    ``column_cost(j0, j1)`` must return the array ``C[:j1, j0:j1]`` of interval
    costs with rows indexing left endpoints; entries with ``i >= j`` are ignored.
    A leading axis ``(L, j1, j1-j0)`` runs L independent problems at once; then
    ``value`` is an array and ``points`` belongs to the first problem.
    """
    if n_points < 2:
        return DissectionResult(0.0, (0,))
    block = max(8, min(block, _SLAB_ENTRIES // n_points))
    best = None
    link = None
    stacked = False
    for j0 in range(1, n_points, block):
        j1 = min(j0 + block, n_points)
        costs = np.asarray(column_cost(j0, j1))
        if best is None:
            stacked = costs.ndim == 3
            L = costs.shape[0] if stacked else 1
            best = np.full((L, n_points), -np.inf)
            best[:, 0] = 0.0
            link = np.zeros((L, n_points), dtype=np.intp)
        if not stacked:
            costs = costs[None]
        rows = np.arange(best.shape[0])
        for j in range(j0, j1):
            cand = best[:, :j] + costs[:, :j, j - j0]
            k = np.argmax(cand, axis=1)
            best[:, j] = cand[rows, k]
            link[:, j] = k
    points = [n_points - 1]
    while points[-1] != 0:
        points.append(int(link[0, points[-1]]))
    value = best[:, -1].copy() if stacked else float(best[0, -1])
    return DissectionResult(value, tuple(reversed(points)))


def all_pairs_sup(cost: np.ndarray) -> np.ndarray:
    """Dissection maxima for every grid pair, from a dense cost matrix.

    Returns ``W`` with ``W[i, j] = max over dissections of [t_i, t_j]``; O(n^3).
    """
    n = cost.shape[0]
    W = np.full((n, n), -np.inf)
    np.fill_diagonal(W, 0.0)
    for j in range(1, n):
        # W[i, j] = max_{i <= k < j} W[i, k] + cost[k, j]
        W[:j, j] = np.max(W[:j, :j] + cost[:j, j][None, :], axis=1)
    return W


def _path_costs(values: np.ndarray, p: float) -> Callable[[int, int], np.ndarray]:
    flat = values.reshape(values.shape[0], -1)

    def costs(j0: int, j1: int) -> np.ndarray:
        diff = flat[None, j0:j1, :] - flat[:j1, None, :]
        return np.linalg.norm(diff, axis=-1) ** p

    return costs


def _check_p(p: float) -> None:
    if not p >= 1:
        raise InputError(f"p must be >= 1, got {p}")


def p_variation(x, p: float, *, return_points: bool = False):
    """p-variation of sampled data over sample-time dissections.

    ``p = inf`` gives the largest increment between any two samples.
    """
    _check_p(p)
    x = as_path(x)
    flat = x.values.reshape(x.values.shape[0], -1)
    if np.isinf(p):
        best = 0.0
        for j in range(1, flat.shape[0]):
            best = max(best, float(np.max(np.linalg.norm(flat[:j] - flat[j], axis=1))))
        return (best, ()) if return_points else best
    res = sup_over_dissections(flat.shape[0], _path_costs(flat, p))
    value = res.value ** (1.0 / p)
    return (value, res.points) if return_points else value


def p_variation_of_increments(norms: Callable[[int, int], np.ndarray], n_points: int, q: float) -> float:
    """q-variation of a two-parameter quantity given its interval norms.

    ``norms(j0, j1)`` returns ``|R(t_i, t_j)|`` for ``i < j1, j0 <= j < j1``.
    Used for controlled-path remainders, where ``q`` may drop below 1.
    """
    if q <= 0:
        raise InputError("variation exponent must be positive")
    res = sup_over_dissections(n_points, lambda j0, j1: norms(j0, j1) ** q)
    return res.value ** (1.0 / q)


@dataclass(frozen=True, eq=False)
class GridControl:
    """A control function tabulated on grid pairs (upper triangle used)."""

    times: np.ndarray
    omega: np.ndarray

    def __call__(self, i: int, j: int) -> float:
        return float(self.omega[i, j])

    def superadditivity_defect(self) -> float:
        """max over i<k<j of omega(i,k) + omega(k,j) - omega(i,j) (<= 0 when valid)."""
        w = self.omega
        n = w.shape[0]
        worst = -np.inf
        for k in range(1, n - 1):
            worst = max(worst, float(np.max(w[:k, k][:, None] + w[k, k + 1 :][None, :] - w[:k, k + 1 :])))
        return worst if n > 2 else 0.0


def control_from_pvar(x, p: float) -> GridControl:
    """omega(s,t) = p-variation of x on [s,t] raised to the p, for all grid pairs."""
    _check_p(p)
    x = as_path(x)
    flat = x.values.reshape(x.values.shape[0], -1)
    cost = np.linalg.norm(flat[None, :, :] - flat[:, None, :], axis=-1) ** p
    W = all_pairs_sup(cost)
    W[np.tril_indices_from(W, -1)] = 0.0
    return GridControl(x.times, W)


# ---------------------------------------------------------------------------
# sewing


@dataclass(frozen=True, eq=False)
class TwoParameterMap:
    """Xi(t_i, t_j) on a grid, evaluated lazily.

    ``func(i, j)`` takes integer index arrays and returns values with shape
    ``i.shape + value_shape``.
    """

    times: np.ndarray
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]

    @classmethod
    def from_dense(cls, times, table: np.ndarray) -> TwoParameterMap:
        table = np.asarray(table, dtype=float)
        return cls(np.asarray(times, dtype=float), lambda i, j: table[i, j])

    def __call__(self, i, j) -> np.ndarray:
        return self.func(np.asarray(i), np.asarray(j))

    def delta(self, i, k, j) -> np.ndarray:
        """delta Xi_{s,u,t} = Xi_{s,t} - Xi_{s,u} - Xi_{u,t}."""
        return self(i, j) - self(i, k) - self(k, j)


def sew(xi: TwoParameterMap) -> np.ndarray:
    """Finest-partition sewing: xi_{t_j} = sum_{i<j} Xi(t_i, t_{i+1})."""
    n = len(xi.times)
    if n < 2:
        raise InputError("sewing needs at least two grid points")
    idx = np.arange(n - 1)
    steps = xi(idx, idx + 1)
    out = np.zeros((n,) + steps.shape[1:])
    out[1:] = np.cumsum(steps, axis=0)
    return out


def sewing_defect(xi: TwoParameterMap, max_points: int = 200) -> float:
    """max over grid triples i<k<j of |delta Xi| (the grid is thinned to ``max_points``)."""
    n = len(xi.times)
    sel = np.unique(np.linspace(0, n - 1, min(n, max_points)).round().astype(int))
    worst = 0.0
    for a in range(len(sel)):
        for c in range(a + 2, len(sel)):
            ks = sel[a + 1 : c]
            i = np.full(ks.shape, sel[a])
            j = np.full(ks.shape, sel[c])
            vals = xi.delta(i, ks, j).reshape(ks.size, -1)
            worst = max(worst, float(np.max(np.linalg.norm(vals, axis=1))))
    return worst


def young_integral(y: PathSamples, x: PathSamples) -> PathSamples:
    """int Y dX by sewing Xi_{s,t} = Y_s (X_t - X_s).

    ``y`` has values of shape ``(n+1, e, d)`` or ``(n+1, d)`` (read as a single
    row, giving a scalar integral); ``x`` has values ``(n+1, d)``. Mismatched
    grids are merged by linear interpolation onto the union grid.
    """
    if y.times.shape != x.times.shape or not np.array_equal(y.times, x.times):
        grid = union_grid(y, x)
        y, x = y.resample(grid), x.resample(grid)
    yv = y.values
    if yv.ndim == 2:
        yv = yv[:, None, :]
    d = x.values.shape[1]
    if yv.shape[-1] != d:
        raise DimensionMismatch(f"integrand acts on R^{yv.shape[-1]}, integrator is R^{d}")
    xi = TwoParameterMap(
        x.times,
        lambda i, j: np.einsum("...ed,...d->...e", yv[i], x.values[j] - x.values[i]),
    )
    return PathSamples(x.times, sew(xi))
