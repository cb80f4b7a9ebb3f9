"""Labelled rooted trees, the Connes-Kreimer coproduct and branched rough paths.

A tree is a pair ``(label, children)`` with ``children`` a sorted tuple of
trees; a forest is a sorted tuple of trees and ``()`` is the empty forest
(the unit). Sorting makes isomorphic labelled trees compare equal.

Text encoding: ``"1"`` is a single vertex, ``"1(2,3(1))"`` a root with
children; forests are space-separated trees and the unit is ``""``.

Coproduct convention: ``Delta tau = sum P (x) R`` over admissible cuts with the
pruned forest ``P`` on the left and the trunk ``R`` (containing the root) on
the right. Hence for a path lift, ``X_{s,t} * X_{t,u} = X_{s,u}``.
"""

from __future__ import annotations

import itertools
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import tensor_algebra as ta
from .errors import DimensionMismatch, InputError
from .pvar_sewing import PathSamples, as_path, sup_over_dissections

Tree = tuple  # (label, tuple[Tree, ...])
Forest = tuple  # tuple[Tree, ...], sorted

FOREST_CAP = 6
LIFT_CAP = 5
UNIT: Forest = ()


# ---------------------------------------------------------------------------
# trees and forests


def make_tree(label: int, children: Iterable[Tree] = ()) -> Tree:
    return (int(label), tuple(sorted(children)))


def make_forest(trees: Iterable[Tree]) -> Forest:
    return tuple(sorted(trees))


def leaf(label: int) -> Tree:
    return (int(label), ())


def ladder(i: int, j: int) -> Tree:
    """[•_i]_j: root j with one child i, whose coefficient is int X^i dX^j."""
    return make_tree(j, [leaf(i)])


def graft(forest: Forest, label: int) -> Tree:
    """[forest]_label: join the trees of ``forest`` to a new root."""
    return (int(label), tuple(forest))


def tree_size(t: Tree) -> int:
    return 1 + sum(tree_size(c) for c in t[1])


def forest_size(f: Forest) -> int:
    return sum(tree_size(t) for t in f)


def forest_mul(a: Forest, b: Forest) -> Forest:
    return tuple(sorted(a + b))


def encode_tree(t: Tree) -> str:
    label, children = t
    if not children:
        return str(label)
    return f"{label}(" + ",".join(encode_tree(c) for c in children) + ")"


def encode_forest(f: Forest) -> str:
    return " ".join(encode_tree(t) for t in f)


def parse_tree(text: str) -> Tree:
    text = text.strip()
    tree, pos = _parse_tree_at(text, 0)
    if pos != len(text):
        raise InputError(f"trailing characters in tree encoding {text!r}")
    return tree


def _parse_tree_at(text: str, pos: int) -> tuple[Tree, int]:
    start = pos
    while pos < len(text) and text[pos].isdigit():
        pos += 1
    if pos == start:
        raise InputError(f"expected a label at position {start} of {text!r}")
    label = int(text[start:pos])
    children = []
    if pos < len(text) and text[pos] == "(":
        pos += 1
        while True:
            child, pos = _parse_tree_at(text, pos)
            children.append(child)
            if pos >= len(text):
                raise InputError(f"unbalanced parentheses in {text!r}")
            if text[pos] == ",":
                pos += 1
            elif text[pos] == ")":
                pos += 1
                break
            else:
                raise InputError(f"unexpected {text[pos]!r} in {text!r}")
    return make_tree(label, children), pos


def parse_forest(text: str) -> Forest:
    return make_forest(parse_tree(part) for part in text.split())


@lru_cache(maxsize=None)
def _trees_of_size(d: int, k: int) -> tuple[Tree, ...]:
    if k < 1:
        return ()
    return tuple(sorted(graft(f, i) for i in range(1, d + 1) for f in _forests_of_size(d, k - 1)))


@lru_cache(maxsize=None)
def _forests_of_size(d: int, k: int) -> tuple[Forest, ...]:
    if k == 0:
        return (UNIT,)
    pool = [t for m in range(1, k + 1) for t in _trees_of_size(d, m)]
    sizes = [tree_size(t) for t in pool]
    out = []

    def rec(start: int, remaining: int, acc: list) -> None:
        if remaining == 0:
            out.append(tuple(acc))
            return
        for idx in range(start, len(pool)):
            if sizes[idx] <= remaining:
                acc.append(pool[idx])
                rec(idx, remaining - sizes[idx], acc)
                acc.pop()

    rec(0, k, [])
    return tuple(sorted(make_forest(f) for f in out))


def enumerate_trees(d: int, N: int) -> list[Tree]:
    _check_forest_level(d, N)
    return [t for k in range(1, N + 1) for t in _trees_of_size(d, k)]


def enumerate_forests(d: int, N: int) -> list[Forest]:
    """All forests with at most N vertices, the unit first, ordered by size."""
    _check_forest_level(d, N)
    return [f for k in range(N + 1) for f in _forests_of_size(d, k)]


def _check_forest_level(d: int, N: int, cap: int = FOREST_CAP) -> None:
    if d < 1:
        raise InputError(f"dimension must be >= 1, got {d}")
    if N < 0 or N > cap:
        raise ta.LevelCapError(f"forest level {N} outside [0, {cap}]")


# ---------------------------------------------------------------------------
# formal sums and the coproduct


class ForestSum(Mapping):
    """Finite linear combination of forests (or of forest pairs); zeros dropped."""

    def __init__(self, terms: Mapping | Iterable = ()):
        acc = defaultdict(float)
        items = terms.items() if isinstance(terms, Mapping) else terms
        for key, c in items:
            acc[key] += c
        self._terms = {k: v for k, v in acc.items() if v != 0}

    def __getitem__(self, key):
        return self._terms.get(key, 0)

    def __iter__(self):
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __add__(self, other: ForestSum) -> ForestSum:
        return ForestSum(list(self.items()) + list(other.items()))

    def __rmul__(self, c: float) -> ForestSum:
        return ForestSum({k: c * v for k, v in self.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, Mapping) and dict(self.items()) == {k: v for k, v in other.items() if v != 0}

    def __repr__(self) -> str:
        def fmt(k):
            if isinstance(k, tuple) and len(k) == 2 and all(isinstance(x, tuple) and (not x or isinstance(x[0], tuple)) for x in k):
                return f"{encode_forest(k[0]) or '1'} (x) {encode_forest(k[1]) or '1'}"
            return encode_forest(k) or "1"

        return " + ".join(f"{v:g}*[{fmt(k)}]" for k, v in self._terms.items()) or "0"


def _pair_mul(x: dict, y: dict) -> dict:
    out = defaultdict(int)
    for (a, b), c in x.items():
        for (u, v), e in y.items():
            out[(forest_mul(a, u), forest_mul(b, v))] += c * e
    return dict(out)


@lru_cache(maxsize=None)
def _tree_coproduct(t: Tree) -> tuple:
    label, children = t
    acc = {(UNIT, UNIT): 1}
    for child in children:
        acc = _pair_mul(acc, dict(_tree_coproduct(child)))
    out = defaultdict(int)
    for (left, right), c in acc.items():
        out[(left, (graft(right, label),))] += c
    out[((t,), UNIT)] += 1
    return tuple(out.items())


@lru_cache(maxsize=None)
def _forest_coproduct(f: Forest) -> tuple:
    acc = {(UNIT, UNIT): 1}
    for t in f:
        acc = _pair_mul(acc, dict(_tree_coproduct(t)))
    return tuple(acc.items())


def ck_coproduct(x) -> ForestSum:
    """Coproduct of a forest, a tree or a ForestSum, by the grafting recursion."""
    if isinstance(x, ForestSum):
        out = defaultdict(float)
        for f, c in x.items():
            for pair, m in _forest_coproduct(f):
                out[pair] += c * m
        return ForestSum(out)
    f = _as_forest(x)
    return ForestSum(dict(_forest_coproduct(f)))


def _as_forest(x) -> Forest:
    if isinstance(x, str):
        return parse_forest(x)
    if isinstance(x, tuple) and len(x) == 2 and isinstance(x[0], int):
        return (x,)
    return make_forest(x)


def admissible_cuts(t: Tree) -> ForestSum:
    """Coproduct of a tree by direct enumeration of admissible cuts."""
    # flatten: vertex list with parent pointers
    labels, parent, kids = [], [], []

    def visit(node, par):
        idx = len(labels)
        labels.append(node[0])
        parent.append(par)
        kids.append([])
        if par >= 0:
            kids[par].append(idx)
        for c in node[1]:
            visit(c, idx)

    visit(t, -1)

    def subtree(v, removed):
        return make_tree(labels[v], [subtree(c, removed) for c in kids[v] if c not in removed])

    def ancestors(v):
        out = set()
        while parent[v] >= 0:
            v = parent[v]
            out.add(v)
        return out

    anc = [ancestors(v) for v in range(len(labels))]
    out = defaultdict(int)
    nonroot = range(1, len(labels))
    for r in range(len(labels)):
        for cut in itertools.combinations(nonroot, r):
            if any(a in anc[b] for a in cut for b in cut):
                continue
            removed = set(cut)
            pruned = make_forest(subtree(v, set()) for v in cut)
            out[(pruned, (subtree(0, removed),))] += 1
    out[((t,), UNIT)] += 1
    return ForestSum(dict(out))


# ---------------------------------------------------------------------------
# characters and the Grossman-Larson product


@dataclass(frozen=True)
class _ForestTable:
    forests: tuple
    index: dict
    trees: tuple
    # GL product table: target, left, right, coefficient
    target: np.ndarray
    left: np.ndarray
    right: np.ndarray
    coef: np.ndarray
    scatter: sp.csr_matrix
    # forests with >= 2 trees: index and factor indices (split off first tree)
    composite: np.ndarray
    head: np.ndarray
    tail: np.ndarray


@lru_cache(maxsize=None)
def forest_table(d: int, N: int) -> _ForestTable:
    forests = tuple(enumerate_forests(d, N))
    index = {f: k for k, f in enumerate(forests)}
    trees = tuple(f[0] for f in forests if len(f) == 1)
    tgt, lft, rgt, cf = [], [], [], []
    for f in forests:
        for (a, b), c in _forest_coproduct(f):
            tgt.append(index[f])
            lft.append(index[a])
            rgt.append(index[b])
            cf.append(c)
    tgt = np.array(tgt, dtype=np.intp)
    scatter = sp.csr_matrix((np.ones(len(tgt)), (np.arange(len(tgt)), tgt)), shape=(len(tgt), len(forests)))
    comp = [index[f] for f in forests if len(f) >= 2]
    head = [index[(forests[k][0],)] for k in comp]
    tail = [index[forests[k][1:]] for k in comp]
    return _ForestTable(
        forests, index, trees, tgt, np.array(lft, dtype=np.intp), np.array(rgt, dtype=np.intp),
        np.array(cf, dtype=float), scatter, np.array(comp, dtype=np.intp),
        np.array(head, dtype=np.intp), np.array(tail, dtype=np.intp),
    )


@dataclass(frozen=True, eq=False)
class Character:
    """Linear functional on forests with at most N vertices.

    ``data[..., k]`` is the value on ``forest_table(d, N).forests[k]``; leading
    axes hold batches (for example a trajectory over time).
    """

    d: int
    N: int
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=float)
        if data.shape[-1] != len(self.table.forests):
            raise DimensionMismatch(f"expected {len(self.table.forests)} forest values, got {data.shape[-1]}")
        object.__setattr__(self, "data", data)

    @property
    def table(self) -> _ForestTable:
        return forest_table(self.d, self.N)

    @classmethod
    def unit(cls, d: int, N: int, batch: tuple = ()) -> Character:
        table = forest_table(d, N)
        data = np.zeros(batch + (len(table.forests),))
        data[..., 0] = 1.0
        return cls(d, N, data)

    @classmethod
    def from_tree_values(cls, d: int, N: int, values: Mapping) -> Character:
        """Multiplicative extension of tree values (missing trees read as 0)."""
        table = forest_table(d, N)
        sample = next(iter(values.values()), 0.0)
        batch = np.shape(sample)
        data = np.zeros(batch + (len(table.forests),))
        data[..., 0] = 1.0
        for t in table.trees:
            if t in values:
                data[..., table.index[(t,)]] = values[t]
        _fill_forests(data, table)
        return cls(d, N, data)

    @classmethod
    def from_mapping(cls, d: int, N: int, values: Mapping) -> Character:
        """Arbitrary functional from forest values (no multiplicative fill)."""
        table = forest_table(d, N)
        data = np.zeros(len(table.forests))
        for f, v in values.items():
            data[table.index[_as_forest(f)]] = v
        return cls(d, N, data)

    @classmethod
    def delta(cls, d: int, N: int, forest) -> Character:
        """The dual basis element of ``forest``."""
        return cls.from_mapping(d, N, {_as_forest(forest): 1.0})

    def __getitem__(self, forest):
        return self.data[..., self.table.index[_as_forest(forest)]]

    def as_dict(self) -> dict[str, float]:
        return {encode_forest(f): float(v) for f, v in zip(self.table.forests, self.data)}

    def __add__(self, other: Character) -> Character:
        _check_pair(self, other)
        return Character(self.d, self.N, self.data + other.data)

    def __sub__(self, other: Character) -> Character:
        _check_pair(self, other)
        return Character(self.d, self.N, self.data - other.data)

    def scale(self, c: float) -> Character:
        return Character(self.d, self.N, c * self.data)

    def distance(self, other: Character) -> float:
        _check_pair(self, other)
        return float(np.max(np.abs(self.data - other.data)))

    def multiplicativity_defect(self) -> float:
        t = self.table
        if t.composite.size == 0:
            return float(np.max(np.abs(self.data[..., 0] - 1.0)))
        prod = self.data[..., t.head] * self.data[..., t.tail]
        return float(max(np.max(np.abs(self.data[..., t.composite] - prod)), np.max(np.abs(self.data[..., 0] - 1.0))))

    def is_character(self, tol: float = 1e-10) -> bool:
        return self.multiplicativity_defect() <= tol


def _fill_forests(data: np.ndarray, table: _ForestTable) -> None:
    # composite forests are listed after their factors (ordered by size)
    for k, h, r in zip(table.composite, table.head, table.tail):
        data[..., k] = data[..., h] * data[..., r]


def _check_pair(a: Character, b: Character) -> None:
    if (a.d, a.N) != (b.d, b.N):
        raise DimensionMismatch(f"characters over (d={a.d}, N={a.N}) and (d={b.d}, N={b.N})")


def gl_product(a: Character, b: Character) -> Character:
    """<a * b, tau> = sum over cuts of <a, pruned> <b, trunk>."""
    _check_pair(a, b)
    t = a.table
    contrib = t.coef * a.data[..., t.left] * b.data[..., t.right]
    batch = contrib.shape[:-1]
    flat = contrib.reshape(-1, contrib.shape[-1])
    out = (t.scatter.T @ flat.T).T
    return Character(a.d, a.N, np.asarray(out).reshape(batch + (len(t.forests),)))


def gl_inverse(g: Character) -> Character:
    """Inverse of a functional with value 1 on the unit, by the truncated Neumann series."""
    if np.any(np.abs(g.data[..., 0] - 1.0) > 1e-12):
        raise InputError("only functionals with unit value 1 are invertible here")
    unit = Character.unit(g.d, g.N, g.data.shape[:-1])
    x = unit - g  # so g = 1 - x and g^{-1} = sum x^k
    out, power = unit, unit
    for _ in range(g.N):
        power = gl_product(power, x)
        out = out + power
    return out


# ---------------------------------------------------------------------------
# embedding of the tensor algebra


@lru_cache(maxsize=None)
def linear_extensions(f: Forest) -> tuple:
    """Words read off a forest with children before parents, with multiplicities."""
    if not f:
        return (((), 1),)
    out = Counter()
    for idx, t in enumerate(f):
        if idx > 0 and f[idx - 1] == t:
            continue  # identical trees give identical continuations; count via multiplicity
        mult = f.count(t)
        rest = f[:idx] + f[idx + 1 :]
        # remove the root of t last: the root is the final letter of this tree's block
        for word, c in _extensions_ending_with_root(t, rest):
            out[word] += mult * c
    return tuple(sorted(out.items()))


@lru_cache(maxsize=None)
def _extensions_ending_with_root(t: Tree, rest: Forest) -> tuple:
    # the last letter of any extension is the root of some tree; here it is t's root
    remaining = forest_mul(rest, t[1])
    return tuple((word + (t[0],), c) for word, c in linear_extensions(remaining))


def embed_tensor_to_gl(g: ta.TruncatedTensor, N: int | None = None) -> Character:
    """<embed(g), forest> = sum over children-first orderings of its vertices of g_word."""
    N = g.N if N is None else N
    if N > g.N:
        raise InputError(f"tensor of level {g.N} cannot fill forests with {N} vertices")
    table = forest_table(g.d, N)
    data = np.empty(len(table.forests))
    for k, f in enumerate(table.forests):
        data[k] = sum(c * g[word] for word, c in linear_extensions(f))
    return Character(g.d, N, data)


# ---------------------------------------------------------------------------
# branched rough paths


@dataclass(frozen=True, eq=False)
class BranchedRoughPath:
    """Trajectory ``t_i -> X_{0, t_i}`` of characters on a time grid."""

    times: np.ndarray
    d: int
    N: int
    data: np.ndarray  # (n+1, F)

    @property
    def n_points(self) -> int:
        return self.times.size

    def point(self, i: int) -> Character:
        return Character(self.d, self.N, self.data[i])

    @property
    def endpoint(self) -> Character:
        return self.point(-1)

    def increments(self, rows, cols) -> Character:
        """X_{t_i, t_j} = X_{0,t_i}^{-1} * X_{0,t_j} with broadcasting index arrays."""
        inv = gl_inverse(Character(self.d, self.N, self.data[np.asarray(rows)]))
        return gl_product(inv, Character(self.d, self.N, self.data[np.asarray(cols)]))

    def increment(self, i: int, j: int) -> Character:
        return self.increments(np.array(i), np.array(j))

    def __getitem__(self, forest) -> np.ndarray:
        """Trajectory of the coefficient of ``forest``."""
        return self.data[:, forest_table(self.d, self.N).index[_as_forest(forest)]]


def branched_lift_bv(x, N: int) -> BranchedRoughPath:
    """Left-point iterated sums: <X_{0,t}, [tau]_i> = sum_{r < t} <X_{0,r}, tau> dX^i_r."""
    x = as_path(x)
    if N > LIFT_CAP:
        raise ta.LevelCapError(f"branched lift level {N} exceeds cap {LIFT_CAP}")
    d = x.values.shape[1]
    table = forest_table(d, N)
    dx = np.diff(x.values, axis=0)
    data = np.zeros((x.times.size, len(table.forests)))
    data[:, 0] = 1.0
    for f in table.forests[1:]:
        k = table.index[f]
        if len(f) == 1:
            label, children = f[0]
            inner = data[:-1, table.index[children]]
            np.cumsum(inner * dx[:, label - 1], out=data[1:, k])
        else:
            data[:, k] = data[:, table.index[(f[0],)]] * data[:, table.index[f[1:]]]
    return BranchedRoughPath(x.times, d, N, data)


def branched_chen_defect(X: BranchedRoughPath, max_points: int = 25) -> float:
    """max over sampled grid triples of |X_{s,t} * X_{t,u} - X_{s,u}|."""
    sel = np.unique(np.linspace(0, X.n_points - 1, min(X.n_points, max_points)).round().astype(int))
    s, t, u = (np.array(v) for v in zip(*itertools.combinations(sel, 3)))
    lhs = gl_product(X.increments(s, t), X.increments(t, u))
    return float(np.max(np.abs(lhs.data - X.increments(s, u).data)))


def branched_pvar(X: BranchedRoughPath, p: float) -> dict[str, float]:
    """Per-tree (p/|tau|)-variation of increments over grid dissections."""
    if not p >= 1:
        raise InputError(f"p must be >= 1, got {p}")
    table = forest_table(X.d, X.N)
    trees = [t for t in table.trees if tree_size(t) <= p]
    cols_idx = np.array([table.index[(t,)] for t in trees])
    qs = np.array([p / tree_size(t) for t in trees])
    n = X.n_points

    def costs(j0, j1):
        inc = X.increments(np.arange(j1)[:, None], np.arange(j0, j1)[None, :]).data[..., cols_idx]
        return np.moveaxis(np.abs(inc) ** qs, -1, 0)

    res = sup_over_dissections(n, costs, block=max(8, (1 << 20) // max(1, n * len(table.forests))))
    vals = np.atleast_1d(res.value) ** (1.0 / qs)
    return {encode_tree(t): float(v) for t, v in zip(trees, vals)}


@dataclass(frozen=True)
class ItoBranchedReport:
    """<X,•_i><X,•_j> - <X,ladder(i,j)> - <X,ladder(j,i)> at the final time."""

    defect: np.ndarray  # (d, d) per sample, or (m, d, d) for an ensemble
    t: float

    def mean(self) -> np.ndarray:
        return self.defect.mean(axis=0) if self.defect.ndim == 3 else self.defect

    def stderr(self) -> np.ndarray:
        if self.defect.ndim != 3 or self.defect.shape[0] < 2:
            return np.zeros(self.defect.shape[-2:])
        return self.defect.std(axis=0, ddof=1) / np.sqrt(self.defect.shape[0])


def ito_branched_bm(w, t: float | None = None) -> ItoBranchedReport:
    """Ito branched lift (left-point sums) of one or several samples, up to time ``t``."""
    samples = w if isinstance(w, (list, tuple)) else [w]
    out = []
    T = None
    for s in samples:
        s = as_path(s)
        if t is not None:
            keep = s.times <= t + 1e-12 * max(1.0, abs(t))
            s = PathSamples(s.times[keep], s.values[keep])
        X = branched_lift_bv(s, 2)
        d = X.d
        D = np.empty((d, d))
        for i in range(1, d + 1):
            for j in range(1, d + 1):
                D[i - 1, j - 1] = (
                    X[(leaf(i),)][-1] * X[(leaf(j),)][-1] - X[(ladder(i, j),)][-1] - X[(ladder(j, i),)][-1]
                )
        out.append(D)
        T = s.times[-1] - s.times[0]
    defect = np.array(out) if isinstance(w, (list, tuple)) else out[0]
    return ItoBranchedReport(defect, float(T))
