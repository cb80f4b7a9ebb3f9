"""Truncated tensor algebra T^N(R^d).

Elements are stored densely, one flat array of ``d**k`` coefficients per level
``k = 0..N``. Coefficients of level ``k`` are indexed lexicographically by
words ``(i_1, ..., i_k)`` over the alphabet ``1..d`` with the first letter most
significant, so the index of a word is its base-``d`` expansion.

The private ``_mul``/``_exp``/``_log``/``_inverse`` kernels act on lists of
arrays with arbitrary leading batch dimensions and are what the rough-path
code uses for whole trajectories at once. :class:`TruncatedTensor` wraps a
single element.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse

from .errors import DimensionMismatch, InputError, LevelCapError

Word = tuple[int, ...]

#: Default maximum truncation level for d >= 2 (memory grows like d**N).
LEVEL_CAP = 10

#: Default absolute tolerance for grouplike checks.
GROUPLIKE_TOL = 1e-9


def check_level(d: int, N: int, cap: int | None = None) -> None:
    if N < 0:
        raise InputError(f"truncation level must be >= 0, got {N}")
    cap = LEVEL_CAP if cap is None else cap
    if d >= 2 and N > cap:
        raise LevelCapError(f"level {N} exceeds the cap {cap} for d={d}")


# ---------------------------------------------------------------------------
# words


def parse_word(text: str) -> Word:
    """Parse the comma-separated encoding ``"1,2,3"``; ``""`` is the empty word."""
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise InputError(f"malformed word {text!r}") from exc


def format_word(word: Sequence[int]) -> str:
    return ",".join(str(int(i)) for i in word)


def words(d: int, k: int) -> list[Word]:
    """All words of length ``k`` in storage (lexicographic) order."""
    return list(itertools.product(range(1, d + 1), repeat=k))


def word_index(word: Sequence[int], d: int) -> int:
    idx = 0
    for letter in word:
        if not 1 <= letter <= d:
            raise InputError(f"letter {letter} outside alphabet 1..{d}")
        idx = idx * d + (letter - 1)
    return idx


def level_offsets(d: int, N: int) -> np.ndarray:
    """Start of each level in the flattened coefficient vector (length N+2)."""
    return np.concatenate([[0], np.cumsum([d**k for k in range(N + 1)])])


class FormalSum(Mapping):
    """Finite linear combination of words; zero coefficients are never stored."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Word, float] | Iterable[tuple[Word, float]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Word, float] = {}
        for w, c in items:
            w = tuple(w)
            acc[w] = acc.get(w, 0) + c
        self._terms = {w: c for w, c in acc.items() if c != 0}

    def __getitem__(self, word: Word) -> float:
        return self._terms[tuple(word)]

    def __iter__(self) -> Iterator[Word]:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __add__(self, other: FormalSum) -> FormalSum:
        return FormalSum(itertools.chain(self._terms.items(), other.items()))

    def __sub__(self, other: FormalSum) -> FormalSum:
        return self + (-1) * other

    def __mul__(self, scalar: float) -> FormalSum:
        return FormalSum((w, scalar * c) for w, c in self._terms.items())

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Mapping):
            return self._terms == dict(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        body = " + ".join(f"{c}*({format_word(w)})" for w, c in sorted(self._terms.items()))
        return f"FormalSum({body or '0'})"


@lru_cache(maxsize=None)
def _shuffle_terms(u: Word, v: Word) -> tuple[tuple[Word, int], ...]:
    if not u:
        return ((v, 1),)
    if not v:
        return ((u, 1),)
    acc: dict[Word, int] = {}
    # (u' a) sh (v' b) = (u' sh v'b) a + (u'a sh v') b
    for w, c in _shuffle_terms(u[:-1], v):
        key = w + (u[-1],)
        acc[key] = acc.get(key, 0) + c
    for w, c in _shuffle_terms(u, v[:-1]):
        key = w + (v[-1],)
        acc[key] = acc.get(key, 0) + c
    return tuple(sorted(acc.items()))


def shuffle(u: Sequence[int], v: Sequence[int]) -> FormalSum:
    """Shuffle product of two words, with integer multiplicities."""
    return FormalSum(dict(_shuffle_terms(tuple(u), tuple(v))))


# ---------------------------------------------------------------------------
# batch kernels: a tensor is a list of N+1 arrays of shape (..., d**k)


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = a[..., :, None] * b[..., None, :]
    return out.reshape(out.shape[:-2] + (a.shape[-1] * b.shape[-1],))


def _mul(a: Sequence[np.ndarray], b: Sequence[np.ndarray], N: int) -> list[np.ndarray]:
    out = []
    for m in range(N + 1):
        acc = a[0] * b[m] if m else a[0] * b[0]
        for i in range(1, m + 1):
            if i == m:
                acc = acc + a[m] * b[0]
            else:
                acc = acc + _outer(a[i], b[m - i])
        out.append(acc)
    return out


def _unit_like(x: Sequence[np.ndarray], d: int, N: int) -> list[np.ndarray]:
    batch = x[0].shape[:-1]
    out = [np.ones(batch + (1,))]
    out += [np.zeros(batch + (d**k,)) for k in range(1, N + 1)]
    return out


def _exp(x: Sequence[np.ndarray], d: int, N: int) -> list[np.ndarray]:
    one = _unit_like(x, d, N)
    res = one
    for k in range(N, 0, -1):
        prod = _mul(x, res, N)
        res = [o + p / k for o, p in zip(one, prod)]
    return res


def _log(g: Sequence[np.ndarray], d: int, N: int) -> list[np.ndarray]:
    u = [np.zeros_like(g[0])] + [np.asarray(lvl) for lvl in g[1:]]
    u[0] = np.asarray(g[0]) - 1.0
    one = _unit_like(g, d, N)
    # u * (1 - u*(1/2 - u*(1/3 - ...)))
    res = [o * ((-1) ** (N + 1) / N) for o in one]
    for k in range(N - 1, 0, -1):
        prod = _mul(u, res, N)
        res = [o * ((-1) ** (k + 1) / k) + p for o, p in zip(one, prod)]
    return _mul(u, res, N)


def _inverse(g: Sequence[np.ndarray], d: int, N: int) -> list[np.ndarray]:
    one = _unit_like(g, d, N)
    v = [o - np.asarray(lvl) for o, lvl in zip(one, g)]
    res = one
    for _ in range(N):
        prod = _mul(v, res, N)
        res = [o + p for o, p in zip(one, prod)]
    return res


def _exp_vector(v: np.ndarray, N: int) -> list[np.ndarray]:
    """exp of a level-1 element, batched over leading dims of ``v`` (..., d)."""
    out = [np.ones(v.shape[:-1] + (1,)), v]
    for k in range(2, N + 1):
        out.append(_outer(out[-1], v) / k)
    return out[: N + 1]


# ---------------------------------------------------------------------------
# single elements


@dataclass(frozen=True, eq=False)
class TruncatedTensor:
    """An element of T^N(R^d)."""

    d: int
    N: int
    levels: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if self.d < 1:
            raise InputError("dimension must be >= 1")
        if len(self.levels) != self.N + 1:
            raise InputError(f"expected {self.N + 1} levels, got {len(self.levels)}")
        frozen = []
        for k, lvl in enumerate(self.levels):
            arr = np.array(lvl, dtype=float).reshape(-1)
            if arr.size != self.d**k:
                raise InputError(f"level {k} must have {self.d**k} entries, got {arr.size}")
            if not np.all(np.isfinite(arr)):
                raise InputError(f"non-finite coefficient at level {k}")
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "levels", tuple(frozen))

    # constructors -------------------------------------------------------

    @classmethod
    def unit(cls, d: int, N: int) -> TruncatedTensor:
        return cls(d, N, tuple(np.eye(1, d**k).ravel() if k == 0 else np.zeros(d**k) for k in range(N + 1)))

    @classmethod
    def zero(cls, d: int, N: int) -> TruncatedTensor:
        return cls(d, N, tuple(np.zeros(d**k) for k in range(N + 1)))

    @classmethod
    def from_vector(cls, v: Sequence[float], N: int) -> TruncatedTensor:
        """The level-1 element ``(0, v, 0, ...)``."""
        v = np.asarray(v, dtype=float).ravel()
        levels = [np.zeros(v.size**k) for k in range(N + 1)]
        if N >= 1:
            levels[1] = v
        return cls(v.size, N, tuple(levels))

    @classmethod
    def from_words(cls, coeffs: Mapping[Word, float], d: int, N: int) -> TruncatedTensor:
        levels = [np.zeros(d**k) for k in range(N + 1)]
        for w, c in coeffs.items():
            if len(w) > N:
                raise InputError(f"word {w} longer than level {N}")
            levels[len(w)][word_index(w, d)] += c
        return cls(d, N, tuple(levels))

    @classmethod
    def from_flat(cls, flat: np.ndarray, d: int, N: int) -> TruncatedTensor:
        off = level_offsets(d, N)
        return cls(d, N, tuple(flat[off[k] : off[k + 1]] for k in range(N + 1)))

    # views --------------------------------------------------------------

    @property
    def scalar(self) -> float:
        return float(self.levels[0][0])

    def flat(self) -> np.ndarray:
        return np.concatenate(self.levels)

    def level_norms(self) -> np.ndarray:
        """Euclidean norm of every level."""
        return np.array([np.linalg.norm(lvl) for lvl in self.levels])

    def level_tensor(self, k: int) -> np.ndarray:
        """Level ``k`` reshaped to a ``(d,)*k`` array."""
        return self.levels[k].reshape((self.d,) * k)

    def truncate(self, N: int) -> TruncatedTensor:
        if N > self.N:
            pad = tuple(np.zeros(self.d**k) for k in range(self.N + 1, N + 1))
            return TruncatedTensor(self.d, N, self.levels + pad)
        return TruncatedTensor(self.d, N, self.levels[: N + 1])

    def coefficients(self) -> dict[Word, float]:
        return {w: float(c) for k in range(self.N + 1) for w, c in zip(words(self.d, k), self.levels[k])}

    def __getitem__(self, word: Sequence[int]) -> float:
        return pairing(self, word)

    # arithmetic ---------------------------------------------------------

    def _check(self, other: TruncatedTensor) -> None:
        if self.d != other.d or self.N != other.N:
            raise DimensionMismatch(f"T^{self.N}(R^{self.d}) vs T^{other.N}(R^{other.d})")

    def __add__(self, other: TruncatedTensor) -> TruncatedTensor:
        self._check(other)
        return TruncatedTensor(self.d, self.N, tuple(a + b for a, b in zip(self.levels, other.levels)))

    def __sub__(self, other: TruncatedTensor) -> TruncatedTensor:
        self._check(other)
        return TruncatedTensor(self.d, self.N, tuple(a - b for a, b in zip(self.levels, other.levels)))

    def __neg__(self) -> TruncatedTensor:
        return TruncatedTensor(self.d, self.N, tuple(-a for a in self.levels))

    def __mul__(self, other):
        if isinstance(other, TruncatedTensor):
            return tensor_mul(self, other)
        return TruncatedTensor(self.d, self.N, tuple(a * float(other) for a in self.levels))

    def __rmul__(self, scalar: float) -> TruncatedTensor:
        return TruncatedTensor(self.d, self.N, tuple(a * float(scalar) for a in self.levels))

    def __truediv__(self, scalar: float) -> TruncatedTensor:
        return self * (1.0 / scalar)

    def allclose(self, other: TruncatedTensor, atol: float = 1e-12, rtol: float = 0.0) -> bool:
        self._check(other)
        return all(np.allclose(a, b, atol=atol, rtol=rtol) for a, b in zip(self.levels, other.levels))

    def distance(self, other: TruncatedTensor) -> float:
        """Largest per-level Euclidean distance."""
        self._check(other)
        return float(max(np.linalg.norm(a - b) for a, b in zip(self.levels, other.levels)))

    def __repr__(self) -> str:
        return f"TruncatedTensor(d={self.d}, N={self.N}, levels={[lvl.tolist() for lvl in self.levels]})"


def tensor_mul(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """Truncated concatenation product."""
    a._check(b)
    return TruncatedTensor(a.d, a.N, tuple(_mul(a.levels, b.levels, a.N)))


def tensor_exp(x: TruncatedTensor, tol: float = 0.0) -> TruncatedTensor:
    if abs(x.scalar) > tol:
        raise InputError(f"tensor_exp needs zero scalar part, got {x.scalar}")
    return TruncatedTensor(x.d, x.N, tuple(_exp(x.levels, x.d, x.N)))


def tensor_log(g: TruncatedTensor, tol: float = 1e-12) -> TruncatedTensor:
    if abs(g.scalar - 1.0) > tol:
        raise InputError(f"tensor_log needs scalar part 1, got {g.scalar}")
    return TruncatedTensor(g.d, g.N, tuple(_log(g.levels, g.d, g.N)))


def group_inverse(g: TruncatedTensor, tol: float = 1e-12) -> TruncatedTensor:
    """Inverse of an element with scalar part 1 (Neumann series on 1 - g)."""
    if abs(g.scalar - 1.0) > tol:
        raise InputError(f"group_inverse needs scalar part 1, got {g.scalar}")
    return TruncatedTensor(g.d, g.N, tuple(_inverse(g.levels, g.d, g.N)))


def lie_bracket(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    return tensor_mul(a, b) - tensor_mul(b, a)


def pairing(x: TruncatedTensor, word: Sequence[int]) -> float:
    """Coefficient of ``word`` in ``x``."""
    word = tuple(word)
    if len(word) > x.N:
        raise InputError(f"word of length {len(word)} exceeds level {x.N}")
    return float(x.levels[len(word)][word_index(word, x.d)])


def pair_sum(x: TruncatedTensor, terms: Mapping[Word, float]) -> float:
    """Bilinear pairing of ``x`` with a formal sum of words."""
    return float(sum(c * pairing(x, w) for w, c in terms.items()))


@lru_cache(maxsize=32)
def _shuffle_table(d: int, N: int):
    """Sparse map flat(g) -> <g, u sh v> over all nonempty pairs |u|+|v| <= N."""
    off = level_offsets(d, N)
    rows, cols, vals, left, right = [], [], [], [], []
    pair = 0
    for a in range(1, N):
        for b in range(a, N - a + 1):
            for u in words(d, a):
                iu = off[a] + word_index(u, d)
                for v in words(d, b):
                    iv = off[b] + word_index(v, d)
                    if a == b and iv < iu:
                        continue
                    for w, c in _shuffle_terms(u, v):
                        rows.append(pair)
                        cols.append(off[a + b] + word_index(w, d))
                        vals.append(float(c))
                    left.append(iu)
                    right.append(iv)
                    pair += 1
    mat = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(pair, int(off[-1])))
    return mat, np.array(left, dtype=np.intp), np.array(right, dtype=np.intp)


def shuffle_defect(g: TruncatedTensor) -> float:
    """max |<g, u sh v> - <g,u><g,v>| over nonempty word pairs with |u|+|v| <= N."""
    if g.N < 2:
        return 0.0
    mat, left, right = _shuffle_table(g.d, g.N)
    flat = g.flat()
    return float(np.max(np.abs(mat @ flat - flat[left] * flat[right])))


def is_grouplike(g: TruncatedTensor, tol: float = GROUPLIKE_TOL) -> tuple[bool, float]:
    """Check the shuffle identities; returns ``(ok, max_defect)``.

    The scalar-part deviation ``|<g,1> - 1|`` counts towards the defect.
    """
    defect = max(abs(g.scalar - 1.0), shuffle_defect(g))
    return defect <= tol, defect


def exp_series_coefficient(v: Sequence[float], word: Sequence[int]) -> float:
    """Coefficient of ``word`` in exp(v) for a vector ``v``: prod v_i / k!."""
    v = np.asarray(v, dtype=float)
    return float(np.prod([v[i - 1] for i in word]) / math.factorial(len(word)))
