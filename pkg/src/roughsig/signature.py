"""Signatures, log-signatures in the Lyndon basis, and multiplicative extension."""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma, zeta

from . import tensor_algebra as ta
from .errors import InputError, NumericalError
from .pvar_sewing import PathSamples, as_path
from .rough_path import RoughPathGrid, lift_piecewise_linear
from .tensor_algebra import TruncatedTensor, Word

#: Largest tolerated non-Lie residual of a log-signature.
LIE_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Signature:
    """Truncated signature together with where it came from."""

    tensor: TruncatedTensor
    grid_size: int

    @property
    def d(self) -> int:
        return self.tensor.d

    @property
    def level(self) -> int:
        return self.tensor.N

    def __getitem__(self, word: Sequence[int]) -> float:
        return ta.pairing(self.tensor, word)

    def __mul__(self, other: Signature) -> Signature:
        return Signature(self.tensor * other.tensor, self.grid_size + other.grid_size - 1)


def signature(x, M: int, *, cap: int | None = None) -> Signature:
    """Level-M signature of the piecewise-linear interpolant of ``x``."""
    x = as_path(x)
    if M < 1:
        raise InputError("signature level must be >= 1")
    X = lift_piecewise_linear(x, M, cap=cap)
    return Signature(X.endpoint, x.times.size)


# ---------------------------------------------------------------------------
# Lyndon words and the free Lie algebra


def lyndon_words(d: int, M: int) -> list[Word]:
    """Lyndon words of length <= M, ordered by length then lexicographically (Duval)."""
    out: list[Word] = []
    w = [0]
    while w:
        w[-1] += 1
        out.append(tuple(w))
        m = len(w)
        while len(w) < M:
            w.append(w[len(w) - m])
        while w and w[-1] == d:
            w.pop()
    return sorted(out, key=lambda u: (len(u), u))


def witt_number(d: int, k: int) -> int:
    """Dimension of the degree-k part of the free Lie algebra on d letters."""
    total = 0
    for m in range(1, k + 1):
        if k % m == 0:
            total += _mobius(m) * d ** (k // m)
    return total // k


def _mobius(n: int) -> int:
    result, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            result = -result
        p += 1
    return -result if n > 1 else result


def standard_factorization(w: Word) -> tuple[Word, Word]:
    """w = uv with v the longest proper suffix of w that is Lyndon."""
    for i in range(1, len(w)):
        if _is_lyndon(w[i:]):
            return w[:i], w[i:]
    raise InputError(f"{w} has no proper Lyndon suffix")


def _is_lyndon(w: Word) -> bool:
    return all(w < w[i:] + w[:i] for i in range(1, len(w))) and len(w) > 0


def bracket_string(w: Word) -> str:
    if len(w) == 1:
        return str(w[0])
    u, v = standard_factorization(w)
    return f"[{bracket_string(u)},{bracket_string(v)}]"


@lru_cache(maxsize=None)
def _bracket_expansion(w: Word, d: int) -> np.ndarray:
    """Flat level-|w| tensor of the standard bracketing of the Lyndon word w."""
    if len(w) == 1:
        out = np.zeros(d)
        out[w[0] - 1] = 1.0
        return out
    u, v = standard_factorization(w)
    pu, pv = _bracket_expansion(u, d), _bracket_expansion(v, d)
    return np.outer(pu, pv).ravel() - np.outer(pv, pu).ravel()


@lru_cache(maxsize=None)
def lyndon_basis(d: int, M: int) -> tuple[tuple[Word, ...], tuple[np.ndarray, ...]]:
    """Lyndon words and, per level k, the matrix (d^k, #words_k) of their brackets."""
    lw = tuple(lyndon_words(d, M))
    mats = [np.zeros((1, 0))]
    for k in range(1, M + 1):
        cols = [_bracket_expansion(w, d) for w in lw if len(w) == k]
        mats.append(np.stack(cols, axis=1) if cols else np.zeros((d**k, 0)))
    return lw, tuple(mats)


@dataclass(frozen=True, eq=False)
class LogSignature:
    """Coordinates of log S on the Lyndon basis, plus the non-Lie residual."""

    d: int
    M: int
    words: tuple[Word, ...]
    coeffs: np.ndarray
    residual: float

    def as_dict(self) -> dict[str, float]:
        return {ta.format_word(w): float(c) for w, c in zip(self.words, self.coeffs)}

    def __getitem__(self, word: Sequence[int]) -> float:
        return float(self.coeffs[self.words.index(tuple(word))])

    def to_lie_element(self) -> TruncatedTensor:
        _, mats = lyndon_basis(self.d, self.M)
        levels = [np.zeros(1)]
        start = 0
        for k in range(1, self.M + 1):
            width = mats[k].shape[1]
            levels.append(mats[k] @ self.coeffs[start : start + width])
            start += width
        return TruncatedTensor(self.d, self.M, tuple(levels))

    def to_signature(self) -> TruncatedTensor:
        return ta.tensor_exp(self.to_lie_element())


def project_lyndon(x: TruncatedTensor) -> tuple[np.ndarray, float]:
    """Least-squares Lyndon coordinates of a tensor and the size of what is left over."""
    _, mats = lyndon_basis(x.d, x.N)
    coeffs, residual = [], abs(x.scalar)
    for k in range(1, x.N + 1):
        c, *_ = np.linalg.lstsq(mats[k], x.levels[k], rcond=None)
        coeffs.append(c)
        residual = max(residual, float(np.linalg.norm(mats[k] @ c - x.levels[k])))
    return np.concatenate(coeffs), residual


def log_signature(x, M: int, *, tol: float = LIE_RESIDUAL_TOL, cap: int | None = None) -> LogSignature:
    """Log-signature in Lyndon coordinates.

    Raises :class:`NumericalError` when the logarithm is not a Lie element to
    within ``tol``, which means the input was not grouplike.
    """
    if isinstance(x, TruncatedTensor):
        sig = x
    elif isinstance(x, Signature):
        sig = x.tensor
    else:
        sig = signature(x, M, cap=cap).tensor
    log = ta.tensor_log(sig)
    coeffs, residual = project_lyndon(log)
    if residual > tol:
        raise NumericalError(f"log-signature has non-Lie residual {residual:.3e} > {tol:.1e}")
    words, _ = lyndon_basis(sig.d, sig.N)
    return LogSignature(sig.d, sig.N, words, coeffs, residual)


# ---------------------------------------------------------------------------
# multiplicative extension


def extend(X: RoughPathGrid, M: int, *, cap: int | None = None) -> RoughPathGrid:
    """Level-M multiplicative extension by finest-grid sewing.

    Level m+1 of ``X_{t_0, t_j}`` is the Riemann sum over grid steps of
    ``sum_{k<m} X^{m-k}_{t_0, t_i} (x) X^{k+1}_{t_i, t_{i+1}}``. Levels up to
    ``X.N`` are reused untouched.
    """
    if M < X.N:
        raise InputError(f"cannot extend level {X.N} down to {M}")
    ta.check_level(X.d, M, cap)
    levels = list(X.levels)
    idx = np.arange(X.n_points - 1)
    for m in range(X.N, M):
        current = RoughPathGrid(X.times, X.d, m, tuple(levels), X.origin)
        step = current.increments(idx, idx + 1)
        xi = np.zeros((idx.size, X.d ** (m + 1)))
        for k in range(m):
            xi += ta._outer(levels[m - k][:-1], step[k + 1])
        new = np.zeros((X.n_points, X.d ** (m + 1)))
        np.cumsum(xi, axis=0, out=new[1:])
        levels.append(new)
    return RoughPathGrid(X.times, X.d, M, tuple(levels), X.origin)


# ---------------------------------------------------------------------------
# decay and asymptotics


def decay_constant_lower_bound(p: float) -> float:
    """Lower bound p(1 + 2^g (zeta(g) - 1)) on the decay constant, g = (floor(p)+1)/p."""
    g = (math.floor(p) + 1) / p
    return p * (1.0 + 2.0**g * (float(zeta(g)) - 1.0))


@dataclass(frozen=True)
class DecayReport:
    p: float
    pvar: float
    norms: np.ndarray          # |S^k|, k = 1..M
    critical_beta: np.ndarray  # largest beta with beta (k/p)! |S^k| <= pvar^k
    beta0: float
    extension_ok: bool | None  # levels > floor(p) within the beta0 bound; None if nothing to check

    def holds_at(self, beta: float) -> np.ndarray:
        """Per-level truth of |S^k| <= pvar^k / (beta (k/p)!)."""
        return self.critical_beta >= beta * (1 - 1e-12)

    @property
    def min_beta(self) -> float:
        return float(np.min(self.critical_beta))


def factorial_decay_check(S: Signature | TruncatedTensor, pvar: float, p: float) -> DecayReport:
    """Compare |S^k| with pvar^k / (beta (k/p)!) level by level.

    ``pvar`` is the p-variation of the driving path over the whole interval,
    i.e. omega(0,T)^{1/p}. ``extension_ok`` re-checks the levels above floor(p)
    with beta0 against the smallest control that makes the low levels pass.
    """
    tensor = S.tensor if isinstance(S, Signature) else S
    ks = np.arange(1, tensor.N + 1)
    norms = np.array([np.linalg.norm(tensor.levels[k]) for k in ks])
    facts = gamma(ks / p + 1.0)
    with np.errstate(divide="ignore"):
        crit = np.where(norms > 0, pvar**ks / (facts * np.where(norms > 0, norms, 1.0)), np.inf)
    beta0 = decay_constant_lower_bound(p)
    low = ks <= math.floor(p)
    ext = None
    if np.any(~low):
        scaled = (beta0 * facts * norms) ** (p / ks)
        omega = max(pvar**p, float(np.max(scaled[low])))
        ext = bool(np.all(scaled[~low] <= omega * (1 + 1e-12)))
    return DecayReport(p, pvar, norms, crit, beta0, ext)


@dataclass(frozen=True, eq=False)
class ExpectedSignature:
    mean: TruncatedTensor
    stderr: tuple[np.ndarray, ...]
    count: int

    @property
    def radius_diagnostic(self) -> np.ndarray:
        """a_k = |E S^k|^{1/k}, k = 1..M; bounded/decaying a_k hints at infinite radius."""
        ks = np.arange(1, self.mean.N + 1)
        return np.array([np.linalg.norm(self.mean.levels[k]) ** (1.0 / k) for k in ks])

    def tail_sums(self, lam: float) -> np.ndarray:
        """Partial sums of sum_k lam^k |E S^k| up to each level."""
        terms = [lam**k * np.linalg.norm(lvl) for k, lvl in enumerate(self.mean.levels)]
        return np.cumsum(terms)


def expected_signature(ensemble: Iterable, M: int, *, cap: int | None = None) -> ExpectedSignature:
    """Componentwise sample mean of level-M signatures."""
    flats = []
    d = None
    for x in ensemble:
        sig = signature(x, M, cap=cap).tensor
        if d is None:
            d = sig.d
        elif sig.d != d:
            raise InputError(f"ensemble mixes dimensions {d} and {sig.d}")
        flats.append(sig.flat())
    if not flats:
        raise InputError("empty ensemble")
    arr = np.stack(flats)
    mean = TruncatedTensor.from_flat(np.mean(arr, axis=0), d, M)
    se = np.std(arr, axis=0, ddof=1) / np.sqrt(len(flats)) if len(flats) > 1 else np.zeros(arr.shape[1])
    off = ta.level_offsets(d, M)
    return ExpectedSignature(mean, tuple(se[off[k] : off[k + 1]] for k in range(M + 1)), len(flats))


@dataclass(frozen=True)
class LengthEstimate:
    sequence: np.ndarray  # (k! |S^k|)^{1/k}, k = 1..K

    @property
    def estimate(self) -> float:
        return float(self.sequence[-1])


def length_asymptotic(x, K: int, *, cap: int | None = None) -> LengthEstimate:
    """Length recovered from signature decay, (k! |S^k|)^{1/k} for k <= K."""
    if K < 2:
        raise InputError("need K >= 2")
    sig = signature(x, K, cap=cap).tensor
    seq = np.array(
        [(math.factorial(k) * np.linalg.norm(sig.levels[k])) ** (1.0 / k) for k in range(1, K + 1)]
    )
    return LengthEstimate(seq)
