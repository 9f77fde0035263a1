"""Arithmetic on the discrete phase space V^n = Z_d^n x Z_d^n.

A point x = (p, q) labels the Weyl operator w(p, q).  Points are small
immutable values; bulk work (tables over all d^{2n} points, elimination)
uses integer numpy arrays of shape (m, 2n) laid out as [p | q].
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidModulus, NonIsotropicError

# spans above this many (n * d^{2n}) are kept as generators only
EAGER_SPAN_LIMIT = 10**7


@functools.lru_cache(maxsize=None)
def is_supported_modulus(d: int) -> bool:
    """True for d = 2 and odd primes."""
    if not isinstance(d, (int, np.integer)) or d < 2:
        return False
    if d == 2:
        return True
    if d % 2 == 0:
        return False
    return all(d % f for f in range(3, int(d**0.5) + 1, 2))


def check_modulus(d: int) -> int:
    if not is_supported_modulus(d):
        raise InvalidModulus(f"d must be 2 or an odd prime, got {d!r}")
    return int(d)


@dataclass(frozen=True)
class PhasePoint:
    p: tuple[int, ...]
    q: tuple[int, ...]
    d: int

    def __post_init__(self):
        check_modulus(self.d)
        if len(self.p) != len(self.q):
            raise DimensionMismatch("p and q must have the same length")
        object.__setattr__(self, "p", tuple(int(v) % self.d for v in self.p))
        object.__setattr__(self, "q", tuple(int(v) % self.d for v in self.q))

    @property
    def n(self) -> int:
        return len(self.p)

    @classmethod
    def zero(cls, n: int, d: int) -> "PhasePoint":
        return cls((0,) * n, (0,) * n, d)

    @classmethod
    def from_array(cls, v, d: int) -> "PhasePoint":
        v = [int(a) for a in v]
        n = len(v) // 2
        return cls(tuple(v[:n]), tuple(v[n:]), d)

    @classmethod
    def from_index(cls, P: int, Q: int, n: int, d: int) -> "PhasePoint":
        """Inverse of :meth:`index`."""
        return cls(_unflatten(P, n, d), _unflatten(Q, n, d), d)

    def as_array(self) -> np.ndarray:
        return np.array(self.p + self.q, dtype=np.int64)

    def index(self) -> tuple[int, int]:
        """Row/column of this point in a characteristic-function table."""
        return _flatten(self.p, self.d), _flatten(self.q, self.d)

    def is_zero(self) -> bool:
        return not any(self.p) and not any(self.q)

    def _check(self, other: "PhasePoint"):
        if self.d != other.d or self.n != other.n:
            raise DimensionMismatch(
                f"points live in different spaces: (n={self.n}, d={self.d}) vs (n={other.n}, d={other.d})")

    def __add__(self, other: "PhasePoint") -> "PhasePoint":
        self._check(other)
        return PhasePoint(tuple(a + b for a, b in zip(self.p, other.p)),
                          tuple(a + b for a, b in zip(self.q, other.q)), self.d)

    def __neg__(self) -> "PhasePoint":
        return PhasePoint(tuple(-a for a in self.p), tuple(-a for a in self.q), self.d)

    def __sub__(self, other: "PhasePoint") -> "PhasePoint":
        return self + (-other)

    def __rmul__(self, a: int) -> "PhasePoint":
        return PhasePoint(tuple(a * v for v in self.p), tuple(a * v for v in self.q), self.d)

    def __mul__(self, a: int) -> "PhasePoint":
        return self.__rmul__(a)

    def __str__(self):
        return f"({''.join(map(str, self.p))},{''.join(map(str, self.q))})"


def _flatten(digits: Sequence[int], d: int) -> int:
    out = 0
    for v in digits:
        out = out * d + int(v)
    return out


def _unflatten(index: int, n: int, d: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        index, r = divmod(index, d)
        out.append(r)
    return tuple(reversed(out))


@functools.lru_cache(maxsize=64)
def digit_table(n: int, d: int) -> np.ndarray:
    """(d^n, n) array; row i holds the base-d digits of i, most significant first.

    The same ordering indexes the computational basis (kron order) and the
    rows/columns of characteristic-function tables.
    """
    grid = np.indices((d,) * n).reshape(n, -1).T
    grid.setflags(write=False)
    return grid


def flat_index(digits: np.ndarray, d: int) -> np.ndarray:
    n = digits.shape[-1]
    weights = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (np.asarray(digits, dtype=np.int64) % d) @ weights


@functools.lru_cache(maxsize=256)
def scale_index(n: int, d: int, s: int) -> np.ndarray:
    """Permutation-or-collapse map i -> index of (s * digits(i) mod d)."""
    out = flat_index(digit_table(n, d) * s, d)
    out.setflags(write=False)
    return out


def points_matrix(points: Iterable[PhasePoint]) -> tuple[np.ndarray, int | None, int | None]:
    pts = list(points)
    if not pts:
        return np.zeros((0, 0), dtype=np.int64), None, None
    n, d = pts[0].n, pts[0].d
    for x in pts[1:]:
        pts[0]._check(x)
    return np.array([x.as_array() for x in pts], dtype=np.int64).reshape(len(pts), 2 * n), n, d


def symplectic_form(n: int) -> np.ndarray:
    """Integer matrix J with <x, y> = x J y^T for x = [p | q]."""
    eye = np.eye(n, dtype=np.int64)
    zero = np.zeros((n, n), dtype=np.int64)
    return np.block([[zero, eye], [-eye, zero]])


def symplectic_product(x: PhasePoint, y: PhasePoint) -> int:
    """<x, y> = p_x . q_y - q_x . p_y (mod d).

    With this sign, w(x) w(y) = omega^{<x,y>} w(y) w(x).
    """
    x._check(y)
    val = sum(a * b for a, b in zip(x.p, y.q)) - sum(a * b for a, b in zip(x.q, y.p))
    return val % x.d


def symplectic_products(A: np.ndarray, B: np.ndarray, d: int) -> np.ndarray:
    """Pairwise products of the rows of A and B (both (m, 2n) arrays)."""
    n = A.shape[1] // 2
    return (A @ symplectic_form(n) @ B.T) % d


def row_reduce(mat: np.ndarray, d: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over Z_d (d prime) and its pivot columns."""
    M = np.array(mat, dtype=np.int64) % d
    rows, cols = M.shape if M.ndim == 2 else (0, 0)
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(M[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            M[[r, piv]] = M[[piv, r]]
        M[r] = (M[r] * pow(int(M[r, c]), -1, d)) % d
        others = np.nonzero(M[:, c])[0]
        for o in others:
            if o != r:
                M[o] = (M[o] - M[o, c] * M[r]) % d
        pivots.append(c)
        r += 1
    return M[:r], pivots


def rank_mod(mat: np.ndarray, d: int) -> int:
    if np.size(mat) == 0:
        return 0
    return len(row_reduce(mat, d)[1])


def span(generators: Iterable[PhasePoint], *, n: int | None = None, d: int | None = None) -> set[PhasePoint]:
    """Additive closure of ``generators``; contains the zero point.

    ``n`` and ``d`` are only needed when ``generators`` is empty.
    """
    pts = list(generators)
    gens = symplectic_reduce(pts)
    if pts:
        n, d = pts[0].n, pts[0].d
    elif n is None or d is None:
        raise DimensionMismatch("span of no generators needs explicit n and d")
    check_modulus(d)
    if d ** len(gens) > EAGER_SPAN_LIMIT:
        raise MemoryError("span too large to materialize; work from generators")
    G = np.array([g.as_array() for g in gens], dtype=np.int64).reshape(len(gens), 2 * n)
    coeffs = np.array(list(itertools.product(range(d), repeat=len(gens))), dtype=np.int64)
    coeffs = coeffs.reshape(d ** len(gens), len(gens))
    elems = (coeffs @ G) % d
    return {PhasePoint.from_array(row, d) for row in elems}


def is_isotropic(g: Iterable[PhasePoint]) -> bool:
    M, _, d = points_matrix(g)
    if d is None:
        return True
    return not symplectic_products(M, M, d).any()


def symplectic_reduce(g: Iterable[PhasePoint]) -> list[PhasePoint]:
    """Independent subset of ``g`` with the same span.

    Walks the input in order and keeps each point that is not in the span of
    those already kept, so the result is deterministic and made of input
    points.
    """
    pts = list(g)
    M, n, d = points_matrix(pts)
    if d is None:
        return []
    kept: list[PhasePoint] = []
    basis = np.zeros((0, 2 * n), dtype=np.int64)
    rank = 0
    for x, row in zip(pts, M):
        trial = np.vstack([basis, row])
        r = rank_mod(trial, d)
        if r > rank:
            kept.append(x)
            basis, rank = row_reduce(trial, d)[0], r
    return kept


def centralizer_size(generators: Sequence[PhasePoint], n: int, d: int) -> int:
    """Number of a in V^n with <a, g> = 0 for every generator g."""
    M, _, _ = points_matrix(generators)
    r = rank_mod(M, d) if len(generators) else 0
    return d ** (2 * n - r)


def centralizer_basis(generators: Sequence[PhasePoint], n: int, d: int) -> list[PhasePoint]:
    """A basis of the symplectic complement of span(generators)."""
    if not generators:
        A = np.zeros((0, 2 * n), dtype=np.int64)
    else:
        A = points_matrix(generators)[0] @ symplectic_form(n) % d
    R, pivots = row_reduce(A, d) if len(A) else (A, [])
    free = [c for c in range(2 * n) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(2 * n, dtype=np.int64)
        v[f] = 1
        for row, pc in zip(R, pivots):
            v[pc] = -row[f] % d
        basis.append(PhasePoint.from_array(v, d))
    return basis


@dataclass(frozen=True)
class IsotropicSubgroup:
    """Independent commuting generators with one unit-modulus phase each.

    ``phases[i]`` is the value of the characteristic function at
    ``generators[i]``, so ``phases[i] * w(generators[i])`` stabilizes the
    described state.
    """

    generators: tuple[PhasePoint, ...]
    phases: tuple[complex, ...]
    n: int
    d: int
    _checked: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        check_modulus(self.d)
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "phases", tuple(complex(c) for c in self.phases))
        if len(self.phases) != len(self.generators):
            raise DimensionMismatch("one phase per generator is required")
        for g in self.generators:
            if g.n != self.n or g.d != self.d:
                raise DimensionMismatch(f"generator {g} does not live in (n={self.n}, d={self.d})")
        if not self._checked:
            return
        if not is_isotropic(self.generators):
            raise NonIsotropicError("generators do not commute")
        if len(symplectic_reduce(self.generators)) != len(self.generators):
            raise NonIsotropicError("generators are not independent")
        for c in self.phases:
            if abs(abs(c) - 1) > 1e-9:
                raise ValueError(f"phase {c} is not unit modulus")

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def size(self) -> int:
        return self.d ** self.rank

    def elements(self) -> set[PhasePoint]:
        if self.n * self.d ** (2 * self.n) > EAGER_SPAN_LIMIT:
            raise MemoryError("subgroup too large to materialize; work from generators")
        return span(self.generators, n=self.n, d=self.d)
