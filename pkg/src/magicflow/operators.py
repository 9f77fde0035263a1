"""Dense states, Weyl operators and the characteristic-function transform.

Conventions
-----------
Single-site ``w(p, q) = xi^{-pq} Z^p X^q`` with ``X|k> = |k+1>``,
``Z|k> = omega^k |k>``, ``xi = i`` for d = 2 and ``xi = omega^{(d+1)/2}`` for
odd d; multi-site operators are Kronecker products with site 0 leftmost.

The characteristic function ``Xi(x) = Tr[rho w(-x)]`` is stored as a
``(d^n, d^n)`` table indexed ``[P, Q]`` by the flat indices of p and q.  For a
fixed q the row ``Xi(., q)`` is an n-dimensional DFT of the q-th
off-diagonal of rho, so the full table costs O(d^{2n} n d) via FFT.
"""
from __future__ import annotations

import functools
import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidState, SizeCapExceeded
from .phase_space import PhasePoint, check_modulus, digit_table, flat_index

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
DEFAULT_SIZE_CAP = 2**14


def size_cap() -> int:
    """Largest total dimension a dense path may materialize (env MAGICFLOW_SIZE_CAP)."""
    return int(os.environ.get("MAGICFLOW_SIZE_CAP", DEFAULT_SIZE_CAP))


def check_size(dim: int, what: str = "operator") -> None:
    cap = size_cap()
    if dim > cap:
        raise SizeCapExceeded(
            f"{what} of dimension {dim} exceeds the dense size cap {cap}; "
            "use the char-domain path or raise MAGICFLOW_SIZE_CAP")


def omega(d: int) -> complex:
    return np.exp(2j * np.pi / d)


def _xi_root(d: int) -> tuple[int, int]:
    """(a, m) with xi = exp(2 pi i a / m)."""
    if d == 2:
        return 1, 4
    return (d + 1) // 2, d


def xi_power(d: int, k) -> np.ndarray:
    """xi^k, reduced exactly in the exponent before exponentiating."""
    a, m = _xi_root(d)
    e = (a * np.asarray(k, dtype=np.int64)) % m
    return np.exp(2j * np.pi * e / m)


@functools.lru_cache(maxsize=256)
def _single_weyl(p: int, q: int, d: int) -> np.ndarray:
    k = np.arange(d)
    Z = np.diag(omega(d) ** ((p * k) % d))
    X = np.zeros((d, d))
    X[(k + q) % d, k] = 1
    out = xi_power(d, -p * q) * (Z @ X)
    out.setflags(write=False)
    return out


def weyl_matrix(x: PhasePoint) -> np.ndarray:
    """Dense w(x) on n sites."""
    out = np.ones((1, 1), dtype=complex)
    for p, q in zip(x.p, x.q):
        out = np.kron(out, _single_weyl(p, q, x.d))
    return out


@dataclass
class DensityOperator:
    matrix: np.ndarray
    n: int
    d: int
    validate: bool = True

    def __post_init__(self):
        check_modulus(self.d)
        self.matrix = np.asarray(self.matrix, dtype=complex)
        D = self.d**self.n
        if self.matrix.shape != (D, D):
            raise DimensionMismatch(f"expected a {D}x{D} matrix, got {self.matrix.shape}")
        if self.validate:
            self.check()

    @property
    def dim(self) -> int:
        return self.d**self.n

    def check(self) -> "DensityOperator":
        M = self.matrix
        herm = np.abs(M - M.conj().T).max()
        if herm > HERMITIAN_TOL:
            raise InvalidState(f"not Hermitian (deviation {herm:.2e})")
        tr = np.trace(M)
        if abs(tr - 1) > TRACE_TOL:
            raise InvalidState(f"trace is {tr:.12g}, not 1")
        lmin = np.linalg.eigvalsh((M + M.conj().T) / 2).min()
        if lmin < -PSD_TOL:
            raise InvalidState(f"not positive semidefinite (min eigenvalue {lmin:.2e})")
        return self

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        M = self.matrix
        return np.linalg.eigvalsh((M + M.conj().T) / 2)

    @classmethod
    def from_vector(cls, psi, n: int, d: int) -> "DensityOperator":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), n, d)

    @classmethod
    def maximally_mixed(cls, n: int, d: int) -> "DensityOperator":
        D = d**n
        return cls(np.eye(D) / D, n, d)


@dataclass
class CharFunction:
    values: np.ndarray
    n: int
    d: int

    def __post_init__(self):
        check_modulus(self.d)
        self.values = np.asarray(self.values, dtype=complex)
        D = self.d**self.n
        if self.values.shape != (D, D):
            raise DimensionMismatch(f"expected a {D}x{D} table, got {self.values.shape}")

    def __getitem__(self, x: PhasePoint) -> complex:
        return complex(self.values[x.index()])

    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)

    def negate_index(self) -> np.ndarray:
        """Flat index of -x for each flat index x (applied to both axes)."""
        return _neg_index(self.n, self.d)

    def check(self, tol: float = 1e-10) -> "CharFunction":
        v = self.values
        if abs(v[0, 0] - 1) > tol:
            raise InvalidState(f"value at the origin is {v[0, 0]}, not 1")
        if np.abs(v).max() > 1 + tol:
            raise InvalidState("a value exceeds unit modulus")
        neg = _neg_index(self.n, self.d)
        if np.abs(v[np.ix_(neg, neg)] - v.conj()).max() > tol:
            raise InvalidState("table is not conjugate symmetric")
        return self

    @classmethod
    def delta(cls, n: int, d: int) -> "CharFunction":
        """Table of the maximally mixed state."""
        D = d**n
        v = np.zeros((D, D), dtype=complex)
        v[0, 0] = 1
        return cls(v, n, d)


@functools.lru_cache(maxsize=64)
def _neg_index(n: int, d: int) -> np.ndarray:
    out = flat_index(-digit_table(n, d), d)
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=64)
def _shift_index(n: int, d: int) -> np.ndarray:
    """[Q, K] -> flat index of digits(K) + digits(Q)."""
    dig = digit_table(n, d)
    out = flat_index(dig[:, None, :] + dig[None, :, :], d)
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=64)
def _pq_exponent(n: int, d: int) -> np.ndarray:
    """[P, Q] -> p . q as an integer (not reduced)."""
    dig = digit_table(n, d).astype(np.int64)
    out = dig @ dig.T
    out.setflags(write=False)
    return out


def operator_coefficients(A: np.ndarray, n: int, d: int) -> np.ndarray:
    """Table c[P, Q] = Tr[A w(-x)], so that A = d^{-n} sum_x c(x) w(x)."""
    D = d**n
    A = np.asarray(A, dtype=complex)
    if A.shape != (D, D):
        raise DimensionMismatch(f"expected a {D}x{D} matrix, got {A.shape}")
    shift = _shift_index(n, d)
    cols = np.broadcast_to(np.arange(D), (D, D))
    diag = A[shift, cols]  # diag[Q, K] = A[K + Q, K]
    spectrum = np.fft.fftn(diag.reshape((D,) + (d,) * n), axes=tuple(range(1, n + 1)))
    spectrum = spectrum.reshape(D, D).T  # [P, Q]
    return xi_power(d, -_pq_exponent(n, d)) * spectrum


def operator_from_coefficients(c: np.ndarray, n: int, d: int) -> np.ndarray:
    """Inverse of :func:`operator_coefficients`."""
    D = d**n
    c = np.asarray(c, dtype=complex)
    weighted = (xi_power(d, _pq_exponent(n, d)) * c).T  # [Q, P]
    diag = np.fft.ifftn(weighted.reshape((D,) + (d,) * n), axes=tuple(range(1, n + 1)))
    diag = diag.reshape(D, D)
    out = np.empty((D, D), dtype=complex)
    cols = np.broadcast_to(np.arange(D), (D, D))
    out[_shift_index(n, d), cols] = diag
    return out


def char_function(rho: DensityOperator) -> CharFunction:
    """Xi_rho(x) = Tr[rho w(-x)] for every x in V^n."""
    if rho.validate is False:
        rho.check()
    return CharFunction(operator_coefficients(rho.matrix, rho.n, rho.d), rho.n, rho.d)


def inverse_char(xi: CharFunction) -> DensityOperator:
    """rho = d^{-n} sum_x Xi(x) w(x).

    The result is not validated: an arbitrary table need not describe a
    positive operator.
    """
    M = operator_from_coefficients(xi.values, xi.n, xi.d)
    return DensityOperator(M, xi.n, xi.d, validate=False)


def von_neumann_entropy(rho: DensityOperator) -> float:
    """-Tr rho log rho in nats."""
    lam = rho.eigenvalues()
    if lam.min() < -PSD_TOL:
        raise InvalidState(f"eigenvalue {lam.min():.2e} below the clamping window")
    lam = lam[lam > 0]
    # a pure state can land a hair below zero through roundoff
    return max(0.0, float(-np.sum(lam * np.log(lam))))


def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    if rho.matrix.shape != sigma.matrix.shape:
        raise DimensionMismatch("states have different dimensions")
    diff = rho.matrix - sigma.matrix
    lam = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return float(0.5 * np.abs(lam).sum())
