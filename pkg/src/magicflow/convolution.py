"""Quantum convolutions and the iterated self-convolution flow.

Odd prime d uses the two-input convolution built from the label-mixing
permutation U_{s,t}; d = 2 uses the three-input convolution built from the
CNOT key unitary.  Each has a dense path (explicit channel on density
matrices, capped in size) and a char-domain path (pointwise products of
characteristic-function tables).  The dense paths are the oracles.
"""
from __future__ import annotations

import csv
import functools
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .clifford import CliffordCircuit, Gate
from .errors import (DimensionMismatch, NoNontrivialParams, UnsupportedConfiguration,
                     UnvalidatedFastPath)
from .operators import (CharFunction, DensityOperator, char_function, check_size,
                        inverse_char, size_cap, trace_distance, von_neumann_entropy,
                        _pq_exponent)
from .states import random_mixed_state
from .phase_space import check_modulus, digit_table, flat_index, scale_index

QUBIT_MARKER = "qubit-3"
TRACE_FORMAT_VERSION = 1
STALL_WINDOW = 3
Mode = Literal["dense", "char", "auto"]


@dataclass(frozen=True)
class ConvParams:
    s: int
    t: int
    d: int

    def __post_init__(self):
        check_modulus(self.d)
        if self.d == 2:
            raise UnsupportedConfiguration("qubits use the three-input convolution")
        s, t = self.s % self.d, self.t % self.d
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "t", t)
        if (s * s + t * t) % self.d != 1:
            raise ValueError(f"s^2 + t^2 = {(s * s + t * t) % self.d} mod {self.d}, not 1")
        if s in (0, 1) or t in (0, 1):
            raise ValueError(f"(s, t) = ({s}, {t}) is trivial")

    def __str__(self):
        return f"s={self.s},t={self.t}"


def find_params(d: int) -> list[ConvParams]:
    """All nontrivial (s, t) with s^2 + t^2 = 1 mod d, ascending."""
    check_modulus(d)
    if d == 2:
        raise UnsupportedConfiguration("qubits use the three-input convolution; no (s, t) applies")
    out = [ConvParams(s, t, d) for s in range(2, d) for t in range(2, d)
           if (s * s + t * t) % d == 1]
    if not out:
        squares = sorted({(a * a) % d for a in range(d)})
        raise NoNontrivialParams(
            f"no nontrivial parameters for d={d}: the squares mod {d} are {squares} "
            "and no pair with s, t outside {0, 1} sums to 1")
    return out


def default_params(d: int) -> ConvParams:
    return find_params(d)[0]


def _resolve_params(params: ConvParams | None, d: int) -> ConvParams:
    if params is None:
        return default_params(d)
    if params.d != d:
        raise DimensionMismatch(f"params are for d={params.d}, state has d={d}")
    return params


# ------------------------------------------------------------- two-input (odd d)

def _st_map(params: ConvParams, n: int) -> np.ndarray:
    """Image of each joint basis index (i, j) under U_{s,t}, as a flat index."""
    d, s, t = params.d, params.s, params.t
    D = d**n
    dig = digit_table(n, d)
    i = np.repeat(dig, D, axis=0)
    j = np.tile(dig, (D, 1))
    a = flat_index(s * i + t * j, d)
    b = flat_index(-t * i + s * j, d)
    return a * D + b


def u_st(params: ConvParams, n: int) -> np.ndarray:
    """Permutation matrix |i>|j> -> |s i + t j>|-t i + s j> on 2n qudits."""
    D2 = params.d ** (2 * n)
    check_size(D2, "U_{s,t}")
    U = np.zeros((D2, D2))
    U[_st_map(params, n), np.arange(D2)] = 1
    return U


def partial_trace_second(M: np.ndarray, D1: int, D2: int) -> np.ndarray:
    return np.einsum("ibjb->ij", M.reshape(D1, D2, D1, D2))


def _check_pair(rho: DensityOperator, sigma: DensityOperator) -> None:
    if (rho.n, rho.d) != (sigma.n, sigma.d):
        raise DimensionMismatch("states act on different systems")
    for st in (rho, sigma):
        if not st.validate:
            st.check()


@functools.lru_cache(maxsize=32)
def _st_preimages(params: ConvParams, n: int) -> tuple[np.ndarray, np.ndarray]:
    """[a, b] -> (i, j) with U_{s,t}|i>|j> = |a>|b>."""
    D = params.d**n
    inv = np.empty(D * D, dtype=np.int64)
    inv[_st_map(params, n)] = np.arange(D * D)
    inv = inv.reshape(D, D)
    I, J = np.divmod(inv, D)
    I.setflags(write=False)
    J.setflags(write=False)
    return I, J


def convolve_dense(rho: DensityOperator, sigma: DensityOperator, params: ConvParams | None = None) -> DensityOperator:
    """Tr_B[U_{s,t} (rho (x) sigma) U_{s,t}^dagger] on density matrices."""
    _check_pair(rho, sigma)
    params = _resolve_params(params, rho.d)
    check_size(rho.d ** (2 * rho.n), "joint system of the convolution")
    I, J = _st_preimages(params, rho.n)
    R = rho.matrix[I[:, None, :], I[None, :, :]]
    S = sigma.matrix[J[:, None, :], J[None, :, :]]
    return DensityOperator((R * S).sum(axis=-1), rho.n, rho.d, validate=False)


def convolve_char(xi_rho: CharFunction, xi_sigma: CharFunction, params: ConvParams | None = None) -> CharFunction:
    """Xi_{rho [x] sigma}(x) = Xi_rho(s x) Xi_sigma(t x)."""
    if (xi_rho.n, xi_rho.d) != (xi_sigma.n, xi_sigma.d):
        raise DimensionMismatch("tables describe different systems")
    n, d = xi_rho.n, xi_rho.d
    params = _resolve_params(params, d)
    si, ti = scale_index(n, d, params.s), scale_index(n, d, params.t)
    out = xi_rho.values[np.ix_(si, si)] * xi_sigma.values[np.ix_(ti, ti)]
    return CharFunction(out, n, d)


# ------------------------------------------------------------- three-input (qubits)

def key_unitary_circuit(n: int) -> CliffordCircuit:
    """CNOTs of the key unitary on 3n qubits, in application order.

    System k (k = 0, 1, 2) holds qubits k*n .. k*n + n - 1; on each triple
    (l, n + l, 2n + l) the first system controls the other two, then the
    other two are added back into the first.
    """
    gates = []
    for l in range(n):
        a, b, c = l, n + l, 2 * n + l
        gates += [Gate("SUM", (a, b)), Gate("SUM", (a, c)), Gate("SUM", (b, a)), Gate("SUM", (c, a))]
    return CliffordCircuit(tuple(gates), 3 * n, 2)


def key_unitary_qubit(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be at least 1")
    check_size(2 ** (3 * n), "key unitary")
    return key_unitary_circuit(n).unitary().real


@functools.lru_cache(maxsize=8)
def _key_preimages(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    V = key_unitary_qubit(n)
    perm = np.argmax(V, axis=0)  # V|i> = |perm[i]>
    N = 2 ** (3 * n)
    inv = np.empty(N, dtype=np.int64)
    inv[perm] = np.arange(N)
    D = 2**n
    inv = inv.reshape(D, D * D)  # [a, b] with b the traced systems
    i1, rest = np.divmod(inv, D * D)
    i2, i3 = np.divmod(rest, D)
    for arr in (i1, i2, i3):
        arr.setflags(write=False)
    return i1, i2, i3


def convolve3_dense(rho1: DensityOperator, rho2: DensityOperator, rho3: DensityOperator) -> DensityOperator:
    """Tr_{2,3}[V (rho1 (x) rho2 (x) rho3) V^dagger] for n-qubit states."""
    if rho1.d != 2:
        raise UnsupportedConfiguration("the three-input convolution is defined for qubits only")
    _check_pair(rho1, rho2)
    _check_pair(rho1, rho3)
    i1, i2, i3 = _key_preimages(rho1.n)
    T = (rho1.matrix[i1[:, None, :], i1[None, :, :]]
         * rho2.matrix[i2[:, None, :], i2[None, :, :]]
         * rho3.matrix[i3[:, None, :], i3[None, :, :]])
    return DensityOperator(T.sum(axis=-1), rho1.n, 2, validate=False)


@functools.lru_cache(maxsize=16)
def _qubit_sign(n: int) -> np.ndarray:
    out = (-1.0) ** (_pq_exponent(n, 2) % 2)
    out.setflags(write=False)
    return out


def _convolve3_formula(x1: np.ndarray, x2: np.ndarray, x3: np.ndarray, n: int) -> np.ndarray:
    return _qubit_sign(n) * x1 * x2 * x3


_QUBIT_DUALITY = {"validated": False, "max_error": None}


def validate_qubit_duality(seed: int = 0, samples: int = 50, tol: float = 1e-10) -> float:
    """Check the char-domain qubit convolution against the dense path.

    Runs ``samples`` random triples of mixed states at n = 1 and n = 2 and
    enables :func:`convolve3_char` if the worst pointwise error is below
    ``tol``.  Returns that error.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (1, 2):
        for _ in range(samples):
            states = [random_mixed_state(n, 2, rng) for _ in range(3)]
            dense = char_function(convolve3_dense(*states)).values
            xis = [char_function(s).values for s in states]
            worst = max(worst, float(np.abs(dense - _convolve3_formula(*xis, n)).max()))
    _QUBIT_DUALITY["validated"] = worst < tol
    _QUBIT_DUALITY["max_error"] = worst
    return worst


def qubit_duality_validated() -> bool:
    return bool(_QUBIT_DUALITY["validated"])


def convolve3_char(xi1: CharFunction, xi2: CharFunction, xi3: CharFunction) -> CharFunction:
    """Xi_out(x) = (-1)^{p.q} Xi1(x) Xi2(x) Xi3(x).

    The sign comes from V^dagger (Y (x) I (x) I) V = -Y (x) Y (x) Y; the formula
    is only used after :func:`validate_qubit_duality` has passed.
    """
    if not qubit_duality_validated():
        raise UnvalidatedFastPath("run validate_qubit_duality() before using the qubit fast path")
    if xi1.d != 2:
        raise UnsupportedConfiguration("the three-input convolution is defined for qubits only")
    for other in (xi2, xi3):
        if (other.n, other.d) != (xi1.n, xi1.d):
            raise DimensionMismatch("tables describe different systems")
    return CharFunction(_convolve3_formula(xi1.values, xi2.values, xi3.values, xi1.n), xi1.n, 2)


# ------------------------------------------------------------------ the flow

def dense_dimension(n: int, d: int) -> int:
    """Largest object the dense self-convolution materializes."""
    return 2 ** (3 * n) if d == 2 else d ** (2 * n)


def _pick_mode(mode: Mode, n: int, d: int) -> str:
    if mode not in ("dense", "char", "auto"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "auto":
        return "dense" if dense_dimension(n, d) <= size_cap() else "char"
    return mode


def self_convolve(rho: DensityOperator, params: ConvParams | None = None, mode: Mode = "dense") -> DensityOperator:
    """One step of the flow: rho [x] rho, or the three-copy convolution for qubits."""
    mode = _pick_mode(mode, rho.n, rho.d)
    if rho.d == 2:
        if mode == "dense":
            return convolve3_dense(rho, rho, rho)
        _ensure_qubit_validated()
        xi = char_function(rho)
        return inverse_char(convolve3_char(xi, xi, xi))
    params = _resolve_params(params, rho.d)
    if mode == "dense":
        return convolve_dense(rho, rho, params)
    xi = char_function(rho)
    return inverse_char(convolve_char(xi, xi, params))


def self_convolve_char(xi: CharFunction, params: ConvParams | None = None) -> CharFunction:
    if xi.d == 2:
        _ensure_qubit_validated()
        return convolve3_char(xi, xi, xi)
    return convolve_char(xi, xi, _resolve_params(params, xi.d))


def _ensure_qubit_validated() -> None:
    if not qubit_duality_validated():
        err = validate_qubit_duality()
        if not qubit_duality_validated():
            raise UnvalidatedFastPath(f"qubit char path disagrees with the dense oracle ({err:.2e})")


def flow_power(xi: CharFunction, L: int, params: ConvParams | None = None) -> CharFunction:
    """Xi of the L-fold self-convolution in one shot.

    Odd d: Xi_L(x) = prod_a Xi(s^a t^{L-a} x)^{binom(L, a)}.
    Qubits: Xi_L(x) = (-1)^{p.q (3^L - 1)/2} Xi(x)^{3^L}.
    Magnitudes accumulate in log space; unit-modulus roots of unity carry
    exact integer phase exponents, so persistent values keep their phase
    for any L.
    """
    n, d = xi.n, xi.d
    if L < 0:
        raise ValueError("L must be nonnegative")
    if L == 0:
        return CharFunction(xi.values.copy(), n, d)
    if d == 2:
        _ensure_qubit_validated()
        out = _power(xi.values, 3**L, d)
        sign_exp = (3**L - 1) // 2
        if sign_exp % 2:
            out = _qubit_sign(n) * out
        return CharFunction(out, n, d)
    params = _resolve_params(params, d)
    out = np.ones_like(xi.values)
    for a in range(L + 1):
        c = pow(params.s, a, d) * pow(params.t, L - a, d) % d
        idx = scale_index(n, d, c)
        out = out * _power(xi.values[np.ix_(idx, idx)], math.comb(L, a), d)
    return CharFunction(out, n, d)


def _power(values: np.ndarray, e: int, d: int) -> np.ndarray:
    """values ** e, exact in the phase for unit-modulus roots of unity."""
    mag = np.abs(values)
    ang = np.angle(values)
    m = np.rint(ang * d / np.pi).astype(np.int64)
    unit = (np.abs(mag - 1) < 1e-12) & (np.abs(np.exp(1j * np.pi * m / d) - values) < 1e-12)
    out = np.empty_like(values)
    out[unit] = np.exp(1j * np.pi * ((m[unit] % (2 * d)) * (e % (2 * d)) % (2 * d)) / d)
    rest = ~unit
    with np.errstate(under="ignore"):
        new_mag = mag[rest] ** float(e)
    out[rest] = new_mag * np.exp(1j * np.mod(ang[rest] * float(e), 2 * np.pi))
    return out


@dataclass
class FlowRecord:
    L: int
    entropy: float
    supnorm_gap: float
    trace_dist_estimate: float


@dataclass
class FlowTrace:
    params: ConvParams | str | None
    mode: str
    records: list[FlowRecord] = field(default_factory=list)
    stalled: bool = False

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# format_version={TRACE_FORMAT_VERSION} params={self.params} mode={self.mode}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["L", "entropy", "supnorm_gap", "trace_dist_estimate"])
        for r in self.records:
            writer.writerow([r.L, repr(r.entropy), repr(r.supnorm_gap), repr(r.trace_dist_estimate)])
        return buf.getvalue()


def supnorm_gap(xi: CharFunction) -> float:
    """Distance of |Xi| from a 0/1 table: max over x of min(|Xi|, 1 - |Xi|)."""
    mag = np.abs(xi.values)
    return float(np.minimum(mag, np.abs(1 - mag)).max())


def unit_support_state(xi: CharFunction, tol: float = 1e-9) -> DensityOperator:
    """Dense state keeping only the unit-modulus part of ``xi``."""
    kept = np.where(np.abs(xi.values) >= 1 - tol, xi.values, 0)
    return inverse_char(CharFunction(kept, xi.n, xi.d))


def iterate(rho: DensityOperator, params: ConvParams | None = None, L: int = 1,
            mode: Mode = "auto", tol: float = 1e-9) -> tuple[DensityOperator, FlowTrace]:
    """Run L steps of the self-convolution flow and record each step."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    n, d = rho.n, rho.d
    if not rho.validate:
        rho.check()
    mode = _pick_mode(mode, n, d)
    if d == 2:
        label = QUBIT_MARKER
    else:
        params = _resolve_params(params, d)
        label = params
    trace = FlowTrace(label, mode)
    cur = rho
    xi = char_function(rho)
    prev_gap = supnorm_gap(xi)
    flat = 0
    for step in range(1, L + 1):
        if mode == "dense":
            cur = self_convolve(cur, params, "dense")
            xi = char_function(cur)
        else:
            xi = self_convolve_char(xi, params)
            cur = inverse_char(xi)
        gap = supnorm_gap(xi)
        est = unit_support_state(xi, tol)
        trace.records.append(FlowRecord(step, von_neumann_entropy(cur), gap, trace_distance(cur, est)))
        # values crossing 1/2 make single rises normal; a run of them is not
        flat = flat + 1 if (gap > tol and gap >= prev_gap) else 0
        if flat >= STALL_WINDOW:
            trace.stalled = True
        prev_gap = gap
    if trace.stalled:
        warnings.warn("supnorm gap stopped decreasing; the flow may be cycling", RuntimeWarning)
    return cur, trace
