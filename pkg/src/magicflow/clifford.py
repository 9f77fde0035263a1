"""Clifford circuits over the generators FOURIER, PHASE, MULT(a), SUM and WEYL.

Gate conventions (d = 2 reduces to H, S, identity, CNOT, Pauli):

* ``FOURIER``  |j> -> d^{-1/2} sum_k omega^{jk} |k>
* ``PHASE``    |j> -> xi^{j^2} |j>
* ``MULT(a)``  |j> -> |a j>, a invertible mod d
* ``SUM``      targets (c, t): |c>|t> -> |c>|t + c>
* ``WEYL(p, q)`` applies w(p, q) on one site

A circuit applies its gates left to right, so its unitary is
``G_m ... G_1``.  Besides the dense semantics there is an exact symbolic
action on Weyl labels: each gate's local conjugation table is read off its
dense matrix once and cached, then :func:`conjugate_point` pushes
``(label, phase)`` pairs through a circuit without materializing anything
of size d^n.  Phases are tracked as exponents ``m`` of ``exp(i pi m / d)``.
"""
from __future__ import annotations

import functools
import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, NonIsotropicError, NotCliffordError
from .operators import (DensityOperator, _single_weyl, check_size, omega,
                        operator_coefficients, weyl_matrix, xi_power)
from .phase_space import (IsotropicSubgroup, PhasePoint, check_modulus,
                          is_isotropic, symplectic_reduce)

GATE_KINDS = ("FOURIER", "PHASE", "MULT", "SUM", "WEYL")
CLIFFORD_TOL = 1e-8
UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    param: int | tuple[int, int] | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        arity = 2 if self.kind == "SUM" else 1
        if len(self.targets) != arity:
            raise ValueError(f"{self.kind} acts on {arity} site(s), got targets {self.targets}")
        if arity == 2 and self.targets[0] == self.targets[1]:
            raise ValueError("SUM needs two distinct sites")
        if self.kind == "WEYL":
            p, q = self.param
            object.__setattr__(self, "param", (int(p), int(q)))
        elif self.kind == "MULT":
            object.__setattr__(self, "param", int(self.param))

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "targets": list(self.targets)}
        if self.param is not None:
            out["param"] = list(self.param) if isinstance(self.param, tuple) else self.param
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Gate":
        param = data.get("param")
        if isinstance(param, list):
            param = tuple(param)
        return cls(data["kind"], tuple(data["targets"]), param)


def gate_matrix(kind: str, d: int, param=None) -> np.ndarray:
    """Local matrix of a generator (d x d, or d^2 x d^2 for SUM)."""
    check_modulus(d)
    k = np.arange(d)
    if kind == "FOURIER":
        return omega(d) ** (np.outer(k, k) % d) / np.sqrt(d)
    if kind == "PHASE":
        return np.diag(xi_power(d, k * k))
    if kind == "MULT":
        a = int(param)
        if a % d == 0:
            raise ValueError(f"MULT({a}) is not invertible mod {d}")
        out = np.zeros((d, d), dtype=complex)
        out[(a * k) % d, k] = 1
        return out
    if kind == "SUM":
        out = np.zeros((d * d, d * d), dtype=complex)
        c, t = np.divmod(np.arange(d * d), d)
        out[c * d + (t + c) % d, c * d + t] = 1
        return out
    if kind == "WEYL":
        p, q = param
        return np.array(_single_weyl(p % d, q % d, d))
    raise ValueError(f"unknown gate kind {kind!r}")


@dataclass(frozen=True)
class CliffordCircuit:
    gates: tuple[Gate, ...]
    n: int
    d: int

    def __post_init__(self):
        check_modulus(self.d)
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(t < 0 or t >= self.n for t in g.targets):
                raise ValueError(f"gate {g} targets a site outside 0..{self.n - 1}")
            if g.kind == "MULT" and g.param % self.d == 0:
                raise ValueError(f"MULT({g.param}) is not invertible mod {self.d}")

    def __len__(self):
        return len(self.gates)

    def then(self, other: "CliffordCircuit") -> "CliffordCircuit":
        """Circuit applying ``self`` first, then ``other``."""
        if (other.n, other.d) != (self.n, self.d):
            raise DimensionMismatch("circuits act on different systems")
        return CliffordCircuit(self.gates + other.gates, self.n, self.d)

    def unitary(self) -> np.ndarray:
        D = self.d**self.n
        check_size(D, "circuit unitary")
        return _left_apply_circuit(self, np.eye(D, dtype=complex))

    def to_dict(self) -> dict:
        return {"format_version": 1, "n": self.n, "d": self.d,
                "gates": [g.to_dict() for g in self.gates]}

    @classmethod
    def from_dict(cls, data: dict) -> "CliffordCircuit":
        return cls(tuple(Gate.from_dict(g) for g in data["gates"]), int(data["n"]), int(data["d"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def identity_circuit(n: int, d: int) -> CliffordCircuit:
    return CliffordCircuit((), n, d)


def _left_apply(local: np.ndarray, sites: Sequence[int], M: np.ndarray, n: int, d: int) -> np.ndarray:
    """(local acting on ``sites``) @ M, for M with d^n rows."""
    cols = M.shape[1]
    k = len(sites)
    T = M.reshape((d,) * n + (cols,))
    L = local.reshape((d,) * (2 * k))
    out = np.tensordot(L, T, axes=(list(range(k, 2 * k)), list(sites)))
    out = np.moveaxis(out, list(range(k)), list(sites))
    return out.reshape(d**n, cols)


def _left_apply_circuit(circuit: CliffordCircuit, M: np.ndarray) -> np.ndarray:
    for g in circuit.gates:
        M = _left_apply(gate_matrix(g.kind, circuit.d, g.param), g.targets, M, circuit.n, circuit.d)
    return M


def apply(circuit: CliffordCircuit, rho: DensityOperator) -> DensityOperator:
    """U rho U^dagger."""
    if (rho.n, rho.d) != (circuit.n, circuit.d):
        raise DimensionMismatch("circuit and state act on different systems")
    A = _left_apply_circuit(circuit, rho.matrix)
    B = _left_apply_circuit(circuit, A.conj().T)
    return DensityOperator(B, rho.n, rho.d, validate=False)


def apply_vector(circuit: CliffordCircuit, psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1, 1)
    if psi.shape[0] != circuit.d**circuit.n:
        raise DimensionMismatch("circuit and vector act on different systems")
    return _left_apply_circuit(circuit, psi).reshape(-1)


def prepare_stabilizer(circuit: CliffordCircuit) -> DensityOperator:
    """U|0...0><0...0|U^dagger."""
    psi = np.zeros(circuit.d**circuit.n, dtype=complex)
    psi[0] = 1
    return DensityOperator.from_vector(apply_vector(circuit, psi), circuit.n, circuit.d)


def _infer_system(D: int) -> tuple[int, int]:
    for d in range(2, D + 1):
        if D % d == 0:
            n, rest = 0, D
            while rest % d == 0:
                rest //= d
                n += 1
            if rest != 1:
                raise DimensionMismatch(f"dimension {D} is not a prime power")
            return n, d
    raise DimensionMismatch(f"dimension {D} is not a prime power")


def weyl_image(A: np.ndarray, n: int, d: int, tol: float = CLIFFORD_TOL) -> tuple[PhasePoint, complex] | None:
    """If A = c * w(y) for a unit-modulus c, return (y, c); else None."""
    coef = operator_coefficients(A, n, d) / d**n
    P, Q = np.unravel_index(np.argmax(np.abs(coef)), coef.shape)
    c = coef[P, Q]
    if abs(abs(c) - 1) > tol:
        return None
    rest = np.abs(coef).copy()
    rest[P, Q] = 0
    if rest.max() > tol:
        return None
    return PhasePoint.from_index(int(P), int(Q), n, d), complex(c)


def is_clifford(U: np.ndarray, n: int | None = None, d: int | None = None) -> bool:
    """True iff U maps each Z_i and X_i to a phase times a Weyl operator."""
    U = np.asarray(U, dtype=complex)
    if n is None or d is None:
        n, d = _infer_system(U.shape[0])
    if np.abs(U @ U.conj().T - np.eye(U.shape[0])).max() > UNITARY_TOL:
        raise NotCliffordError("input is not unitary")
    for i in range(n):
        for p, q in ((1, 0), (0, 1)):
            pv, qv = [0] * n, [0] * n
            pv[i], qv[i] = p, q
            w = weyl_matrix(PhasePoint(tuple(pv), tuple(qv), d))
            if weyl_image(U @ w @ U.conj().T, n, d) is None:
                return False
    return True


def random_clifford(n: int, d: int, depth: int, seed) -> CliffordCircuit:
    """Word of ``depth`` generator gates drawn from ``np.random.default_rng(seed)``."""
    check_modulus(d)
    if depth < 1:
        raise ValueError("depth must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    kinds = ["FOURIER", "PHASE", "MULT", "WEYL"] + (["SUM"] if n > 1 else [])
    gates = []
    for _ in range(depth):
        kind = kinds[rng.integers(len(kinds))]
        if kind == "SUM":
            c, t = rng.choice(n, size=2, replace=False)
            gates.append(Gate(kind, (int(c), int(t))))
            continue
        site = (int(rng.integers(n)),)
        if kind == "MULT":
            gates.append(Gate(kind, site, int(rng.integers(1, d))))
        elif kind == "WEYL":
            gates.append(Gate(kind, site, (int(rng.integers(d)), int(rng.integers(d)))))
        else:
            gates.append(Gate(kind, site))
    return CliffordCircuit(tuple(gates), n, d)


# ---------------------------------------------------------------- symbolic action

def phase_exponent(c: complex, d: int, tol: float = 1e-9) -> int:
    """m with c = exp(i pi m / d); raises if c is not such a root of unity."""
    m = int(np.rint(np.angle(c) * d / np.pi)) % (2 * d)
    if abs(c - np.exp(1j * np.pi * m / d)) > tol:
        raise ValueError(f"{c} is not a {2 * d}-th root of unity")
    return m


@functools.lru_cache(maxsize=None)
def _local_table(kind: str, param, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Conjugation table of a gate on its own k sites.

    Returns (labels, phases): for a local label v (flattened [p | q] over
    the k sites in base d), ``G w(v) G^dagger = exp(i pi phases[v] / d) w(labels[v])``.
    """
    k = 2 if kind == "SUM" else 1
    G = gate_matrix(kind, d, param)
    size = d ** (2 * k)
    labels = np.zeros((size, 2 * k), dtype=np.int64)
    phases = np.zeros(size, dtype=np.int64)
    for idx in range(size):
        v = np.array(np.unravel_index(idx, (d,) * (2 * k)))
        x = PhasePoint(tuple(v[:k]), tuple(v[k:]), d)
        img = weyl_image(G @ weyl_matrix(x) @ G.conj().T, k, d)
        if img is None:
            raise NotCliffordError(f"{kind} is not Clifford at d={d}")
        y, c = img
        labels[idx] = y.as_array()
        phases[idx] = phase_exponent(c, d)
    labels.setflags(write=False)
    phases.setflags(write=False)
    return labels, phases


def _gate_on_label(g: Gate, v: np.ndarray, m: int, n: int, d: int) -> tuple[np.ndarray, int]:
    labels, phases = _local_table(g.kind, g.param, d)
    sites = list(g.targets)
    k = len(sites)
    local = np.concatenate([v[sites], v[[n + s for s in sites]]])
    idx = int(np.ravel_multi_index(tuple(local), (d,) * (2 * k)))
    out = v.copy()
    out[sites] = labels[idx, :k]
    out[[n + s for s in sites]] = labels[idx, k:]
    return out, (m + int(phases[idx])) % (2 * d)


def conjugate_point(circuit: CliffordCircuit, x: PhasePoint, phase: int = 0) -> tuple[PhasePoint, int]:
    """Symbolic U (e^{i pi phase/d} w(x)) U^dagger as (label, phase exponent)."""
    if (x.n, x.d) != (circuit.n, circuit.d):
        raise DimensionMismatch("point and circuit act on different systems")
    v, m = x.as_array(), phase % (2 * circuit.d)
    for g in circuit.gates:
        v, m = _gate_on_label(g, v, m, circuit.n, circuit.d)
    return PhasePoint.from_array(v, circuit.d), m


@functools.lru_cache(maxsize=None)
def _single_site_reducers(d: int) -> dict[tuple[int, int], tuple[Gate, ...]]:
    """Shortest single-site gate words taking each nonzero label to Z = (1, 0)."""
    moves = [("FOURIER", None), ("PHASE", None)] + [("MULT", a) for a in range(2, d)]
    target = (1, 0)
    words: dict[tuple[int, int], tuple[Gate, ...]] = {}
    for start in [(p, q) for p in range(d) for q in range(d) if (p, q) != (0, 0)]:
        seen = {start: ()}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            if cur == target:
                break
            for kind, param in moves:
                labels, _ = _local_table(kind, param, d)
                nxt = tuple(int(v) for v in labels[cur[0] * d + cur[1]])
                if nxt not in seen:
                    seen[nxt] = seen[cur] + (Gate(kind, (0,), param),)
                    queue.append(nxt)
        words[start] = seen[target]
    return words


def canonicalize(G: IsotropicSubgroup) -> CliffordCircuit:
    """Clifford U with U (phase_i w(g_i)) U^dagger = Z_i exactly, for each generator.

    Consequently U M U^dagger = |0><0|^{(n-k)} (x) (I/d)^{(x)k} for the mean
    state M with stabilizer group G of size d^{n-k}.
    """
    n, d = G.n, G.d
    gens = list(G.generators)
    if not is_isotropic(gens):
        raise NonIsotropicError("generators do not commute")
    if len(symplectic_reduce(gens)) != len(gens):
        raise NonIsotropicError("generators are not independent")
    cur = [(g.as_array(), phase_exponent(c, d)) for g, c in zip(gens, G.phases)]
    reducers = _single_site_reducers(d)
    gates: list[Gate] = []

    def push(g: Gate):
        gates.append(g)
        for j, (v, m) in enumerate(cur):
            cur[j] = _gate_on_label(g, v, m, n, d)

    def site(j: int, l: int) -> tuple[int, int]:
        v = cur[j][0]
        return int(v[l]), int(v[n + l])

    def push_until(g: Gate, j: int, done) -> None:
        for _ in range(d):
            if done():
                return
            push(g)
        if not done():
            raise RuntimeError(f"elimination stalled on generator {j}")

    for i in range(len(gens)):
        for l in range(i, n):
            if site(i, l) != (0, 0):
                for g in reducers[site(i, l)]:
                    push(Gate(g.kind, (l,), g.param))
        nz = [l for l in range(i, n) if site(i, l) != (0, 0)]
        if not nz:
            raise NonIsotropicError("generators are not independent")
        if nz[0] != i:
            push(Gate("SUM", (i, nz[0])))
            for g in reducers[site(i, i)]:
                push(Gate(g.kind, (i,), g.param))
            nz = [l for l in range(i, n) if site(i, l) != (0, 0)]
        for l in nz:
            if l != i:
                push_until(Gate("SUM", (l, i)), i, lambda l=l: site(i, l) == (0, 0))
        for j in range(i):
            if site(i, j)[1] != 0:
                raise NonIsotropicError("generators do not commute")
            if site(i, j) != (0, 0):
                push_until(Gate("SUM", (j, i)), i, lambda j=j: site(i, j) == (0, 0))
    for i in range(len(gens)):
        push_until(Gate("WEYL", (i,), (0, 1)), i, lambda i=i: cur[i][1] == 0)

    for i, (v, m) in enumerate(cur):
        expect = np.zeros(2 * n, dtype=np.int64)
        expect[i] = 1
        if m != 0 or not np.array_equal(v, expect):
            raise RuntimeError(f"canonicalization failed for generator {i}")
    return CliffordCircuit(tuple(gates), n, d)


def canonical_form(n: int, d: int, k: int) -> np.ndarray:
    """|0><0|^{(n-k)} (x) (I/d)^{(x)k}."""
    zero = np.zeros((d, d))
    zero[0, 0] = 1
    out = np.ones((1, 1))
    for i in range(n):
        out = np.kron(out, zero if i < n - k else np.eye(d) / d)
    return out.astype(complex)


def stabilizer_generators_of(circuit: CliffordCircuit) -> list[tuple[PhasePoint, int]]:
    """Phased generators U Z_i U^dagger of the state prepared by ``circuit``."""
    out = []
    for i in range(circuit.n):
        pv = [0] * circuit.n
        pv[i] = 1
        out.append(conjugate_point(circuit, PhasePoint(tuple(pv), (0,) * circuit.n, circuit.d)))
    return out


def load_circuit(path) -> CliffordCircuit:
    with open(path) as fh:
        return CliffordCircuit.from_dict(json.load(fh))


def save_circuit(circuit: CliffordCircuit, path) -> None:
    with open(path, "w") as fh:
        fh.write(circuit.to_json() + "\n")


def concatenate(circuits: Iterable[CliffordCircuit]) -> CliffordCircuit:
    circuits = list(circuits)
    out = circuits[0]
    for c in circuits[1:]:
        out = out.then(c)
    return out
