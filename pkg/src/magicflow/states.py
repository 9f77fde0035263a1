"""State builders: computational zeros, the magic-state family, random states."""
from __future__ import annotations

import numpy as np

from .clifford import CliffordCircuit, apply_vector, random_clifford
from .operators import DensityOperator
from .phase_space import (IsotropicSubgroup, PhasePoint, check_modulus, is_isotropic,
                          symplectic_reduce)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def magic_vector(d: int) -> np.ndarray:
    """(|0> + |1>)/sqrt(2) for odd d; (|0> + e^{i pi/4}|1>)/sqrt(2) for d = 2."""
    check_modulus(d)
    v = np.zeros(d, dtype=complex)
    v[0] = 1
    v[1] = np.exp(1j * np.pi / 4) if d == 2 else 1
    return v / np.sqrt(2)


def zero_vector(n: int, d: int) -> np.ndarray:
    v = np.zeros(d**n, dtype=complex)
    v[0] = 1
    return v


def zero_state(n: int, d: int) -> DensityOperator:
    return DensityOperator.from_vector(zero_vector(n, d), n, d)


def magic_product_vector(n: int, d: int, k: int) -> np.ndarray:
    """|magic>^{(x)k} (x) |0>^{(x)(n-k)}."""
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, {n}], got {k}")
    zero = np.zeros(d, dtype=complex)
    zero[0] = 1
    v = np.ones(1, dtype=complex)
    for i in range(n):
        v = np.kron(v, magic_vector(d) if i < k else zero)
    return v


def psi_k(n: int, d: int, k: int, circuit: CliffordCircuit | None = None,
          seed=None, depth: int | None = None) -> DensityOperator:
    """U_C |magic>^{(x)k} (x) |0>^{(x)(n-k)}.

    Without ``circuit`` a random Clifford word is drawn from ``seed``; with
    neither, U_C is the identity.
    """
    v = magic_product_vector(n, d, k)
    if circuit is None and seed is not None:
        circuit = random_clifford(n, d, depth or default_depth(n), seed)
    if circuit is not None:
        v = apply_vector(circuit, v)
    return DensityOperator.from_vector(v, n, d)


def default_depth(n: int) -> int:
    return 10 * n + 10


def random_pure_state(n: int, d: int, seed) -> DensityOperator:
    rng = _rng(seed)
    D = d**n
    psi = rng.normal(size=D) + 1j * rng.normal(size=D)
    return DensityOperator.from_vector(psi, n, d)


def random_mixed_state(n: int, d: int, seed, rank: int | None = None) -> DensityOperator:
    rng = _rng(seed)
    D = d**n
    A = rng.normal(size=(D, rank or D)) + 1j * rng.normal(size=(D, rank or D))
    M = A @ A.conj().T
    return DensityOperator(M / np.trace(M).real, n, d)


def random_isotropic_subgroup(n: int, d: int, seed, rank: int | None = None) -> IsotropicSubgroup:
    """Random independent commuting generators with random root-of-unity phases.

    Generators are drawn by rejection: a uniform point is kept if it commutes
    with every kept generator and lies outside their span.
    """
    rng = _rng(seed)
    if rank is None:
        rank = int(rng.integers(0, n + 1))
    if not 0 <= rank <= n:
        raise ValueError(f"rank must lie in [0, {n}]")
    gens: list[PhasePoint] = []
    while len(gens) < rank:
        x = PhasePoint.from_array(rng.integers(0, d, size=2 * n), d)
        trial = gens + [x]
        if is_isotropic(trial) and len(symplectic_reduce(trial)) == len(trial):
            gens = trial
    # stabilizer phases are d-th roots of unity (+-1 for qubits)
    phases = [np.exp(2j * np.pi * int(rng.integers(d)) / d) for _ in gens]
    return IsotropicSubgroup(tuple(gens), tuple(phases), n, d)
