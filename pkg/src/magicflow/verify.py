"""Named property suites over the convolution flow and the mean state.

Each suite takes ``(n, d, seed, samples)``, draws everything from one
``np.random.default_rng(seed)`` and returns a :class:`SuiteResult`.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .clifford import apply, canonicalize, prepare_stabilizer, random_clifford
from .convolution import (convolve3_char, convolve3_dense, convolve_char, convolve_dense,
                          default_params, self_convolve, self_convolve_char,
                          unit_support_state, validate_qubit_duality)
from .errors import UnsupportedConfiguration
from .magic import (entropy_bound, entropy_deficit, magic_gap, mean_state,
                    required_iterations)
from .operators import char_function, inverse_char, trace_distance, von_neumann_entropy
from .phase_space import check_modulus
from .states import default_depth, psi_k, random_mixed_state, random_pure_state

SUMMARY_FORMAT_VERSION = 1
DUALITY_TOL = 1e-10
STABILITY_TOL = 1e-9
CLT_TOL = 1e-6
CLT_STEPS = 8
CLT_MIN_GAP = 0.05
ENTROPY_TOL = 1e-9
CANONICAL_TOL = 1e-9
BOUND_STEPS = 6


@dataclass
class SuiteResult:
    suite: str
    n: int
    d: int
    seed: int
    samples: int
    tolerance: float
    checks: int = 0
    max_error: float = 0.0
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, error: float, ok: bool, label: str) -> None:
        self.checks += 1
        self.max_error = max(self.max_error, float(error))
        if not ok:
            self.failures.append(label)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        out["format_version"] = SUMMARY_FORMAT_VERSION
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _stabilizer(n, d, rng):
    return prepare_stabilizer(random_clifford(n, d, default_depth(n), rng))


def _dressed_magic(n, d, rng):
    return psi_k(n, d, int(rng.integers(n + 1)), seed=rng)


def duality(n: int, d: int, seed: int = 0, samples: int = 50) -> SuiteResult:
    """Dense channel vs pointwise product of tables, on random mixed inputs."""
    res = SuiteResult("duality", n, d, seed, samples, DUALITY_TOL)
    rng = np.random.default_rng(seed)
    if d == 2:
        validate_qubit_duality(seed)
    for i in range(samples):
        if d == 2:
            states = [random_mixed_state(n, d, rng) for _ in range(3)]
            dense = char_function(convolve3_dense(*states)).values
            fast = convolve3_char(*[char_function(s) for s in states]).values
        else:
            rho, sigma = random_mixed_state(n, d, rng), random_mixed_state(n, d, rng)
            dense = char_function(convolve_dense(rho, sigma)).values
            fast = convolve_char(char_function(rho), char_function(sigma)).values
        err = float(np.abs(dense - fast).max())
        res.record(err, err < DUALITY_TOL, f"sample {i}: error {err:.3e}")
    return res


def qubit_duality(n: int, d: int = 2, seed: int = 0, samples: int = 50) -> SuiteResult:
    if d != 2:
        raise UnsupportedConfiguration("the qubit_duality suite runs at d = 2")
    out = duality(n, 2, seed, samples)
    out.suite = "qubit_duality"
    return out


def stability(n: int, d: int, seed: int = 0, samples: int = 20) -> SuiteResult:
    """Convolving stabilizer states keeps every |Xi| in {0, 1}."""
    res = SuiteResult("stability", n, d, seed, samples, STABILITY_TOL)
    rng = np.random.default_rng(seed)
    for i in range(samples):
        if d == 2:
            out = convolve3_dense(*[_stabilizer(n, d, rng) for _ in range(3)])
        else:
            out = convolve_dense(_stabilizer(n, d, rng), _stabilizer(n, d, rng))
        mag = np.abs(char_function(out).values)
        err = float(np.minimum(mag, np.abs(1 - mag)).max())
        res.record(err, err < STABILITY_TOL, f"sample {i}: |Xi| off {{0,1}} by {err:.3e}")
    return res


def clt(n: int, d: int, seed: int = 0, samples: int = 10) -> SuiteResult:
    """Trace distance to the (phase-tracked) mean state after eight steps.

    The comparison state keeps the unit entries of the current iterate:
    on the group, one step maps a character chi to chi^{s+t} (chi^3 for
    qubits), which is the original mean state up to a Weyl conjugation.
    Its label set is also checked against the group of the input.
    """
    res = SuiteResult("clt", n, d, seed, samples, CLT_TOL)
    rng = np.random.default_rng(seed)
    done = tries = 0
    while done < samples:
        if tries >= 100 * samples:
            res.failures.append(f"only {done} states with magic gap above {CLT_MIN_GAP} found")
            break
        tries += 1
        rho = random_pure_state(n, d, rng) if tries % 2 else _dressed_magic(n, d, rng)
        xi = char_function(rho)
        mg = magic_gap(xi)
        if mg <= CLT_MIN_GAP:
            continue
        done += 1
        cur = xi
        for _ in range(CLT_STEPS):
            cur = self_convolve_char(cur)
        rho_L = inverse_char(cur)
        dist = trace_distance(rho_L, unit_support_state(cur))
        same_group = bool(np.array_equal(np.abs(cur.values) > 0.5, np.abs(xi.values) > 1 - 1e-9))
        res.record(dist, dist < CLT_TOL and same_group,
                   f"sample {done}: distance {dist:.3e}, group kept {same_group}")
    return res


def max_entropy(n: int, d: int, seed: int = 0, samples: int = 100) -> SuiteResult:
    """S(rho) <= S(M(rho)) on pure, mixed, dressed-magic and stabilizer states."""
    res = SuiteResult("max_entropy", n, d, seed, samples, ENTROPY_TOL)
    rng = np.random.default_rng(seed)
    makers = (random_pure_state, random_mixed_state, _dressed_magic, _stabilizer)
    for i in range(samples):
        rho = makers[i % len(makers)](n, d, rng)
        S = von_neumann_entropy(rho)
        S_M = von_neumann_entropy(mean_state(char_function(rho)).dense())
        excess = S - S_M
        res.record(max(excess, 0.0), excess <= ENTROPY_TOL, f"sample {i}: S - S(M) = {excess:.3e}")
    return res


def clifford_covariance(n: int, d: int, seed: int = 0, samples: int = 10) -> SuiteResult:
    """Mean states of one flow step on rho and on U rho U^dagger canonicalize alike."""
    res = SuiteResult("clifford_covariance", n, d, seed, samples, CANONICAL_TOL)
    rng = np.random.default_rng(seed)
    for i in range(samples):
        rho = _dressed_magic(n, d, rng)
        U = random_clifford(n, d, default_depth(n), rng)
        mats = []
        for st in (rho, apply(U, rho)):
            M = mean_state(char_function(self_convolve(st, mode="dense")))
            mats.append(apply(canonicalize(M.group), M.dense()).matrix)
        err = float(np.abs(mats[0] - mats[1]).max())
        res.record(err, err < CANONICAL_TOL, f"sample {i}: canonical forms differ by {err:.3e}")
    return res


def entropy_bound_suite(n: int, d: int, seed: int = 0, samples: int = 10) -> SuiteResult:
    """S(M) - S(flow_L rho) <= bound for L <= 6, and the flow lands near S(M).

    The deficit is measured with :func:`entropy_deficit`, which stays exact
    far below the roundoff floor of a plain eigenvalue difference.
    """
    res = SuiteResult("entropy_bound", n, d, seed, samples, 0.0)
    rng = np.random.default_rng(seed)
    half = 0.5 * np.log(d)
    for i in range(samples):
        rho = random_pure_state(n, d, rng) if i % 2 else _dressed_magic(n, d, rng)
        xi = char_function(rho)
        mg = magic_gap(xi)
        S_M = von_neumann_entropy(mean_state(xi).dense())
        cur = xi
        for L in range(1, BOUND_STEPS + 1):
            cur = self_convolve_char(cur)
            gap = entropy_deficit(cur)
            bound = entropy_bound(L, mg, S_M)
            res.record(max(gap - bound, 0.0), gap <= bound,
                       f"sample {i} L={L}: deficit {gap:.3e} > bound {bound:.3e}")
        if mg > 0:
            L_req = required_iterations(n, d, mg)
            cur = xi
            for _ in range(L_req):
                cur = self_convolve_char(cur)
            gap = S_M - von_neumann_entropy(inverse_char(cur))
            res.record(max(abs(gap) - half, 0.0), abs(gap) < half,
                       f"sample {i}: |S(M) - S| = {gap:.3e} at L={L_req}")
    return res


SUITES: dict[str, tuple[Callable[..., SuiteResult], int, int]] = {
    # name: (function, default n, default d)
    "duality": (duality, 1, 7),
    "stability": (stability, 2, 2),
    "clt": (clt, 1, 7),
    "max_entropy": (max_entropy, 2, 7),
    "clifford_covariance": (clifford_covariance, 2, 7),
    "qubit_duality": (qubit_duality, 1, 2),
    "entropy_bound": (entropy_bound_suite, 1, 7),
}


def run_suite(name: str, n: int | None = None, d: int | None = None, seed: int = 0,
              samples: int | None = None) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    fn, n0, d0 = SUITES[name]
    n = n0 if n is None else n
    d = check_modulus(d0 if d is None else d)
    if d != 2 and name != "max_entropy":
        default_params(d)  # raises early for d in {3, 5}
    kwargs = {} if samples is None else {"samples": samples}
    return fn(n, d, seed, **kwargs)
